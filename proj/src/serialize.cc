// Copyright 2026 The KBLSTM Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "kblstm/serialize.h"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "kblstm/errors.h"
#include "kblstm/text.h"

namespace kblstm {
namespace {

constexpr char kMagic[4] = {'K', 'B', 'L', '1'};

void put_u32(std::ostream& out, uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(b, 4);
}

void put_u64(std::ostream& out, uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(b, 8);
}

void put_str(std::ostream& out, const std::string& s) {
  put_u32(out, static_cast<uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void read_exact(std::istream& in, char* dst, size_t n) {
  in.read(dst, static_cast<std::streamsize>(n));
  if (static_cast<size_t>(in.gcount()) != n) {
    throw InputError("model file is truncated");
  }
}

uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  read_exact(in, reinterpret_cast<char*>(b), 4);
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
  return v;
}

uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  read_exact(in, reinterpret_cast<char*>(b), 8);
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
  return v;
}

std::string get_str(std::istream& in) {
  const uint32_t n = get_u32(in);
  std::string s(n, '\0');
  if (n > 0) read_exact(in, s.data(), n);
  return s;
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Tensor tensor_of(const Matrix& m) {
  return {{m.rows(), m.cols()}, {m.values().begin(), m.values().end()}};
}

Tensor tensor_of(const Vector& v) { return {{v.size()}, v}; }

Matrix matrix_of(const Tensor& t) {
  if (t.dims.size() != 2) throw InputError("expected a rank-2 tensor");
  return Matrix(t.dims[0], t.dims[1], t.values);
}

std::string join_lines(const std::vector<std::string>& items) {
  return join(items, "\n");
}

std::vector<std::string> split_lines(const std::string& s) {
  if (s.empty()) return {};
  return split(s, '\n');
}

double get_double(const Container& c, const std::string& key) {
  double v = 0.0;
  if (!parse_double(c.value(key), v)) {
    throw InputError("model key '" + key + "' is not a number");
  }
  return v;
}

long long get_int(const Container& c, const std::string& key) {
  long long v = 0;
  if (!parse_int(c.value(key), v)) {
    throw InputError("model key '" + key + "' is not an integer");
  }
  return v;
}

void add_lstm(Container& c, const std::string& prefix, const LstmParams& p) {
  const std::pair<const char*, const Matrix*> mats[] = {
      {"W_i", &p.w_i}, {"W_f", &p.w_f}, {"W_o", &p.w_o}, {"W_c", &p.w_c},
      {"U_i", &p.u_i}, {"U_f", &p.u_f}, {"U_o", &p.u_o}, {"U_c", &p.u_c}};
  for (const auto& [n, m] : mats) c.tensors.emplace_back(prefix + n, tensor_of(*m));
  const std::pair<const char*, const Vector*> vecs[] = {
      {"b_i", &p.b_i}, {"b_f", &p.b_f}, {"b_o", &p.b_o}, {"b_c", &p.b_c}};
  for (const auto& [n, v] : vecs) c.tensors.emplace_back(prefix + n, tensor_of(*v));
}

LstmParams get_lstm(const Container& c, const std::string& prefix,
                    bool use_bias) {
  LstmParams p;
  p.w_i = matrix_of(c.tensor(prefix + "W_i"));
  p.w_f = matrix_of(c.tensor(prefix + "W_f"));
  p.w_o = matrix_of(c.tensor(prefix + "W_o"));
  p.w_c = matrix_of(c.tensor(prefix + "W_c"));
  p.u_i = matrix_of(c.tensor(prefix + "U_i"));
  p.u_f = matrix_of(c.tensor(prefix + "U_f"));
  p.u_o = matrix_of(c.tensor(prefix + "U_o"));
  p.u_c = matrix_of(c.tensor(prefix + "U_c"));
  p.b_i = c.tensor(prefix + "b_i").values;
  p.b_f = c.tensor(prefix + "b_f").values;
  p.b_o = c.tensor(prefix + "b_o").values;
  p.b_c = c.tensor(prefix + "b_c").values;
  p.use_bias = use_bias;
  p.validate();
  return p;
}

}  // namespace

const Tensor& Container::tensor(const std::string& name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return t;
  }
  throw InputError("model file has no tensor '" + name + "'");
}

const std::string& Container::value(const std::string& key) const {
  auto it = kv.find(key);
  if (it == kv.end()) throw InputError("model file has no key '" + key + "'");
  return it->second;
}

void write_container(const Container& c, std::ostream& out) {
  out.write(kMagic, 4);
  put_u32(out, kContainerVersion);
  put_u32(out, static_cast<uint32_t>(c.kv.size()));
  for (const auto& [k, v] : c.kv) {
    put_str(out, k);
    put_str(out, v);
  }
  put_u32(out, static_cast<uint32_t>(c.tensors.size()));
  for (const auto& [name, t] : c.tensors) {
    put_str(out, name);
    put_u32(out, static_cast<uint32_t>(t.dims.size()));
    uint64_t count = 1;
    for (uint64_t d : t.dims) {
      put_u64(out, d);
      count *= d;
    }
    if (count != t.values.size()) {
      throw DimensionError("tensor '" + name + "' dims disagree with its data");
    }
    for (double v : t.values) put_u64(out, std::bit_cast<uint64_t>(v));
  }
  if (!out) throw InputError("failed writing model container");
}

Container read_container(std::istream& in) {
  char magic[4];
  read_exact(in, magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) {
    throw InputError("not a KBL1 model file (bad magic)");
  }
  const uint32_t version = get_u32(in);
  if (version != kContainerVersion) {
    throw InputError("unsupported model version " + std::to_string(version));
  }
  Container c;
  const uint32_t n_kv = get_u32(in);
  for (uint32_t i = 0; i < n_kv; ++i) {
    std::string k = get_str(in);
    c.kv[k] = get_str(in);
  }
  const uint32_t n_t = get_u32(in);
  for (uint32_t i = 0; i < n_t; ++i) {
    std::string name = get_str(in);
    Tensor t;
    const uint32_t rank = get_u32(in);
    uint64_t count = 1;
    for (uint32_t r = 0; r < rank; ++r) {
      t.dims.push_back(get_u64(in));
      count *= t.dims.back();
    }
    if (count > (uint64_t{1} << 32)) throw InputError("tensor too large");
    t.values.resize(count);
    for (auto& v : t.values) v = std::bit_cast<double>(get_u64(in));
    c.tensors.emplace_back(std::move(name), std::move(t));
  }
  return c;
}

Container to_container(const TaggerModel& m) {
  const auto& cfg = m.config;
  Container c;
  c.kv["format"] = "kblstm-tagger";
  c.kv["word_dim"] = std::to_string(cfg.word_dim);
  c.kv["cap_dim"] = std::to_string(cfg.cap_dim);
  c.kv["hidden"] = std::to_string(cfg.hidden);
  c.kv["objective"] = objective_name(cfg.objective);
  c.kv["knowledge"] = knowledge_name(cfg.knowledge);
  c.kv["unit"] = cfg.unit == UnitMode::kChunk ? "chunk" : "token";
  c.kv["scheme"] = cfg.scheme == SpanScheme::kBio ? "bio" : "unit";
  c.kv["dropout"] = fmt_double(cfg.dropout);
  c.kv["lr"] = fmt_double(cfg.learning_rate);
  c.kv["clip_norm"] = fmt_double(cfg.clip_norm);
  c.kv["unk_rate"] = fmt_double(cfg.unk_rate);
  c.kv["epochs"] = std::to_string(cfg.epochs);
  c.kv["patience"] = std::to_string(cfg.patience);
  c.kv["seed"] = std::to_string(cfg.seed);
  c.kv["use_bias"] = cfg.use_bias ? "1" : "0";
  c.kv["train_projection"] = cfg.train_projection ? "1" : "0";
  c.kv["constrained_decode"] = cfg.constrained_decode ? "1" : "0";
  c.kv["trained"] = m.trained ? "1" : "0";
  c.kv["words"] = join_lines(m.words.names());
  c.kv["tags"] = join_lines(m.tags.names());
  c.kv["concepts"] = join_lines(m.lexicon.concepts().names());
  std::vector<std::string> entries;
  for (const auto& [surface, ids] : m.lexicon.entries()) {
    std::vector<std::string> names;
    for (int id : ids) names.push_back(m.lexicon.concepts().name(id));
    entries.push_back(surface + '\t' + join(names, ","));
  }
  c.kv["lexicon"] = join_lines(entries);

  c.tensors.emplace_back("word_emb", tensor_of(m.word_emb));
  c.tensors.emplace_back("cap_emb", tensor_of(m.cap_emb));
  add_lstm(c, "fwd/", m.fwd);
  add_lstm(c, "bwd/", m.bwd);
  if (cfg.knowledge == KnowledgeMode::kAttention) {
    c.tensors.emplace_back("attn/W_v", tensor_of(m.attn.w_v));
    c.tensors.emplace_back("attn/W_s", tensor_of(m.attn.w_s));
    c.tensors.emplace_back("attn/W_b_fwd", tensor_of(m.attn.w_b_fwd));
    c.tensors.emplace_back("attn/W_b_bwd", tensor_of(m.attn.w_b_bwd));
    c.tensors.emplace_back("attn/U_b_fwd", tensor_of(m.attn.u_b_fwd));
    c.tensors.emplace_back("attn/U_b_bwd", tensor_of(m.attn.u_b_bwd));
    c.tensors.emplace_back("attn/W_p", tensor_of(m.attn.w_p));
  }
  c.tensors.emplace_back("out", tensor_of(m.out));
  c.tensors.emplace_back("trans", tensor_of(m.trans.matrix()));
  c.tensors.emplace_back("concept_vectors", tensor_of(m.lexicon.vectors()));
  return c;
}

TaggerModel from_container(const Container& c) {
  if (c.value("format") != "kblstm-tagger") {
    throw InputError("model file does not hold a tagger");
  }
  TaggerModel m;
  auto& cfg = m.config;
  cfg.word_dim = static_cast<size_t>(get_int(c, "word_dim"));
  cfg.cap_dim = static_cast<size_t>(get_int(c, "cap_dim"));
  cfg.hidden = static_cast<size_t>(get_int(c, "hidden"));
  cfg.objective = parse_objective(c.value("objective"));
  cfg.knowledge = parse_knowledge(c.value("knowledge"));
  cfg.unit = c.value("unit") == "chunk" ? UnitMode::kChunk : UnitMode::kToken;
  cfg.scheme = c.value("scheme") == "bio" ? SpanScheme::kBio : SpanScheme::kUnit;
  cfg.dropout = get_double(c, "dropout");
  cfg.learning_rate = get_double(c, "lr");
  cfg.clip_norm = get_double(c, "clip_norm");
  cfg.unk_rate = get_double(c, "unk_rate");
  cfg.epochs = static_cast<int>(get_int(c, "epochs"));
  cfg.patience = static_cast<int>(get_int(c, "patience"));
  cfg.seed = std::stoull(c.value("seed"));
  cfg.use_bias = c.value("use_bias") == "1";
  cfg.train_projection = c.value("train_projection") == "1";
  cfg.constrained_decode = c.value("constrained_decode") == "1";
  m.trained = c.value("trained") == "1";
  m.words = Vocabulary(split_lines(c.value("words")));
  m.tags = Vocabulary(split_lines(c.value("tags")));

  EmbeddingTable concepts;
  concepts.ids = Vocabulary(split_lines(c.value("concepts")));
  concepts.vectors = matrix_of(c.tensor("concept_vectors"));
  m.lexicon = ConceptLexicon(std::move(concepts));
  for (const auto& line : split_lines(c.value("lexicon"))) {
    const auto fields = split(line, '\t');
    if (fields.size() != 2) throw InputError("bad lexicon entry in model file");
    m.lexicon.add_entry(fields[0], split(fields[1], ','));
  }

  m.word_emb = matrix_of(c.tensor("word_emb"));
  m.cap_emb = matrix_of(c.tensor("cap_emb"));
  m.fwd = get_lstm(c, "fwd/", cfg.use_bias);
  m.bwd = get_lstm(c, "bwd/", cfg.use_bias);
  if (cfg.knowledge == KnowledgeMode::kAttention) {
    m.attn.w_v = matrix_of(c.tensor("attn/W_v"));
    m.attn.w_s = matrix_of(c.tensor("attn/W_s"));
    m.attn.w_b_fwd = matrix_of(c.tensor("attn/W_b_fwd"));
    m.attn.w_b_bwd = matrix_of(c.tensor("attn/W_b_bwd"));
    m.attn.u_b_fwd = matrix_of(c.tensor("attn/U_b_fwd"));
    m.attn.u_b_bwd = matrix_of(c.tensor("attn/U_b_bwd"));
    m.attn.w_p = matrix_of(c.tensor("attn/W_p"));
    m.attn.train_projection = cfg.train_projection;
  }
  m.out = matrix_of(c.tensor("out"));
  m.trans = TransitionTable(m.tags.size());
  m.trans.matrix() = matrix_of(c.tensor("trans"));
  if (m.word_emb.rows() != m.words.size() ||
      m.out.rows() != m.tags.size() || m.out.cols() != m.state_dim()) {
    throw InputError("model file tensors disagree with its vocabularies");
  }
  return m;
}

void save_model(const TaggerModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write model " + path);
  write_container(to_container(model), out);
}

TaggerModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open model " + path);
  return from_container(read_container(in));
}

Container kb_to_container(const KbModel& m) {
  Container c;
  c.kv["format"] = "kblstm-kb";
  c.kv["dim"] = std::to_string(m.dim);
  c.kv["entities"] = join_lines(m.entities.names());
  c.kv["relations"] = join_lines(m.relations.names());
  std::vector<std::string> cats;
  for (int id : m.categories) cats.push_back(std::to_string(id));
  c.kv["categories"] = join(cats, ",");
  c.kv["words"] = join_lines(m.words.names());
  std::vector<std::string> phrases;
  for (size_t e = 0; e < m.phrases.size(); ++e) {
    if (!m.phrases[e]) continue;
    std::vector<std::string> ws;
    for (int w : m.phrases[e]->words) ws.push_back(std::to_string(w));
    phrases.push_back(std::to_string(e) + '\t' + join(ws, ",") + '\t' +
                      std::to_string(m.phrases[e]->head));
  }
  c.kv["phrases"] = join_lines(phrases);
  c.tensors.emplace_back("entity_vectors", tensor_of(m.entity_vectors));
  Tensor rel;
  rel.dims = {m.relation_matrices.size(), m.dim, m.dim};
  for (const auto& r : m.relation_matrices) {
    rel.values.insert(rel.values.end(), r.values().begin(), r.values().end());
  }
  c.tensors.emplace_back("relation_matrices", std::move(rel));
  c.tensors.emplace_back("word_vectors", tensor_of(m.word_vectors));
  return c;
}

KbModel kb_from_container(const Container& c) {
  if (c.value("format") != "kblstm-kb") {
    throw InputError("model file does not hold a knowledge-graph model");
  }
  KbModel m;
  m.dim = static_cast<size_t>(get_int(c, "dim"));
  m.entities = Vocabulary(split_lines(c.value("entities")));
  m.relations = Vocabulary(split_lines(c.value("relations")));
  const std::string& cats = c.value("categories");
  if (!cats.empty()) {
    for (const auto& s : split(cats, ',')) m.categories.push_back(std::stoi(s));
  }
  m.words = Vocabulary(split_lines(c.value("words")));
  m.entity_vectors = matrix_of(c.tensor("entity_vectors"));
  const Tensor& rel = c.tensor("relation_matrices");
  if (rel.dims.size() != 3 || rel.dims[1] != m.dim || rel.dims[2] != m.dim ||
      rel.dims[0] != m.relations.size()) {
    throw InputError("relation tensor disagrees with the vocabulary");
  }
  const size_t block = m.dim * m.dim;
  for (size_t r = 0; r < rel.dims[0]; ++r) {
    m.relation_matrices.emplace_back(
        m.dim, m.dim,
        std::vector<double>(rel.values.begin() + r * block,
                            rel.values.begin() + (r + 1) * block));
  }
  m.word_vectors = matrix_of(c.tensor("word_vectors"));
  m.phrases.resize(m.entities.size());
  for (const auto& line : split_lines(c.value("phrases"))) {
    const auto f = split(line, '\t');
    if (f.size() != 3) throw InputError("bad phrase entry in model file");
    PhraseEntity p;
    for (const auto& w : split(f[1], ',')) p.words.push_back(std::stoi(w));
    p.head = std::stoi(f[2]);
    m.phrases.at(std::stoul(f[0])) = std::move(p);
  }
  if (m.entity_vectors.rows() != m.entities.size()) {
    throw InputError("entity tensor disagrees with the vocabulary");
  }
  return m;
}

void save_kb_model(const KbModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write model " + path);
  write_container(kb_to_container(model), out);
}

KbModel load_kb_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open model " + path);
  return kb_from_container(read_container(in));
}

}  // namespace kblstm
