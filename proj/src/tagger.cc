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

#include "kblstm/tagger.h"

#include <algorithm>
#include <set>

#include "kblstm/errors.h"
#include "kblstm/text.h"

namespace kblstm {
namespace {

Matrix zeros_of(const Matrix& m) { return Matrix(m.rows(), m.cols()); }

LstmParams lstm_zeros_like(const LstmParams& p) {
  return LstmParams::zeros(p.input_dim(), p.hidden_dim(), p.use_bias);
}

bool is_bio_tagset(const Vocabulary& tags) {
  try {
    BioScheme scheme(tags.names());
    return true;
  } catch (const ConfigError&) {
    return false;
  }
}

}  // namespace

const char* objective_name(Objective o) {
  return o == Objective::kCrf ? "crf" : "softmax";
}

const char* knowledge_name(KnowledgeMode k) {
  switch (k) {
    case KnowledgeMode::kNone: return "none";
    case KnowledgeMode::kFeatures: return "features";
    case KnowledgeMode::kAttention: return "attention";
  }
  return "?";
}

Objective parse_objective(const std::string& s) {
  if (s == "crf") return Objective::kCrf;
  if (s == "softmax") return Objective::kSoftmax;
  throw ConfigError("objective must be 'softmax' or 'crf', got '" + s + "'");
}

KnowledgeMode parse_knowledge(const std::string& s) {
  if (s == "none") return KnowledgeMode::kNone;
  if (s == "features") return KnowledgeMode::kFeatures;
  if (s == "attention") return KnowledgeMode::kAttention;
  throw ConfigError("knowledge must be 'none', 'features' or 'attention', got '" +
                    s + "'");
}

void TaggerConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError(what); };
  if (word_dim < 1) fail("word_dim must be >= 1");
  if (cap_dim < 1) fail("cap_dim must be >= 1");
  if (hidden < 1) fail("hidden must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must lie in [0, 1)");
  if (!(learning_rate > 0.0)) fail("learning rate must be > 0");
  if (!(clip_norm > 0.0)) fail("clip norm must be > 0");
  if (!(unk_rate >= 0.0 && unk_rate < 1.0)) fail("unk rate must lie in [0, 1)");
  if (epochs < 1) fail("epochs must be >= 1");
  if (patience < 1) fail("patience must be >= 1");
}

Sequence token_sequence(const Sentence& sentence, bool strip_types) {
  Sequence seq;
  for (const auto& tok : sentence.tokens) {
    seq.units.push_back(Unit{{tok.surface}, 0});
    seq.gold.push_back(strip_types ? strip_type(tok.tag) : tok.tag);
  }
  return seq;
}

Sequence chunk_sequence(const Sentence& sentence,
                        std::span<const Chunk> chunks) {
  Sequence seq;
  for (const auto& ch : chunks) {
    Unit u;
    for (size_t i = ch.start; i <= ch.end; ++i) {
      u.words.push_back(sentence.tokens.at(i).surface);
    }
    u.head = ch.head - ch.start;
    seq.units.push_back(std::move(u));
    seq.gold.push_back(ch.type);
  }
  return seq;
}

size_t TaggerModel::state_dim() const {
  const size_t base = 2 * config.hidden;
  return config.knowledge == KnowledgeMode::kFeatures
             ? base + lexicon.num_concepts()
             : base;
}

EncodedSequence TaggerModel::encode(const Sequence& seq) const {
  EncodedSequence enc;
  enc.units.reserve(seq.size());
  for (const Unit& u : seq.units) {
    if (u.words.empty()) throw InputError("empty unit in sequence");
    EncodedUnit e;
    for (const auto& w : u.words) {
      const int id = words.find(casefold(w));
      e.words.push_back(id < 0 ? 0 : id);
      e.caps.push_back(static_cast<int>(capitalization_class(w)));
    }
    e.head = std::min(u.head, u.words.size() - 1);
    if (uses_lexicon()) {
      e.candidates = config.unit == UnitMode::kChunk
                         ? lexicon.retrieve_chunk(u.words, e.head)
                         : lexicon.retrieve(u.words[0]);
    }
    enc.units.push_back(std::move(e));
  }
  for (const auto& g : seq.gold) enc.gold.push_back(tags.at(g));
  if (!enc.gold.empty() && enc.gold.size() != enc.units.size()) {
    throw InputError("gold tags do not align with units");
  }
  return enc;
}

TaggerModel init_tagger(const TaggerConfig& config,
                        std::span<const Sequence> train,
                        const ConceptLexicon* lexicon,
                        const EmbeddingTable* pretrained) {
  config.validate();
  if (train.empty()) throw InputError("cannot build a tagger from no data");
  TaggerModel m;
  m.config = config;
  m.words.add(kUnknownWord);
  std::set<std::string> tag_set;
  for (const auto& seq : train) {
    for (const auto& u : seq.units) {
      for (const auto& w : u.words) m.words.add(casefold(w));
    }
    tag_set.insert(seq.gold.begin(), seq.gold.end());
  }
  tag_set.insert("O");
  m.tags.add("O");
  for (const auto& t : tag_set) m.tags.add(t);

  if (m.uses_lexicon()) {
    if (lexicon == nullptr) {
      throw ConfigError(std::string("knowledge mode '") +
                        knowledge_name(config.knowledge) +
                        "' needs a concept lexicon");
    }
    m.lexicon = *lexicon;
  }

  Rng rng(config.seed);
  m.word_emb = Matrix(m.words.size(), config.word_dim);
  fill_uniform(m.word_emb.values(), -0.1, 0.1, rng);
  if (pretrained != nullptr) {
    if (pretrained->vectors.cols() != config.word_dim) {
      throw ConfigError("pretrained word vectors have dimension " +
                        std::to_string(pretrained->vectors.cols()) +
                        ", word_dim is " + std::to_string(config.word_dim));
    }
    for (size_t i = 0; i < pretrained->ids.size(); ++i) {
      const int id = m.words.find(casefold(pretrained->ids.name(i)));
      if (id < 0) continue;
      auto src = pretrained->vectors.row(i);
      std::copy(src.begin(), src.end(), m.word_emb.row(id).begin());
    }
  }
  m.cap_emb = Matrix(kNumCapClasses, config.cap_dim);
  fill_uniform(m.cap_emb.values(), -0.1, 0.1, rng);
  m.fwd = LstmParams::glorot(m.input_dim(), config.hidden, rng, config.use_bias);
  m.bwd = LstmParams::glorot(m.input_dim(), config.hidden, rng, config.use_bias);
  m.out = Matrix(m.tags.size(), m.state_dim());
  fill_glorot(m.out, rng);
  m.trans = TransitionTable(m.tags.size());
  m.trans.enforce_structure();
  // Drawn last so the other tensors do not depend on the knowledge mode.
  if (config.knowledge == KnowledgeMode::kAttention) {
    m.attn = AttnParams::init(m.lexicon.dim(), config.hidden, m.input_dim(),
                              rng, config.train_projection);
  }
  return m;
}

Vector compose_chunk(std::span<const Vector> token_vectors, size_t head) {
  if (token_vectors.empty()) throw InputError("cannot compose an empty chunk");
  if (head >= token_vectors.size()) {
    throw InputError("chunk head " + std::to_string(head) +
                     " outside a chunk of " +
                     std::to_string(token_vectors.size()) + " tokens");
  }
  const size_t dim = token_vectors[0].size();
  Vector out(2 * dim, 0.0);
  const double inv = 1.0 / static_cast<double>(token_vectors.size());
  for (const auto& v : token_vectors) {
    if (v.size() != dim) throw DimensionError("chunk token vectors differ in size");
    for (size_t k = 0; k < dim; ++k) out[k] += inv * v[k];
  }
  std::copy(token_vectors[head].begin(), token_vectors[head].end(),
            out.begin() + dim);
  return out;
}

Vector baseline_fea_state(std::span<const double> h,
                          const CandidateSet& candidates,
                          size_t num_concepts) {
  Vector out(h.begin(), h.end());
  out.resize(h.size() + num_concepts, 0.0);
  for (int id : candidates.ids) {
    if (id < 0 || static_cast<size_t>(id) >= num_concepts) {
      throw VocabularyError("concept id " + std::to_string(id) +
                            " outside the indicator vocabulary");
    }
    out[h.size() + id] = 1.0;
  }
  return out;
}

ForwardCache tagger_forward(const TaggerModel& model,
                            const EncodedSequence& seq, Rng* dropout_rng) {
  if (seq.size() == 0) throw InputError("cannot tag an empty sequence");
  const auto& cfg = model.config;
  const size_t n = seq.size();
  const size_t tok_dim = model.token_dim();
  ForwardCache cache;
  cache.token_inputs.resize(n);
  cache.xs.resize(n);
  for (size_t t = 0; t < n; ++t) {
    const EncodedUnit& u = seq.units[t];
    Vector& flat = cache.token_inputs[t];
    flat.reserve(u.words.size() * tok_dim);
    for (size_t w = 0; w < u.words.size(); ++w) {
      auto we = model.word_emb.row(u.words[w]);
      auto ce = model.cap_emb.row(u.caps[w]);
      flat.insert(flat.end(), we.begin(), we.end());
      flat.insert(flat.end(), ce.begin(), ce.end());
    }
    if (cfg.unit == UnitMode::kChunk) {
      std::vector<Vector> parts;
      for (size_t w = 0; w < u.words.size(); ++w) {
        parts.emplace_back(flat.begin() + w * tok_dim,
                           flat.begin() + (w + 1) * tok_dim);
      }
      cache.xs[t] = compose_chunk(parts, u.head);
    } else {
      cache.xs[t] = flat;
    }
  }
  if (dropout_rng != nullptr && cfg.dropout > 0.0) {
    const double keep = 1.0 - cfg.dropout;
    cache.dropout_masks.resize(n);
    for (size_t t = 0; t < n; ++t) {
      Vector& mask = cache.dropout_masks[t];
      mask.resize(cache.xs[t].size());
      for (size_t k = 0; k < mask.size(); ++k) {
        mask[k] = dropout_rng->bernoulli(keep) ? 1.0 / keep : 0.0;
        cache.xs[t][k] *= mask[k];
      }
    }
  }

  cache.bi = bilstm_encode(cache.xs, model.fwd, model.bwd);
  cache.states.resize(n);
  if (cfg.knowledge == KnowledgeMode::kAttention) {
    cache.sentinels.resize(n);
    cache.knowledge.resize(n);
  }
  for (size_t t = 0; t < n; ++t) {
    const Vector& h = cache.bi.h[t];
    switch (cfg.knowledge) {
      case KnowledgeMode::kNone:
        cache.states[t] = h;
        break;
      case KnowledgeMode::kFeatures:
        cache.states[t] = baseline_fea_state(h, seq.units[t].candidates,
                                             model.lexicon.num_concepts());
        break;
      case KnowledgeMode::kAttention: {
        const CandidateSet& cands = seq.units[t].candidates;
        if (!cands.empty()) {
          Vector h_prev = cache.bi.forward.previous_hidden(t);
          const Vector hb = cache.bi.backward.previous_hidden(t);
          h_prev.insert(h_prev.end(), hb.begin(), hb.end());
          cache.sentinels[t] = sentinel(h_prev, cache.xs[t], cache.bi.c[t],
                                        model.attn);
        }
        cache.knowledge[t] = knowledge_state(h, cache.sentinels[t].s, cands,
                                             model.attn);
        cache.states[t] = cache.knowledge[t].h_hat;
        break;
      }
    }
  }
  cache.emissions = Matrix(n, model.num_tags());
  for (size_t t = 0; t < n; ++t) {
    add_matvec(model.out, cache.states[t], cache.emissions.row(t));
  }
  return cache;
}

TaggerGrads TaggerGrads::zeros_like(const TaggerModel& model) {
  TaggerGrads g;
  g.cap_emb = zeros_of(model.cap_emb);
  g.fwd = lstm_zeros_like(model.fwd);
  g.bwd = lstm_zeros_like(model.bwd);
  g.attn = AttnParams::zeros_like(model.attn);
  g.out = zeros_of(model.out);
  g.trans = zeros_of(model.trans.matrix());
  return g;
}

void TaggerGrads::clear() {
  word_rows.clear();
  cap_emb.fill(0.0);
  auto zero = [](const char*, std::span<double> v) {
    std::fill(v.begin(), v.end(), 0.0);
  };
  fwd.for_each(zero);
  bwd.for_each(zero);
  // Zero every attention tensor, including a frozen projection.
  const bool trainable = attn.train_projection;
  attn.train_projection = true;
  attn.for_each(zero);
  attn.train_projection = trainable;
  out.fill(0.0);
  trans.fill(0.0);
}

double tagger_loss(const TaggerModel& model, const EncodedSequence& seq,
                   const ForwardCache& cache, TaggerGrads* grads) {
  const auto& cfg = model.config;
  const size_t n = seq.size();
  if (seq.gold.size() != n) throw InputError("loss needs gold tags");
  double loss = 0.0;
  std::vector<Vector> d_state(n);
  if (cfg.objective == Objective::kSoftmax) {
    for (size_t t = 0; t < n; ++t) {
      SoftmaxNll r = softmax_nll(cache.states[t], model.out, seq.gold[t]);
      loss += r.loss;
      if (grads != nullptr) {
        auto gv = grads->out.values();
        auto dv = r.d_weights.values();
        for (size_t k = 0; k < gv.size(); ++k) gv[k] += dv[k];
        d_state[t] = std::move(r.d_state);
      }
    }
  } else {
    CrfNll r = crf_nll_grad(cache.emissions, model.trans, seq.gold);
    loss = r.loss;
    if (grads != nullptr) {
      auto gv = grads->trans.values();
      auto dv = r.d_transitions.values();
      for (size_t k = 0; k < gv.size(); ++k) gv[k] += dv[k];
      for (size_t t = 0; t < n; ++t) {
        auto dp = r.d_emissions.row(t);
        add_outer(grads->out, dp, cache.states[t]);
        d_state[t].assign(cache.states[t].size(), 0.0);
        add_matvec_transposed(model.out, dp, d_state[t]);
      }
    }
  }
  if (grads == nullptr) return loss;

  // Back through the knowledge layer into the BiLSTM.
  const size_t hidden = cfg.hidden;
  const size_t two_h = 2 * hidden;
  std::vector<Vector> dh(n, Vector(two_h, 0.0));
  std::vector<Vector> dc(n, Vector(two_h, 0.0));
  std::vector<Vector> dxs(n);
  for (size_t t = 0; t < n; ++t) dxs[t].assign(cache.xs[t].size(), 0.0);
  for (size_t t = 0; t < n; ++t) {
    for (size_t k = 0; k < two_h; ++k) dh[t][k] += d_state[t][k];
    if (cfg.knowledge != KnowledgeMode::kAttention) continue;
    const KnowledgeStep& step = cache.knowledge[t];
    if (!step.has_candidates) continue;
    const Sentinel& sent = cache.sentinels[t];
    Vector ds(two_h, 0.0);
    knowledge_state_backward(cache.bi.h[t], sent.s, seq.units[t].candidates,
                             step, d_state[t], model.attn, grads->attn, dh[t],
                             ds);
    Vector h_prev = cache.bi.forward.previous_hidden(t);
    const Vector hb = cache.bi.backward.previous_hidden(t);
    h_prev.insert(h_prev.end(), hb.begin(), hb.end());
    Vector dh_prev(two_h, 0.0);
    sentinel_backward(h_prev, cache.xs[t], cache.bi.c[t], sent, ds, model.attn,
                      grads->attn, dh_prev, dxs[t], dc[t]);
    if (t > 0) {
      for (size_t k = 0; k < hidden; ++k) dh[t - 1][k] += dh_prev[k];
    }
    if (t + 1 < n) {
      for (size_t k = hidden; k < two_h; ++k) dh[t + 1][k] += dh_prev[k];
    }
  }
  bilstm_backward(cache.xs, cache.bi, model.fwd, model.bwd, dh, dc, grads->fwd,
                  grads->bwd, dxs);

  // Into the embeddings.
  const size_t tok_dim = model.token_dim();
  const size_t wd = cfg.word_dim;
  Vector d_tok(tok_dim);
  for (size_t t = 0; t < n; ++t) {
    Vector& dx = dxs[t];
    if (!cache.dropout_masks.empty()) {
      for (size_t k = 0; k < dx.size(); ++k) dx[k] *= cache.dropout_masks[t][k];
    }
    const EncodedUnit& u = seq.units[t];
    const size_t count = u.words.size();
    for (size_t w = 0; w < count; ++w) {
      if (cfg.unit == UnitMode::kChunk) {
        const double inv = 1.0 / static_cast<double>(count);
        for (size_t k = 0; k < tok_dim; ++k) {
          d_tok[k] = inv * dx[k] + (w == u.head ? dx[tok_dim + k] : 0.0);
        }
      } else {
        std::copy(dx.begin(), dx.begin() + tok_dim, d_tok.begin());
      }
      Vector& row = grads->word_rows[u.words[w]];
      if (row.empty()) row.assign(wd, 0.0);
      for (size_t k = 0; k < wd; ++k) row[k] += d_tok[k];
      auto cap_row = grads->cap_emb.row(u.caps[w]);
      for (size_t k = wd; k < tok_dim; ++k) cap_row[k - wd] += d_tok[k];
    }
  }
  return loss;
}

std::vector<ParamRef> tagger_param_refs(TaggerModel& model,
                                        TaggerGrads& grads) {
  std::vector<ParamRef> refs;
  model.for_each_dense([&](const std::string& name, std::span<double> v) {
    refs.push_back({name, v, {}});
  });
  std::vector<std::span<double>> g;
  g.push_back(grads.cap_emb.values());
  grads.fwd.for_each([&](const char*, std::span<double> s) { g.push_back(s); });
  grads.bwd.for_each([&](const char*, std::span<double> s) { g.push_back(s); });
  if (model.config.knowledge == KnowledgeMode::kAttention) {
    // Match the model's view of which attention tensors train.
    const bool trainable = grads.attn.train_projection;
    grads.attn.train_projection = model.attn.train_projection;
    grads.attn.for_each([&](const char*, std::span<double> s) { g.push_back(s); });
    grads.attn.train_projection = trainable;
  }
  g.push_back(grads.out.values());
  if (model.config.objective == Objective::kCrf) g.push_back(grads.trans.values());
  if (g.size() != refs.size()) {
    throw StateError("gradient layout does not match the model");
  }
  for (size_t k = 0; k < refs.size(); ++k) {
    if (g[k].size() != refs[k].value.size()) {
      throw DimensionError("gradient for " + refs[k].name + " has " +
                           std::to_string(g[k].size()) + " values, expected " +
                           std::to_string(refs[k].value.size()));
    }
    refs[k].grad = g[k];
  }
  for (auto& [id, row] : grads.word_rows) {
    refs.push_back({"word/" + std::to_string(id), model.word_emb.row(id), row});
  }
  return refs;
}

std::vector<int> tagger_predict(const TaggerModel& model,
                                const EncodedSequence& seq) {
  if (!model.trained) throw StateError("tagger has not been trained");
  if (seq.size() == 0) return {};
  const ForwardCache cache = tagger_forward(model, seq, nullptr);
  const bool constrain = model.config.constrained_decode &&
                         model.config.scheme == SpanScheme::kBio &&
                         is_bio_tagset(model.tags);
  if (model.config.objective == Objective::kCrf) {
    if (constrain) {
      return bio_decode_constrained(cache.emissions, model.trans,
                                    BioScheme(model.tags.names()));
    }
    return viterbi(cache.emissions, model.trans).tags;
  }
  if (constrain) {
    TransitionTable flat(model.num_tags());
    flat.enforce_structure();
    return bio_decode_constrained(cache.emissions, flat,
                                  BioScheme(model.tags.names()));
  }
  std::vector<int> out(seq.size());
  for (size_t t = 0; t < seq.size(); ++t) {
    auto row = cache.emissions.row(t);
    out[t] = static_cast<int>(std::max_element(row.begin(), row.end()) -
                              row.begin());
  }
  return out;
}

std::vector<std::string> tagger_predict_tags(const TaggerModel& model,
                                             const Sequence& seq) {
  Sequence unlabeled{seq.units, {}};
  const auto ids = tagger_predict(model, model.encode(unlabeled));
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (int id : ids) out.push_back(model.tags.name(id));
  return out;
}

}  // namespace kblstm
