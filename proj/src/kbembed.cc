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

#include "kblstm/kbembed.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "kblstm/errors.h"
#include "kblstm/text.h"

namespace kblstm {

namespace {

void check_triple(const KbModel& model, const Triple& t) {
  if (t.e1 < 0 || static_cast<size_t>(t.e1) >= model.entities.size()) {
    throw VocabularyError("unknown entity id " + std::to_string(t.e1));
  }
  if (t.e2 < 0 || static_cast<size_t>(t.e2) >= model.entities.size()) {
    throw VocabularyError("unknown entity id " + std::to_string(t.e2));
  }
  if (t.r < 0 || static_cast<size_t>(t.r) >= model.relations.size()) {
    throw VocabularyError("unknown relation id " + std::to_string(t.r));
  }
}

Vector& grad_slot(std::map<int, Vector>& slots, int id, size_t dim) {
  auto [it, inserted] = slots.try_emplace(id);
  if (inserted) it->second.assign(dim, 0.0);
  return it->second;
}

// Moves gradients of phrase entities onto their constituent words.
void route_phrase_gradients(const KbModel& model, KbGradients& grads) {
  if (model.phrases.empty()) return;
  const size_t word_dim = model.word_vectors.cols();
  for (auto it = grads.entities.begin(); it != grads.entities.end();) {
    const auto& phrase = model.phrases[it->first];
    if (!phrase) {
      ++it;
      continue;
    }
    const Vector& g = it->second;
    const double share = 1.0 / static_cast<double>(phrase->words.size());
    for (int w : phrase->words) {
      Vector& slot = grad_slot(grads.words, w, word_dim);
      for (size_t k = 0; k < word_dim; ++k) slot[k] += share * g[k];
    }
    Vector& head = grad_slot(grads.words, phrase->head, word_dim);
    for (size_t k = 0; k < word_dim; ++k) head[k] += g[word_dim + k];
    it = grads.entities.erase(it);
  }
}

std::vector<std::string> phrase_words(const std::string& name) {
  std::vector<std::string> words;
  std::string current;
  for (char ch : name) {
    if (ch == ' ' || ch == '_') {
      if (!current.empty()) words.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(ch);
    }
  }
  if (!current.empty()) words.push_back(std::move(current));
  return words;
}

}  // namespace

void load_triples(std::istream& in, TripleData& data, bool grow,
                  double min_confidence) {
  TripleSet seen(data.triples.begin(), data.triples.end());
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split(line, '\t');
    if (fields.size() != 3 && fields.size() != 4) {
      throw InputError("triple file line " + std::to_string(line_no) +
                       ": expected 3 or 4 tab-separated fields, got " +
                       std::to_string(fields.size()));
    }
    if (fields.size() == 4) {
      double confidence = 0.0;
      if (!parse_double(fields[3], confidence)) {
        throw InputError("triple file line " + std::to_string(line_no) +
                         ": bad confidence '" + fields[3] + "'");
      }
      if (confidence < min_confidence) continue;
    }
    Triple t;
    if (grow) {
      t = {data.entities.add(fields[0]), data.relations.add(fields[1]),
           data.entities.add(fields[2])};
    } else {
      t = {data.entities.at(fields[0]), data.relations.at(fields[1]),
           data.entities.at(fields[2])};
    }
    if (seen.insert(t).second) data.triples.push_back(t);
  }
}

void load_triples(const std::string& path, TripleData& data, bool grow,
                  double min_confidence) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open triple file " + path);
  load_triples(in, data, grow, min_confidence);
}

Vector compose_phrase(const PhraseEntity& phrase, const Matrix& word_vectors) {
  if (phrase.words.empty()) throw InputError("compose_phrase: empty phrase");
  const size_t dim = word_vectors.cols();
  auto check = [&](int w) {
    if (w < 0 || static_cast<size_t>(w) >= word_vectors.rows()) {
      throw VocabularyError("unknown word id " + std::to_string(w));
    }
  };
  Vector out(2 * dim, 0.0);
  for (int w : phrase.words) {
    check(w);
    auto row = word_vectors.row(w);
    for (size_t k = 0; k < dim; ++k) out[k] += row[k];
  }
  const double inv = 1.0 / static_cast<double>(phrase.words.size());
  for (size_t k = 0; k < dim; ++k) out[k] *= inv;
  check(phrase.head);
  auto head = word_vectors.row(phrase.head);
  std::copy(head.begin(), head.end(), out.begin() + dim);
  return out;
}

void KbGradients::add(const KbGradients& other) {
  for (const auto& [id, g] : other.entities) {
    Vector& slot = grad_slot(entities, id, g.size());
    axpy(1.0, g, slot);
  }
  for (const auto& [id, g] : other.words) {
    Vector& slot = grad_slot(words, id, g.size());
    axpy(1.0, g, slot);
  }
  for (const auto& [id, g] : other.relations) {
    auto [it, inserted] = relations.try_emplace(id, g.rows(), g.cols());
    axpy(1.0, g.values(), it->second.values());
  }
}

Vector KbModel::entity_vector(int entity) const {
  if (entity < 0 || static_cast<size_t>(entity) >= entities.size()) {
    throw VocabularyError("unknown entity id " + std::to_string(entity));
  }
  if (!phrases.empty() && phrases[entity]) {
    return compose_phrase(*phrases[entity], word_vectors);
  }
  auto row = entity_vectors.row(entity);
  return Vector(row.begin(), row.end());
}

KbModel init_kb_model(const TripleData& data, const KbConfig& config) {
  if (config.dim == 0) throw ConfigError("KB embedding dimension must be > 0");
  KbModel model;
  model.entities = data.entities;
  model.relations = data.relations;
  model.dim = config.dim;
  Rng rng(config.seed);

  const int category_rel = data.relations.find(config.category_relation);
  std::set<int> categories;
  if (category_rel >= 0) {
    for (const auto& t : data.triples) {
      if (t.r == category_rel) categories.insert(t.e2);
    }
  }
  model.categories.assign(categories.begin(), categories.end());

  model.entity_vectors = Matrix(data.entities.size(), config.dim);
  fill_uniform(model.entity_vectors.values(), -0.1, 0.1, rng);
  for (size_t r = 0; r < data.relations.size(); ++r) {
    Matrix m = Matrix::identity(config.dim);
    for (double& v : m.values()) v += rng.uniform(-0.01, 0.01);
    model.relation_matrices.push_back(std::move(m));
  }

  if (config.phrase_entities) {
    if (config.dim % 2 != 0) {
      throw ConfigError("phrase composition needs an even KB dimension");
    }
    model.phrases.resize(data.entities.size());
    for (size_t e = 0; e < data.entities.size(); ++e) {
      if (categories.count(static_cast<int>(e))) continue;
      const auto words = phrase_words(data.entities.name(static_cast<int>(e)));
      if (words.empty()) continue;
      PhraseEntity phrase;
      for (const auto& w : words) phrase.words.push_back(model.words.add(w));
      phrase.head = phrase.words.back();
      model.phrases[e] = std::move(phrase);
    }
    model.word_vectors = Matrix(model.words.size(), config.dim / 2);
    fill_uniform(model.word_vectors.values(), -0.1, 0.1, rng);
  }
  return model;
}

double score_triple(const KbModel& model, const Triple& t) {
  check_triple(model, t);
  const Vector v1 = model.entity_vector(t.e1);
  const Vector v2 = model.entity_vector(t.e2);
  const Vector mv2 = matvec(model.relation_matrices[t.r], v2);
  return dot(v1, mv2);
}

std::vector<Triple> sample_negatives(const Triple& t, size_t k,
                                     std::span<const int> candidates,
                                     const TripleSet& observed, Rng& rng) {
  std::vector<Triple> out;
  if (k == 0) return out;
  auto valid = [&](int e) {
    return e != t.e2 && !observed.count(Triple{t.e1, t.r, e});
  };
  if (!candidates.empty()) {
    // Rejection sampling first: cheap when valid objects are plentiful.
    std::set<int> chosen;
    const size_t budget = 20 * k + 100;
    for (size_t attempt = 0; attempt < budget && chosen.size() < k; ++attempt) {
      const int e = candidates[rng.below(candidates.size())];
      if (valid(e) && chosen.insert(e).second) {
        out.push_back({t.e1, t.r, e});
      }
    }
    if (out.size() == k) return out;
  }
  out.clear();
  std::vector<int> pool;
  for (int e : candidates) {
    if (valid(e)) pool.push_back(e);
  }
  std::sort(pool.begin(), pool.end());
  pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
  if (pool.empty()) {
    throw SamplingError("no valid negative object for triple (" +
                        std::to_string(t.e1) + ", " + std::to_string(t.r) +
                        ", " + std::to_string(t.e2) + ")");
  }
  if (pool.size() >= k) {
    rng.shuffle(pool);
    for (size_t i = 0; i < k; ++i) out.push_back({t.e1, t.r, pool[i]});
  } else {
    for (size_t i = 0; i < k; ++i) {
      out.push_back({t.e1, t.r, pool[rng.below(pool.size())]});
    }
  }
  return out;
}

RankingLoss ranking_loss_and_grads(const KbModel& model, const Triple& positive,
                                   std::span<const Triple> negatives) {
  if (negatives.empty()) throw InputError("ranking loss needs negatives");
  check_triple(model, positive);
  const size_t dim = model.dim;
  const Matrix& m = model.relation_matrices[positive.r];
  const Vector v1 = model.entity_vector(positive.e1);
  const Vector v2 = model.entity_vector(positive.e2);
  const Vector mv2 = matvec(m, v2);
  Vector mt_v1(dim, 0.0);
  add_matvec_transposed(m, v1, mt_v1);
  const double s_pos = dot(v1, mv2);

  RankingLoss out;
  for (const auto& neg : negatives) {
    check_triple(model, neg);
    if (neg.e1 != positive.e1 || neg.r != positive.r) {
      throw InputError("negatives must corrupt only the object");
    }
    const Vector v2n = model.entity_vector(neg.e2);
    const Vector mv2n = matvec(m, v2n);
    const double s_neg = dot(v1, mv2n);
    const double hinge = 1.0 - s_pos + s_neg;
    if (hinge <= 0.0) continue;
    out.loss += hinge;
    ++out.active;
    Vector& g1 = grad_slot(out.grads.entities, positive.e1, dim);
    for (size_t k = 0; k < dim; ++k) g1[k] += mv2n[k] - mv2[k];
    Vector& g2 = grad_slot(out.grads.entities, positive.e2, dim);
    axpy(-1.0, mt_v1, g2);
    Vector& g2n = grad_slot(out.grads.entities, neg.e2, dim);
    axpy(1.0, mt_v1, g2n);
    auto [it, inserted] = out.grads.relations.try_emplace(positive.r, dim, dim);
    add_outer(it->second, v1, v2, -1.0);
    add_outer(it->second, v1, v2n, 1.0);
  }
  return out;
}

KbModel train_kb(const TripleData& data, const KbConfig& config,
                 const EpochLogger& log) {
  if (data.triples.empty()) throw InputError("train_kb: no training triples");
  if (config.batch_size == 0) throw ConfigError("batch size must be > 0");
  if (config.learning_rate <= 0.0) throw ConfigError("learning rate must be > 0");
  KbModel model = init_kb_model(data, config);
  const TripleSet observed(data.triples.begin(), data.triples.end());
  const int category_rel = data.relations.find(config.category_relation);

  std::vector<int> all_entities(data.entities.size());
  for (size_t e = 0; e < all_entities.size(); ++e) {
    all_entities[e] = static_cast<int>(e);
  }

  Optimizer optimizer = Optimizer::adagrad(config.learning_rate);
  // Separate stream from initialization so that changing the init does not
  // reshuffle training.
  Rng rng(config.seed ^ 0x5DEECE66DULL);
  std::vector<size_t> order(data.triples.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    double total = 0.0;
    for (size_t start = 0; start < order.size(); start += config.batch_size) {
      const size_t end = std::min(order.size(), start + config.batch_size);
      KbGradients batch;
      for (size_t i = start; i < end; ++i) {
        const Triple& t = data.triples[order[i]];
        std::vector<Triple> negatives;
        if (t.r == category_rel && !model.categories.empty()) {
          if (model.categories.size() <= config.negatives + 1) {
            // Few categories: use every unobserved one.
            for (int c : model.categories) {
              if (c != t.e2 && !observed.count(Triple{t.e1, t.r, c})) {
                negatives.push_back({t.e1, t.r, c});
              }
            }
          } else {
            negatives = sample_negatives(t, config.negatives, model.categories,
                                         observed, rng);
          }
        } else {
          try {
            negatives = sample_negatives(t, config.negatives, all_entities,
                                         observed, rng);
          } catch (const SamplingError&) {
            // Every entity is an observed object; nothing to rank against.
          }
        }
        if (negatives.empty()) continue;
        RankingLoss rl = ranking_loss_and_grads(model, t, negatives);
        total += rl.loss;
        batch.add(rl.grads);
      }
      route_phrase_gradients(model, batch);

      std::vector<ParamRef> refs;
      for (auto& [id, g] : batch.entities) {
        auto row = model.entity_vectors.row(id);
        if (config.weight_decay > 0.0) axpy(config.weight_decay, row, g);
        refs.push_back({"e" + std::to_string(id), row, g});
      }
      for (auto& [id, g] : batch.words) {
        auto row = model.word_vectors.row(id);
        if (config.weight_decay > 0.0) axpy(config.weight_decay, row, g);
        refs.push_back({"w" + std::to_string(id), row, g});
      }
      for (auto& [id, g] : batch.relations) {
        auto values = model.relation_matrices[id].values();
        if (config.weight_decay > 0.0) {
          axpy(config.weight_decay, values, g.values());
        }
        refs.push_back({"r" + std::to_string(id), values, g.values()});
      }
      optimizer.step(refs);
    }
    if (log) log(epoch, total);
  }
  return model;
}

double eval_link_prediction(const KbModel& model, std::span<const Triple> test,
                            size_t k, LinkMode mode) {
  if (test.empty()) return 0.0;
  std::vector<int> candidates;
  if (mode == LinkMode::kCategory) {
    candidates = model.categories;
  } else {
    candidates.resize(model.entities.size());
    for (size_t e = 0; e < candidates.size(); ++e) {
      candidates[e] = static_cast<int>(e);
    }
  }
  // Cache candidate vectors once; phrase entities are composed on demand.
  std::vector<Vector> vectors;
  vectors.reserve(candidates.size());
  for (int c : candidates) vectors.push_back(model.entity_vector(c));

  size_t hits = 0;
  for (const auto& t : test) {
    check_triple(model, t);
    const Vector v1 = model.entity_vector(t.e1);
    Vector u(model.dim, 0.0);  // v1^T M_r
    add_matvec_transposed(model.relation_matrices[t.r], v1, u);
    const double gold = dot(u, model.entity_vector(t.e2));
    size_t better = 0;
    for (size_t i = 0; i < candidates.size(); ++i) {
      const int c = candidates[i];
      if (c == t.e2) continue;
      const double s = dot(u, vectors[i]);
      if (s > gold || (s == gold && c < t.e2)) ++better;
    }
    if (better < k) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(test.size());
}

void export_embeddings(const KbModel& model, std::ostream& out) {
  out << model.entities.size() << ' ' << model.dim << '\n';
  char buf[32];
  for (size_t e = 0; e < model.entities.size(); ++e) {
    out << model.entities.name(static_cast<int>(e));
    for (double v : model.entity_vector(static_cast<int>(e))) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      out << ' ' << buf;
    }
    out << '\n';
  }
}

EmbeddingTable load_embeddings(std::istream& in) {
  std::string line;
  size_t line_no = 1;
  if (!std::getline(in, line)) throw InputError("embedding file is empty");
  strip_cr(line);
  std::istringstream header(line);
  size_t count = 0, dim = 0;
  if (!(header >> count >> dim) || dim == 0) {
    throw InputError("embedding header must be '<count> <dim>'");
  }
  EmbeddingTable table;
  std::vector<double> values;
  values.reserve(count * dim);
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    const auto fields = split(line, ' ');
    if (fields.size() < dim + 1) {
      throw InputError("embedding line " + std::to_string(line_no) +
                       ": expected an id and " + std::to_string(dim) +
                       " values");
    }
    // Ids may contain spaces; the last dim fields are the values.
    const size_t id_fields = fields.size() - dim;
    std::string id = fields[0];
    for (size_t i = 1; i < id_fields; ++i) id += ' ' + fields[i];
    for (size_t i = id_fields; i < fields.size(); ++i) {
      double v = 0.0;
      if (!parse_double(fields[i], v)) {
        throw InputError("embedding line " + std::to_string(line_no) +
                         ": bad value '" + fields[i] + "'");
      }
      values.push_back(v);
    }
    if (table.ids.contains(id)) {
      throw InputError("embedding line " + std::to_string(line_no) +
                       ": duplicate id '" + id + "'");
    }
    table.ids.add(id);
  }
  if (table.ids.size() != count) {
    throw InputError("embedding header announces " + std::to_string(count) +
                     " rows but file has " + std::to_string(table.ids.size()));
  }
  table.vectors = Matrix(count, dim, std::move(values));
  check_finite(table.vectors.values(), "embedding file");
  return table;
}

EmbeddingTable load_embeddings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open embedding file " + path);
  return load_embeddings(in);
}

}  // namespace kblstm
