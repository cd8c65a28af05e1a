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

// Bilinear knowledge-graph embeddings. A triple (e1, r, e2) scores
//
//   S = v_e1^T M_r v_e2
//
// and training minimizes the max-margin ranking loss
//
//   sum_q sum_q' max(0, 1 - S_q + S_q')
//
// against object-corrupted negatives q' = (e1, r, e2'), using AdaGrad.
// Entities can optionally be noun phrases whose vector is the mean of the
// word vectors concatenated with the head word vector.

#ifndef KBLSTM_KBEMBED_H_
#define KBLSTM_KBEMBED_H_

#include <compare>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "kblstm/numerics.h"
#include "kblstm/vocab.h"

namespace kblstm {

struct Triple {
  int e1 = 0;
  int r = 0;
  int e2 = 0;

  auto operator<=>(const Triple&) const = default;
};

struct TripleHash {
  size_t operator()(const Triple& t) const {
    uint64_t h = static_cast<uint64_t>(t.e1) * 0x9E3779B97F4A7C15ULL;
    h ^= static_cast<uint64_t>(t.r) + 0x7F4A7C159E3779B9ULL + (h << 6) + (h >> 2);
    h ^= static_cast<uint64_t>(t.e2) + 0x94D049BB133111EBULL + (h << 6) + (h >> 2);
    return static_cast<size_t>(h);
  }
};

using TripleSet = std::unordered_set<Triple, TripleHash>;

// Triples with the vocabularies their ids refer to.
struct TripleData {
  Vocabulary entities;
  Vocabulary relations;
  std::vector<Triple> triples;
};

// Reads `e1<TAB>relation<TAB>e2[<TAB>confidence]`. Lines starting with '#'
// and blank lines are skipped, as are rows whose confidence is below
// min_confidence. With grow=false every name must already be in the
// vocabularies (VocabularyError otherwise). Duplicate triples are dropped.
void load_triples(std::istream& in, TripleData& data, bool grow = true,
                  double min_confidence = 0.9);
void load_triples(const std::string& path, TripleData& data, bool grow = true,
                  double min_confidence = 0.9);

struct PhraseEntity {
  std::vector<int> words;
  int head = 0;
};

// [mean of word vectors ; head word vector], 2 * word_dim values.
Vector compose_phrase(const PhraseEntity& phrase, const Matrix& word_vectors);

struct KbConfig {
  size_t dim = 100;
  double learning_rate = 0.05;
  size_t batch_size = 100;
  size_t negatives = 10;
  int epochs = 100;
  uint64_t seed = 1;
  double weight_decay = 0.0;
  // Compose non-category entities from their words (split on ' ' or '_').
  bool phrase_entities = false;
  // Objects of this relation form the concept-category subset. Negatives
  // for its triples are drawn from that subset only.
  std::string category_relation = "is_a";
};

struct KbModel {
  Vocabulary entities;
  Vocabulary relations;
  size_t dim = 0;
  Matrix entity_vectors;              // one row per entity
  std::vector<Matrix> relation_matrices;
  std::vector<int> categories;        // sorted entity ids
  // Phrase composition, used when phrase_entities was set.
  Vocabulary words;
  Matrix word_vectors;                // one row per word, dim / 2 wide
  std::vector<std::optional<PhraseEntity>> phrases;

  Vector entity_vector(int entity) const;
};

// Builds an untrained model over the given vocabularies: entity vectors
// uniform(-0.1, 0.1), relation matrices identity plus uniform(-0.01, 0.01).
KbModel init_kb_model(const TripleData& data, const KbConfig& config);

double score_triple(const KbModel& model, const Triple& t);

// k object-corrupted negatives (e1, r, e2') with e2' drawn from candidates,
// e2' != e2 and (e1, r, e2') not observed. Without replacement when enough
// valid objects exist, with replacement otherwise.
std::vector<Triple> sample_negatives(const Triple& t, size_t k,
                                     std::span<const int> candidates,
                                     const TripleSet& observed, Rng& rng);

struct KbGradients {
  std::map<int, Vector> entities;
  std::map<int, Matrix> relations;
  std::map<int, Vector> words;

  void add(const KbGradients& other);
};

struct RankingLoss {
  double loss = 0.0;
  size_t active = 0;  // hinges with 1 - S_q + S_q' > 0
  KbGradients grads;
};

RankingLoss ranking_loss_and_grads(const KbModel& model, const Triple& positive,
                                   std::span<const Triple> negatives);

// Called after every epoch with the summed training loss.
using EpochLogger = std::function<void(int epoch, double loss)>;

KbModel train_kb(const TripleData& data, const KbConfig& config,
                 const EpochLogger& log = nullptr);

enum class LinkMode { kObject, kCategory };

// Fraction of test triples whose gold object ranks within the top k among
// the candidates (all entities, or the category subset) by score, ties
// broken by ascending id.
double eval_link_prediction(const KbModel& model, std::span<const Triple> test,
                            size_t k, LinkMode mode);

// `<count> <dim>` header then `<id> <v1> ... <vd>` with 17 significant digits.
void export_embeddings(const KbModel& model, std::ostream& out);

struct EmbeddingTable {
  Vocabulary ids;
  Matrix vectors;
};

EmbeddingTable load_embeddings(std::istream& in);
EmbeddingTable load_embeddings(const std::string& path);

}  // namespace kblstm

#endif  // KBLSTM_KBEMBED_H_
