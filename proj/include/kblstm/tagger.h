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

// BiLSTM sequence tagger with an optional knowledge module.
//
// Each unit (a token, or a chunk of tokens) is embedded as
// [word vector; capitalization vector], chunks as [mean; head]. A BiLSTM
// encodes the unit sequence and the per-position state is one of
//
//   h_t                       plain BiLSTM
//   [h_t ; indicators(V_t)]   discrete KB features
//   h_t + m_t                 knowledge attention with sentinel
//
// followed by a linear head and either per-position softmax or a CRF.

#ifndef KBLSTM_TAGGER_H_
#define KBLSTM_TAGGER_H_

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kblstm/corpus.h"
#include "kblstm/crf.h"
#include "kblstm/knowattn.h"
#include "kblstm/numerics.h"
#include "kblstm/rnn.h"
#include "kblstm/vocab.h"

namespace kblstm {

enum class Objective { kSoftmax, kCrf };
enum class KnowledgeMode { kNone, kFeatures, kAttention };
enum class UnitMode { kToken, kChunk };
// How predicted tags turn into spans for evaluation.
enum class SpanScheme { kBio, kUnit };

const char* objective_name(Objective o);
const char* knowledge_name(KnowledgeMode k);
// Inverse lookups; ConfigError on an unknown name.
Objective parse_objective(const std::string& s);
KnowledgeMode parse_knowledge(const std::string& s);

inline constexpr const char* kUnknownWord = "<unk>";

struct TaggerConfig {
  size_t word_dim = 300;
  size_t cap_dim = 5;
  size_t hidden = 100;
  Objective objective = Objective::kCrf;
  KnowledgeMode knowledge = KnowledgeMode::kAttention;
  UnitMode unit = UnitMode::kToken;
  SpanScheme scheme = SpanScheme::kBio;
  double dropout = 0.5;
  double learning_rate = 0.001;
  double clip_norm = 5.0;
  double unk_rate = 0.01;
  int epochs = 30;
  int patience = 3;
  uint64_t seed = 1;
  bool use_bias = true;
  bool train_projection = true;
  // Mask invalid BIO transitions at decode time (BIO schemes only).
  bool constrained_decode = true;

  // Throws ConfigError naming the first out-of-range field.
  void validate() const;
};

// One input position: the words it spans and where its head sits.
struct Unit {
  std::vector<std::string> words;  // surfaces as written
  size_t head = 0;                 // offset into words
};

struct Sequence {
  std::vector<Unit> units;
  std::vector<std::string> gold;  // may be empty at inference time
  size_t size() const { return units.size(); }
};

Sequence token_sequence(const Sentence& sentence, bool strip_types = false);
Sequence chunk_sequence(const Sentence& sentence,
                        std::span<const Chunk> chunks);

// Ids and candidates resolved once against a model.
struct EncodedUnit {
  std::vector<int> words;
  std::vector<int> caps;
  size_t head = 0;
  CandidateSet candidates;
};

struct EncodedSequence {
  std::vector<EncodedUnit> units;
  std::vector<int> gold;  // empty when unlabeled
  size_t size() const { return units.size(); }
};

struct TaggerModel {
  TaggerConfig config;
  Vocabulary words;  // id 0 is the unknown word
  Vocabulary tags;
  Matrix word_emb;   // |words| x word_dim
  Matrix cap_emb;    // kNumCapClasses x cap_dim
  LstmParams fwd, bwd;
  AttnParams attn;
  ConceptLexicon lexicon;
  Matrix out;        // |tags| x state_dim
  TransitionTable trans;
  bool trained = false;

  size_t token_dim() const { return config.word_dim + config.cap_dim; }
  size_t input_dim() const {
    return config.unit == UnitMode::kChunk ? 2 * token_dim() : token_dim();
  }
  size_t state_dim() const;
  size_t num_tags() const { return tags.size(); }
  bool uses_lexicon() const { return config.knowledge != KnowledgeMode::kNone; }

  EncodedSequence encode(const Sequence& seq) const;

  // Every trainable tensor except the word table, named.
  template <typename F>
  void for_each_dense(F&& fn);
};

// Builds vocabularies from training data and initializes parameters.
// Pretrained word vectors, when given, seed matching rows.
TaggerModel init_tagger(const TaggerConfig& config,
                        std::span<const Sequence> train,
                        const ConceptLexicon* lexicon,
                        const EmbeddingTable* pretrained = nullptr);

// [mean of token vectors ; head token vector]. InputError when empty.
Vector compose_chunk(std::span<const Vector> token_vectors, size_t head);

// [h ; 0/1 indicator per lexicon concept].
Vector baseline_fea_state(std::span<const double> h,
                          const CandidateSet& candidates,
                          size_t num_concepts);

// Everything the backward pass needs.
struct ForwardCache {
  std::vector<Vector> token_inputs;  // per unit: [word; cap] per word, flat
  std::vector<Vector> dropout_masks;  // scaled keep masks, empty if none
  std::vector<Vector> xs;
  BiStates bi;
  std::vector<Sentinel> sentinels;
  std::vector<KnowledgeStep> knowledge;
  std::vector<Vector> states;
  Matrix emissions;  // T x L
};

// Dropout draws come from rng; pass nullptr for inference.
ForwardCache tagger_forward(const TaggerModel& model,
                            const EncodedSequence& seq, Rng* dropout_rng);

// Gradients. Word rows are sparse.
struct TaggerGrads {
  std::map<int, Vector> word_rows;
  Matrix cap_emb;
  LstmParams fwd, bwd;
  AttnParams attn;
  Matrix out;
  Matrix trans;

  static TaggerGrads zeros_like(const TaggerModel& model);
  void clear();
};

// Negative log-likelihood for the sequence (summed over positions for
// softmax). Fills grads when non-null.
double tagger_loss(const TaggerModel& model, const EncodedSequence& seq,
                   const ForwardCache& cache, TaggerGrads* grads);

// Named value/gradient pairs for the optimizer; word rows become
// "word/<id>" entries for the rows touched in this example.
std::vector<ParamRef> tagger_param_refs(TaggerModel& model,
                                        TaggerGrads& grads);

// Best tag ids (Viterbi for CRF, argmax for softmax). BIO constraints are
// applied when the config asks for them and the tag set is BIO.
std::vector<int> tagger_predict(const TaggerModel& model,
                                const EncodedSequence& seq);
std::vector<std::string> tagger_predict_tags(const TaggerModel& model,
                                             const Sequence& seq);

template <typename F>
void TaggerModel::for_each_dense(F&& fn) {
  fn("cap_emb", cap_emb.values());
  fwd.for_each([&](const char* n, std::span<double> v) {
    fn(std::string("fwd/") + n, v);
  });
  bwd.for_each([&](const char* n, std::span<double> v) {
    fn(std::string("bwd/") + n, v);
  });
  if (config.knowledge == KnowledgeMode::kAttention) {
    attn.for_each([&](const char* n, std::span<double> v) {
      fn(std::string("attn/") + n, v);
    });
  }
  fn("out", out.values());
  if (config.objective == Objective::kCrf) fn("trans", trans.matrix().values());
}

}  // namespace kblstm

#endif  // KBLSTM_TAGGER_H_
