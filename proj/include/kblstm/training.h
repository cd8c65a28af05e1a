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

// Training loops for the chunker, the chunk typer and the event tagger,
// plus two-stage inference and attention dumps.
//
// All loops update on every example with Adam, clip the global gradient
// norm, shuffle sentences each epoch, evaluate span F1 on the dev data
// after each epoch and keep the best parameters seen (early stopping with
// the configured patience).

#ifndef KBLSTM_TRAINING_H_
#define KBLSTM_TRAINING_H_

#include <functional>
#include <span>
#include <vector>

#include "kblstm/corpus.h"
#include "kblstm/evaluate.h"
#include "kblstm/knowattn.h"
#include "kblstm/tagger.h"

namespace kblstm {

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double dev_f1 = 0.0;
};

using EpochLog = std::function<void(const EpochRecord&)>;
// Scores a model on held-out data (higher is better).
using DevScorer = std::function<double(const TaggerModel&)>;

struct TrainResult {
  TaggerModel model;  // parameters from the best dev epoch
  std::vector<EpochRecord> history;
  double best_dev_f1 = 0.0;
  int best_epoch = 0;
};

// Span F1 over unit-level predictions of `dev` using config.scheme.
DevScorer unit_span_scorer(std::vector<Sequence> dev, SpanScheme scheme);

// Generic loop. With no scorer the training data itself is scored.
TrainResult train_tagger(const TaggerConfig& config,
                         std::span<const Sequence> train,
                         const DevScorer& dev_score,
                         const ConceptLexicon* lexicon = nullptr,
                         const EmbeddingTable* pretrained = nullptr,
                         const EpochLog& log = nullptr);

// Untyped BIO boundary tagger, no knowledge module.
TrainResult train_stage1_chunker(const Corpus& train, const Corpus& dev,
                                 TaggerConfig config,
                                 const EmbeddingTable* pretrained = nullptr,
                                 const EpochLog& log = nullptr);

enum class BoundarySource { kGold, kChunker };

// Chunk-sequence typer. With kChunker, training and dev chunks come from
// the chunker's predictions (a chunk keeps its gold type only when it
// matches a gold mention exactly); a missing chunker is a ConfigError.
TrainResult train_stage2_typer(const Corpus& train, const Corpus& dev,
                               BoundarySource source,
                               const TaggerModel* chunker, TaggerConfig config,
                               const ConceptLexicon* lexicon,
                               const EmbeddingTable* pretrained = nullptr,
                               const EpochLog& log = nullptr);

// Token classification with bare event types (or O).
TrainResult train_event_tagger(const Corpus& train, const Corpus& dev,
                               TaggerConfig config,
                               const ConceptLexicon* lexicon,
                               const EmbeddingTable* pretrained = nullptr,
                               const EpochLog& log = nullptr);

// Mention spans for one sentence: from the chunker if given, else gold.
std::vector<Span> mention_boundaries(const Sentence& sentence,
                                     const TaggerModel* chunker);

// Typed spans per sentence (sentence ids are corpus positions).
//  - chunk typer: boundaries from the chunker (or gold), O chunks dropped
//  - BIO token tagger: spans of the decoded BIO sequence
//  - unit scheme (events): one span per non-O token
std::vector<SentenceSpans> tag(const TaggerModel& model,
                               const TaggerModel* chunker,
                               const Corpus& corpus);

// Gold spans in the same form: BIO spans for BIO tags, else unit spans.
std::vector<SentenceSpans> gold_spans(const Corpus& corpus, SpanScheme scheme);

// One record per unit. Weights are checked against the simplex
// (NumericError beyond 1e-10). ConfigError unless the model attends.
std::vector<AttentionRecord> dump_attention(const TaggerModel& model,
                                            const Sequence& sequence);

}  // namespace kblstm

#endif  // KBLSTM_TRAINING_H_
