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

#include "kblstm/training.h"

#include <cmath>
#include <numeric>
#include <set>

#include "kblstm/errors.h"

namespace kblstm {
namespace {

std::vector<Span> spans_for(std::span<const std::string> tags,
                            SpanScheme scheme) {
  return scheme == SpanScheme::kBio ? bio_spans(tags) : unit_spans(tags);
}

// Chunk sequence for one sentence from the given mention boundaries. Each
// chunk takes the gold type of an identical gold mention, else O.
std::vector<Chunk> typed_chunks(const Sentence& sentence,
                                std::span<const Span> boundaries) {
  const auto gold = bio_spans(sentence.tags());
  std::vector<Span> typed;
  for (const Span& b : boundaries) {
    Span s{b.start, b.end, "O"};
    for (const Span& g : gold) {
      if (g.start == b.start && g.end == b.end) s.type = g.type;
    }
    typed.push_back(s);
  }
  auto chunks = build_chunks(sentence, typed);
  return chunks;
}

std::vector<Sequence> chunk_sequences(const Corpus& corpus,
                                      const TaggerModel* chunker) {
  std::vector<Sequence> out;
  out.reserve(corpus.size());
  for (const auto& s : corpus.sentences) {
    const auto bounds = mention_boundaries(s, chunker);
    out.push_back(chunk_sequence(s, typed_chunks(s, bounds)));
  }
  return out;
}

}  // namespace

DevScorer unit_span_scorer(std::vector<Sequence> dev, SpanScheme scheme) {
  return [dev = std::move(dev), scheme](const TaggerModel& model) {
    std::vector<SentenceSpans> gold, pred;
    for (size_t i = 0; i < dev.size(); ++i) {
      gold.push_back({i, spans_for(dev[i].gold, scheme)});
      pred.push_back({i, spans_for(tagger_predict_tags(model, dev[i]), scheme)});
    }
    return evaluate_spans(gold, pred).f1;
  };
}

TrainResult train_tagger(const TaggerConfig& config,
                         std::span<const Sequence> train,
                         const DevScorer& dev_score,
                         const ConceptLexicon* lexicon,
                         const EmbeddingTable* pretrained,
                         const EpochLog& log) {
  if (train.empty()) throw InputError("training corpus is empty");
  TaggerModel model = init_tagger(config, train, lexicon, pretrained);
  std::vector<EncodedSequence> encoded;
  encoded.reserve(train.size());
  for (const auto& seq : train) encoded.push_back(model.encode(seq));

  const DevScorer score =
      dev_score ? dev_score
                : unit_span_scorer({train.begin(), train.end()}, config.scheme);

  Rng rng(config.seed ^ 0x9E3779B97F4A7C15ULL);
  Optimizer opt = Optimizer::adam(config.learning_rate);
  TaggerGrads grads = TaggerGrads::zeros_like(model);
  std::vector<size_t> order(encoded.size());
  std::iota(order.begin(), order.end(), 0);

  TrainResult result;
  result.best_dev_f1 = -1.0;
  int since_best = 0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(order);
    double total = 0.0;
    for (size_t idx : order) {
      EncodedSequence ex = encoded[idx];
      if (config.unk_rate > 0.0) {
        for (auto& u : ex.units) {
          for (int& w : u.words) {
            if (rng.bernoulli(config.unk_rate)) w = 0;
          }
        }
      }
      grads.clear();
      const ForwardCache cache = tagger_forward(model, ex, &rng);
      const double loss = tagger_loss(model, ex, cache, &grads);
      if (!std::isfinite(loss)) {
        throw NumericError("non-finite training loss in epoch " +
                           std::to_string(epoch));
      }
      total += loss;
      auto refs = tagger_param_refs(model, grads);
      clip_grad_norm(refs, config.clip_norm);
      opt.step(refs);
      if (config.objective == Objective::kCrf) model.trans.enforce_structure();
    }
    model.trained = true;
    EpochRecord rec{epoch, total, score(model)};
    result.history.push_back(rec);
    if (log) log(rec);
    if (rec.dev_f1 > result.best_dev_f1) {
      result.best_dev_f1 = rec.dev_f1;
      result.best_epoch = epoch;
      result.model = model;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
    if (result.best_dev_f1 >= 1.0) break;  // nothing left to gain
  }
  return result;
}

TrainResult train_stage1_chunker(const Corpus& train, const Corpus& dev,
                                 TaggerConfig config,
                                 const EmbeddingTable* pretrained,
                                 const EpochLog& log) {
  if (train.empty()) throw InputError("chunker training corpus is empty");
  config.knowledge = KnowledgeMode::kNone;
  config.unit = UnitMode::kToken;
  config.scheme = SpanScheme::kBio;
  std::vector<Sequence> tr, dv;
  for (const auto& s : train.sentences) tr.push_back(token_sequence(s, true));
  for (const auto& s : dev.sentences) dv.push_back(token_sequence(s, true));
  DevScorer scorer =
      dv.empty() ? DevScorer{} : unit_span_scorer(std::move(dv), config.scheme);
  return train_tagger(config, tr, scorer, nullptr, pretrained, log);
}

TrainResult train_stage2_typer(const Corpus& train, const Corpus& dev,
                               BoundarySource source,
                               const TaggerModel* chunker, TaggerConfig config,
                               const ConceptLexicon* lexicon,
                               const EmbeddingTable* pretrained,
                               const EpochLog& log) {
  if (source == BoundarySource::kChunker && chunker == nullptr) {
    throw ConfigError("typer needs a chunker model for predicted boundaries");
  }
  if (train.empty()) throw InputError("typer training corpus is empty");
  config.unit = UnitMode::kChunk;
  config.scheme = SpanScheme::kUnit;
  const TaggerModel* bounds =
      source == BoundarySource::kChunker ? chunker : nullptr;
  const auto tr = chunk_sequences(train, bounds);
  DevScorer scorer;
  if (!dev.empty()) {
    // Token-level typed spans against gold mentions, so boundary errors of
    // the chunker count.
    scorer = [&dev, bounds](const TaggerModel& model) {
      const auto pred = tag(model, bounds, dev);
      const auto gold = gold_spans(dev, SpanScheme::kBio);
      return evaluate_spans(gold, pred).f1;
    };
  }
  return train_tagger(config, tr, scorer, lexicon, pretrained, log);
}

TrainResult train_event_tagger(const Corpus& train, const Corpus& dev,
                               TaggerConfig config,
                               const ConceptLexicon* lexicon,
                               const EmbeddingTable* pretrained,
                               const EpochLog& log) {
  if (train.empty()) throw InputError("event training corpus is empty");
  config.unit = UnitMode::kToken;
  config.scheme = SpanScheme::kUnit;
  std::vector<Sequence> tr, dv;
  for (const auto& s : train.sentences) tr.push_back(token_sequence(s));
  for (const auto& s : dev.sentences) dv.push_back(token_sequence(s));
  DevScorer scorer =
      dv.empty() ? DevScorer{} : unit_span_scorer(std::move(dv), config.scheme);
  return train_tagger(config, tr, scorer, lexicon, pretrained, log);
}

std::vector<Span> mention_boundaries(const Sentence& sentence,
                                     const TaggerModel* chunker) {
  std::vector<std::string> tags;
  if (chunker != nullptr) {
    tags = tagger_predict_tags(*chunker, token_sequence(sentence));
  } else {
    tags = sentence.tags();
  }
  auto spans = bio_spans(tags);
  for (auto& s : spans) s.type.clear();
  return spans;
}

std::vector<SentenceSpans> tag(const TaggerModel& model,
                               const TaggerModel* chunker,
                               const Corpus& corpus) {
  if (!model.trained) throw StateError("tagger has not been trained");
  std::vector<SentenceSpans> out;
  out.reserve(corpus.size());
  for (size_t i = 0; i < corpus.size(); ++i) {
    const Sentence& s = corpus.sentences[i];
    SentenceSpans result{i, {}};
    if (s.tokens.empty()) {
      out.push_back(std::move(result));
      continue;
    }
    if (model.config.unit == UnitMode::kChunk) {
      const auto bounds = mention_boundaries(s, chunker);
      if (!bounds.empty()) {
        const auto chunks = build_chunks(s, bounds);
        const auto types =
            tagger_predict_tags(model, chunk_sequence(s, chunks));
        for (size_t c = 0; c < chunks.size(); ++c) {
          if (types[c] == "O") continue;
          // Gap chunks are not mentions; only chunker spans can be typed.
          bool is_mention = false;
          for (const Span& b : bounds) {
            is_mention |= b.start == chunks[c].start && b.end == chunks[c].end;
          }
          if (is_mention) {
            result.spans.push_back({chunks[c].start, chunks[c].end, types[c]});
          }
        }
      }
    } else {
      const auto tags = tagger_predict_tags(model, token_sequence(s));
      result.spans = spans_for(tags, model.config.scheme);
    }
    out.push_back(std::move(result));
  }
  return out;
}

std::vector<SentenceSpans> gold_spans(const Corpus& corpus, SpanScheme scheme) {
  std::vector<SentenceSpans> out;
  out.reserve(corpus.size());
  for (size_t i = 0; i < corpus.size(); ++i) {
    out.push_back({i, spans_for(corpus.sentences[i].tags(), scheme)});
  }
  return out;
}

std::vector<AttentionRecord> dump_attention(const TaggerModel& model,
                                            const Sequence& sequence) {
  if (model.config.knowledge != KnowledgeMode::kAttention) {
    throw ConfigError("attention dump needs a model with knowledge attention");
  }
  Sequence unlabeled{sequence.units, {}};
  const EncodedSequence enc = model.encode(unlabeled);
  std::vector<AttentionRecord> records;
  if (enc.size() == 0) return records;
  const ForwardCache cache = tagger_forward(model, enc, nullptr);
  for (size_t t = 0; t < enc.size(); ++t) {
    AttentionRecord r;
    r.position = t;
    const auto& words = sequence.units[t].words;
    for (size_t w = 0; w < words.size(); ++w) {
      if (w > 0) r.surface += ' ';
      r.surface += words[w];
    }
    const KnowledgeStep& step = cache.knowledge[t];
    if (step.has_candidates) {
      for (int id : enc.units[t].candidates.ids) {
        r.concepts.push_back(model.lexicon.concepts().name(id));
      }
      r.alpha = step.alpha;
      r.beta = step.beta;
      double total = step.beta;
      for (double a : step.alpha) total += a;
      if (std::abs(total - 1.0) > 1e-10) {
        throw NumericError("attention weights at position " +
                           std::to_string(t) + " sum to " +
                           std::to_string(total));
      }
    }
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace kblstm
