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

#include <gtest/gtest.h>

#include <sstream>

#include "kblstm/errors.h"
#include "kblstm/serialize.h"

namespace kblstm {
namespace {

const std::string kData = KBLSTM_TEST_DATA;

TaggerConfig small_config() {
  TaggerConfig cfg;
  cfg.word_dim = 16;
  cfg.cap_dim = 3;
  cfg.hidden = 12;
  cfg.dropout = 0.0;
  cfg.learning_rate = 0.01;
  cfg.unk_rate = 0.0;
  cfg.epochs = 30;
  cfg.patience = 30;
  return cfg;
}

TEST(ChunkerTest, MemorizesBoundaries) {
  const Corpus memo = read_corpus(kData + "/memo.txt");
  TaggerConfig cfg = small_config();
  cfg.knowledge = KnowledgeMode::kAttention;  // forced off for stage 1
  const TrainResult r = train_stage1_chunker(memo, memo, cfg);
  EXPECT_EQ(r.model.config.knowledge, KnowledgeMode::kNone);
  EXPECT_DOUBLE_EQ(r.best_dev_f1, 1.0);
  for (const auto& t : r.model.tags.names()) EXPECT_TRUE(t == "O" || t == "B" || t == "I");
}

TEST(TyperTest, GoldBoundariesNeedNoChunker) {
  const Corpus memo = read_corpus(kData + "/memo.txt");
  TaggerConfig cfg = small_config();
  cfg.knowledge = KnowledgeMode::kNone;
  const TrainResult r = train_stage2_typer(memo, memo, BoundarySource::kGold, nullptr, cfg, nullptr);
  EXPECT_EQ(r.model.config.unit, UnitMode::kChunk);
  const Prf prf = evaluate_spans(gold_spans(memo, SpanScheme::kBio), tag(r.model, nullptr, memo));
  EXPECT_DOUBLE_EQ(prf.f1, 1.0);
  EXPECT_THROW(train_stage2_typer(memo, memo, BoundarySource::kChunker, nullptr, cfg, nullptr),
               ConfigError);
  EXPECT_THROW(train_stage2_typer(Corpus{}, memo, BoundarySource::kGold, nullptr, cfg, nullptr),
               InputError);
}

TEST(TwoStageTest, GoldBoundariesWithPerfectTypesScoreOne) {
  const Corpus memo = read_corpus(kData + "/memo.txt");
  std::vector<SentenceSpans> pred;
  for (size_t i = 0; i < memo.size(); ++i) {
    // A perfect typer reads the type off the gold tag at the chunk start.
    std::vector<Span> spans = mention_boundaries(memo.sentences[i], nullptr);
    for (Span& b : spans) b.type = memo.sentences[i].tokens[b.start].tag.substr(2);
    pred.push_back({i, spans});
  }
  EXPECT_DOUBLE_EQ(evaluate_spans(gold_spans(memo, SpanScheme::kBio), pred).f1, 1.0);
}

TEST(EventTaggerTest, MemorizesTriggers) {
  const Corpus ev = read_corpus(kData + "/events.txt");
  TaggerConfig cfg = small_config();
  cfg.knowledge = KnowledgeMode::kNone;
  const TrainResult r = train_event_tagger(ev, ev, cfg, nullptr);
  size_t right = 0, total = 0;
  for (const auto& s : ev.sentences) {
    const auto pred = tagger_predict_tags(r.model, token_sequence(s));
    for (size_t t = 0; t < s.size(); ++t) {
      right += pred[t] == s.tokens[t].tag;
      ++total;
    }
  }
  EXPECT_EQ(right, total);
  EXPECT_THROW(train_event_tagger(Corpus{}, ev, cfg, nullptr), InputError);
}

TEST(EventTaggerTest, AllOutsideCorpusScoresZeroWithWarning) {
  Corpus c;
  Sentence s;
  for (const char* w : {"nothing", "happened", "."}) s.tokens.push_back({w, "O", false});
  c.sentences = {s, s};
  TaggerConfig cfg = small_config();
  cfg.epochs = 3;
  cfg.knowledge = KnowledgeMode::kNone;
  const TrainResult r = train_event_tagger(c, c, cfg, nullptr);
  EXPECT_EQ(tagger_predict_tags(r.model, token_sequence(s)),
            (std::vector<std::string>{"O", "O", "O"}));
  const Prf prf = evaluate_spans(gold_spans(c, SpanScheme::kUnit), tag(r.model, nullptr, c));
  EXPECT_EQ(prf.f1, 0.0);
  EXPECT_FALSE(prf.warnings.empty());
}

TEST(TrainingTest, FixedSeedGivesIdenticalModels) {
  const Corpus memo = read_corpus(kData + "/memo.txt");
  TaggerConfig cfg = small_config();
  cfg.epochs = 3;
  cfg.dropout = 0.5;
  cfg.unk_rate = 0.05;
  auto bytes = [&] {
    std::ostringstream os;
    write_container(to_container(train_stage1_chunker(memo, memo, cfg).model), os);
    return os.str();
  };
  EXPECT_EQ(bytes(), bytes());
}

TEST(TagTest, EmptyInputsAndUntrainedModels) {
  const Corpus memo = read_corpus(kData + "/memo.txt");
  TaggerConfig cfg = small_config();
  cfg.epochs = 1;
  const TrainResult r = train_stage1_chunker(memo, memo, cfg);
  EXPECT_TRUE(tag(r.model, nullptr, Corpus{}).empty());
  TaggerModel untrained = r.model;
  untrained.trained = false;
  EXPECT_THROW(tag(untrained, nullptr, memo), StateError);
}

TEST(AttentionDumpTest, WeightsOnSimplex) {
  const ConceptLexicon lex =
      ConceptLexicon::load(kData + "/clinton_lexicon.tsv", kData + "/concepts.vec");
  const Corpus c = read_corpus(kData + "/small.txt");
  TaggerConfig cfg = small_config();
  cfg.knowledge = KnowledgeMode::kAttention;
  cfg.epochs = 2;
  const TrainResult r = train_event_tagger(c, c, cfg, &lex);
  const auto records = dump_attention(r.model, token_sequence(c.sentences[0]));
  ASSERT_EQ(records.size(), c.sentences[0].size());
  EXPECT_EQ(records[1].surface, "Clinton");
  ASSERT_EQ(records[1].concepts.size(), 3u);
  double total = *records[1].beta;
  for (double a : records[1].alpha) total += a;
  EXPECT_NEAR(total, 1.0, 1e-12);
  EXPECT_FALSE(records[2].beta.has_value());  // "visited" has no candidates

  cfg.knowledge = KnowledgeMode::kNone;
  const TrainResult plain = train_event_tagger(c, c, cfg, nullptr);
  EXPECT_THROW(dump_attention(plain.model, token_sequence(c.sentences[0])), ConfigError);
}

}  // namespace
}  // namespace kblstm
