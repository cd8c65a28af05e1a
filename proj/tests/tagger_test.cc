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

#include <gtest/gtest.h>

#include "kblstm/errors.h"
#include "kblstm/training.h"

namespace kblstm {
namespace {

const std::string kData = KBLSTM_TEST_DATA;

ConceptLexicon clinton() {
  return ConceptLexicon::load(kData + "/clinton_lexicon.tsv", kData + "/concepts.vec");
}

std::vector<Sequence> small_sequences(bool chunks = false) {
  const Corpus c = read_corpus(kData + "/small.txt");
  std::vector<Sequence> out;
  for (const auto& s : c.sentences) {
    if (chunks) {
      const auto spans = bio_spans(s.tags());
      const auto ch = build_chunks(s, spans);
      out.push_back(chunk_sequence(s, ch));
    } else {
      out.push_back(token_sequence(s));
    }
  }
  return out;
}

TaggerConfig tiny(KnowledgeMode k, Objective o = Objective::kCrf) {
  TaggerConfig cfg;
  cfg.word_dim = 6;
  cfg.cap_dim = 2;
  cfg.hidden = 4;
  cfg.knowledge = k;
  cfg.objective = o;
  cfg.dropout = 0.0;
  return cfg;
}

TEST(TaggerInitTest, VocabulariesAndShapes) {
  const auto train = small_sequences();
  const ConceptLexicon lex = clinton();
  const TaggerModel m = init_tagger(tiny(KnowledgeMode::kFeatures), train, &lex);
  EXPECT_EQ(m.words.name(0), kUnknownWord);
  EXPECT_TRUE(m.words.contains("clinton"));  // case-folded
  EXPECT_EQ(m.tags.name(0), "O");
  EXPECT_EQ(m.state_dim(), 8u + lex.num_concepts());
  EXPECT_EQ(init_tagger(tiny(KnowledgeMode::kAttention), train, &lex).state_dim(), 8u);
  EXPECT_THROW(init_tagger(tiny(KnowledgeMode::kAttention), train, nullptr), ConfigError);
  EXPECT_THROW(init_tagger(tiny(KnowledgeMode::kNone), {}, nullptr), InputError);
}

TEST(TaggerInitTest, PretrainedRowsAreCopied) {
  EmbeddingTable pre;
  pre.ids.add("Clinton");
  pre.vectors = Matrix(1, 6, 0.25);
  const TaggerModel m = init_tagger(tiny(KnowledgeMode::kNone), small_sequences(), nullptr, &pre);
  for (double v : m.word_emb.row(m.words.at("clinton"))) EXPECT_EQ(v, 0.25);
  pre.vectors = Matrix(1, 5);
  EXPECT_THROW(init_tagger(tiny(KnowledgeMode::kNone), small_sequences(), nullptr, &pre),
               ConfigError);
}

TEST(TaggerConfigTest, RangeChecks) {
  TaggerConfig c;
  c.dropout = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = TaggerConfig{};
  c.hidden = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_EQ(parse_objective("crf"), Objective::kCrf);
  EXPECT_THROW(parse_knowledge("kb"), ConfigError);
}

TEST(FeatureStateTest, IndicatorBits) {
  const ConceptLexicon lex = clinton();
  const Vector h{0.5, -0.5};
  const Vector none = baseline_fea_state(h, CandidateSet{}, lex.num_concepts());
  ASSERT_EQ(none.size(), 2 + lex.num_concepts());
  for (size_t i = 2; i < none.size(); ++i) EXPECT_EQ(none[i], 0.0);

  CandidateSet two;
  two.ids = {lex.concepts().at("person"), lex.concepts().at("city")};
  const Vector v = baseline_fea_state(h, two, lex.num_concepts());
  double bits = 0;
  for (size_t i = 2; i < v.size(); ++i) bits += v[i];
  EXPECT_EQ(bits, 2.0);
  EXPECT_EQ(v[2 + lex.concepts().at("person")], 1.0);
  EXPECT_EQ(v[2 + lex.concepts().at("city")], 1.0);
  EXPECT_EQ(v[0], 0.5);
}

TEST(ComposeChunkTest, MeanThenHead) {
  const std::vector<Vector> toks{{1, 2}, {3, 6}};
  EXPECT_EQ(compose_chunk(toks, 0), (Vector{2, 4, 1, 2}));
  EXPECT_THROW(compose_chunk(toks, 2), InputError);
  EXPECT_THROW(compose_chunk(std::vector<Vector>{}, 0), InputError);
}

TEST(TaggerForwardTest, InferenceIsDeterministic) {
  const auto train = small_sequences();
  const ConceptLexicon lex = clinton();
  TaggerConfig cfg = tiny(KnowledgeMode::kAttention);
  cfg.dropout = 0.5;
  const TaggerModel m = init_tagger(cfg, train, &lex);
  const EncodedSequence enc = m.encode(train[0]);
  const ForwardCache a = tagger_forward(m, enc, nullptr);
  const ForwardCache b = tagger_forward(m, enc, nullptr);
  EXPECT_EQ(a.emissions, b.emissions);
  EXPECT_TRUE(a.dropout_masks.empty());
  Rng rng(1);
  const ForwardCache c = tagger_forward(m, enc, &rng);
  EXPECT_FALSE(c.dropout_masks.empty());
}

TEST(TaggerForwardTest, UnknownWordsMapToUnk) {
  const TaggerModel m = init_tagger(tiny(KnowledgeMode::kNone), small_sequences(), nullptr);
  Sequence s;
  s.units.push_back(Unit{{"Zyzzyva"}, 0});
  EXPECT_EQ(m.encode(s).units[0].words[0], 0);
}

TEST(TaggerEquivalenceTest, EmptyLexiconAttentionEqualsNoKnowledge) {
  const auto train = small_sequences();
  EmbeddingTable t;
  t.ids.add("person");
  t.vectors = Matrix(1, 4, 0.3);
  const ConceptLexicon empty(std::move(t));
  for (Objective o : {Objective::kCrf, Objective::kSoftmax}) {
    TaggerConfig kb = tiny(KnowledgeMode::kAttention, o);
    kb.dropout = 0.5;
    kb.epochs = 3;
    TaggerConfig plain = kb;
    plain.knowledge = KnowledgeMode::kNone;
    const TrainResult a = train_tagger(kb, train, nullptr, &empty);
    const TrainResult b = train_tagger(plain, train, nullptr, nullptr);
    ASSERT_EQ(a.history.size(), b.history.size());
    for (size_t e = 0; e < a.history.size(); ++e) {
      EXPECT_EQ(a.history[e].train_loss, b.history[e].train_loss);
    }
    for (const auto& s : train) {
      EXPECT_EQ(tagger_predict_tags(a.model, s), tagger_predict_tags(b.model, s));
    }
  }
}

TEST(TaggerLossTest, OneAdamStepLowersFirstExampleLoss) {
  const auto train = small_sequences(true);
  const ConceptLexicon lex = clinton();
  int decreased = 0;
  for (uint64_t seed = 1; seed <= 20; ++seed) {
    TaggerConfig cfg = tiny(seed % 2 ? KnowledgeMode::kAttention : KnowledgeMode::kFeatures,
                            seed % 3 ? Objective::kCrf : Objective::kSoftmax);
    cfg.unit = UnitMode::kChunk;
    cfg.seed = seed;
    TaggerModel m = init_tagger(cfg, train, &lex);
    const EncodedSequence enc = m.encode(train[0]);
    TaggerGrads g = TaggerGrads::zeros_like(m);
    const double before = tagger_loss(m, enc, tagger_forward(m, enc, nullptr), &g);
    Optimizer opt = Optimizer::adam(1e-3);
    opt.step(tagger_param_refs(m, g));
    const double after = tagger_loss(m, enc, tagger_forward(m, enc, nullptr), nullptr);
    decreased += after < before;
  }
  EXPECT_EQ(decreased, 20);
}

TEST(TaggerLossTest, FeatureModelGradient) {
  const auto train = small_sequences(true);
  const ConceptLexicon lex = clinton();
  for (Objective o : {Objective::kCrf, Objective::kSoftmax}) {
    TaggerConfig cfg = tiny(KnowledgeMode::kFeatures, o);
    cfg.unit = UnitMode::kChunk;
    TaggerModel m = init_tagger(cfg, train, &lex);
    // Unit-scale weights; at the default init some gradients sit near 1e-9,
    // below what central differences resolve.
    Rng rng(3);
    fill_uniform(m.word_emb.values(), -1.0, 1.0, rng);
    m.for_each_dense([&](const std::string&, std::span<double> v) { fill_uniform(v, -1, 1, rng); });
    m.trans.enforce_structure();
    const EncodedSequence enc = m.encode(train[0]);
    TaggerGrads g = TaggerGrads::zeros_like(m);
    tagger_loss(m, enc, tagger_forward(m, enc, nullptr), &g);
    const auto refs = tagger_param_refs(m, g);
    auto loss = [&](bool with_grad) {
      if (with_grad) zero_grads(refs);
      return tagger_loss(m, enc, tagger_forward(m, enc, nullptr), with_grad ? &g : nullptr);
    };
    const GradCheckReport r = grad_check(loss, refs);
    EXPECT_LT(r.max_relative_error, 1e-4) << r.worst_param << "[" << r.worst_index << "] "
                                          << r.analytic << " vs " << r.numeric;
  }
}

TEST(TaggerPredictTest, UntrainedIsStateError) {
  const auto train = small_sequences();
  const TaggerModel m = init_tagger(tiny(KnowledgeMode::kNone), train, nullptr);
  EXPECT_THROW(tagger_predict(m, m.encode(train[0])), StateError);
}

TEST(TaggerPredictTest, ConstrainedDecodeIsWellFormed) {
  const auto train = small_sequences();
  for (Objective o : {Objective::kCrf, Objective::kSoftmax}) {
    TaggerModel m = init_tagger(tiny(KnowledgeMode::kNone, o), train, nullptr);
    m.trained = true;
    const BioScheme scheme(m.tags.names());
    for (const auto& s : train) EXPECT_TRUE(scheme.well_formed(tagger_predict(m, m.encode(s))));
  }
}

}  // namespace
}  // namespace kblstm
