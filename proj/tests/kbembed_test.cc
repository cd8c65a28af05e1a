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

#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include "kblstm/errors.h"

namespace kblstm {
namespace {

const std::string kData = KBLSTM_TEST_DATA;

KbModel hand_model() {
  KbModel m;
  for (const char* e : {"a", "b", "c", "cat"}) m.entities.add(e);
  m.relations.add("r");
  m.dim = 2;
  m.entity_vectors = Matrix::from_rows({{1, 0}, {0, 1}, {1, 1}, {0.5, -1}});
  m.relation_matrices.push_back(Matrix::from_rows({{2, 0}, {0, 3}}));
  return m;
}

TEST(TripleTest, LoadsAndFiltersByConfidence) {
  TripleData data;
  load_triples(kData + "/triples.tsv", data);
  // washington is_a city has confidence 0.5 and is dropped.
  EXPECT_EQ(data.triples.size(), 8u);
  EXPECT_EQ(data.relations.size(), 2u);
  EXPECT_TRUE(data.entities.contains("new york"));
}

TEST(TripleTest, MalformedLinesAndUnknownIds) {
  TripleData data;
  std::istringstream bad("a\tr\n");
  EXPECT_THROW(load_triples(bad, data), InputError);
  std::istringstream ok("a\tr\tb\n");
  load_triples(ok, data);
  std::istringstream unknown("a\tr\tzzz\n");
  EXPECT_THROW(load_triples(unknown, data, /*grow=*/false), VocabularyError);
}

TEST(ScoreTest, BilinearByHand) {
  const KbModel m = hand_model();
  // v_a^T M v_c = [1 0] diag(2,3) [1 1]^T = 2
  EXPECT_DOUBLE_EQ(score_triple(m, {0, 0, 2}), 2.0);
  EXPECT_DOUBLE_EQ(score_triple(m, {2, 0, 3}), 1.0 - 3.0);
  EXPECT_THROW(score_triple(m, {0, 1, 2}), VocabularyError);
}

TEST(RankingLossTest, HingeValuesByHand) {
  const KbModel m = hand_model();
  // S(a,r,c) = 2; S(a,r,b) = 0 -> hinge 1-2+0 < 0 inactive;
  // S(a,r,cat) = 1 -> hinge 1-2+1 = 0 inactive; use positive (a,r,b).
  const std::vector<Triple> negs{{0, 0, 2}, {0, 0, 3}};
  const RankingLoss rl = ranking_loss_and_grads(m, {0, 0, 1}, negs);
  EXPECT_DOUBLE_EQ(rl.loss, (1 - 0 + 2) + (1 - 0 + 1));
  EXPECT_EQ(rl.active, 2u);
  const std::vector<Triple> wrong{{1, 0, 2}};
  EXPECT_THROW(ranking_loss_and_grads(m, {0, 0, 1}, wrong), InputError);
}

TEST(RankingLossTest, GradientMatchesFiniteDifferences) {
  KbModel m = hand_model();
  const std::vector<Triple> negs{{0, 0, 2}, {0, 0, 3}};
  Matrix ge(4, 2), gr(2, 2);
  std::vector<ParamRef> refs{{"E", m.entity_vectors.values(), ge.values()},
                             {"M", m.relation_matrices[0].values(), gr.values()}};
  auto loss = [&](bool with_grad) {
    const RankingLoss rl = ranking_loss_and_grads(m, {0, 0, 1}, negs);
    if (with_grad) {
      zero_grads(refs);
      for (const auto& [e, g] : rl.grads.entities) std::copy(g.begin(), g.end(), ge.row(e).begin());
      for (const auto& [r, g] : rl.grads.relations) {
        std::copy(g.values().begin(), g.values().end(), gr.values().begin());
      }
    }
    return rl.loss;
  };
  EXPECT_LT(grad_check(loss, refs).max_relative_error, 1e-7);
}

TEST(NegativeSamplingTest, NeverReturnsObservedObjects) {
  TripleSet observed{{0, 0, 1}, {0, 0, 2}};
  const std::vector<int> cands{0, 1, 2, 3, 4};
  Rng rng(1);
  for (int i = 0; i < 50; ++i) {
    for (const auto& n : sample_negatives({0, 0, 1}, 3, cands, observed, rng)) {
      EXPECT_NE(n.e2, 1);
      EXPECT_NE(n.e2, 2);
      EXPECT_EQ(n.e1, 0);
    }
  }
  const std::vector<int> only{1, 2};
  EXPECT_THROW(sample_negatives({0, 0, 1}, 2, only, observed, rng), SamplingError);
}

TEST(LinkPredictionTest, RanksByHand) {
  KbModel m = hand_model();
  m.categories = {2, 3};
  // (a, r, ?) scores: a->2, b->0, c->2, cat->1. a wins the tie with c.
  const std::vector<Triple> test{{0, 0, 2}, {0, 0, 3}};
  EXPECT_DOUBLE_EQ(eval_link_prediction(m, test, 1, LinkMode::kObject), 0.0);
  EXPECT_DOUBLE_EQ(eval_link_prediction(m, test, 2, LinkMode::kObject), 0.5);
  EXPECT_DOUBLE_EQ(eval_link_prediction(m, test, 3, LinkMode::kObject), 1.0);
  EXPECT_DOUBLE_EQ(eval_link_prediction(m, test, 1, LinkMode::kCategory), 0.5);
}

TEST(PhraseTest, MeanAndHead) {
  const Matrix w = Matrix::from_rows({{1, 2}, {3, 4}, {5, 6}});
  const Vector v = compose_phrase({{0, 2}, 2}, w);
  EXPECT_EQ(v, (Vector{3, 4, 5, 6}));
  EXPECT_THROW(compose_phrase({{}, 0}, w), InputError);
}

TEST(TrainKbTest, SeparatesPositivesAndIsDeterministic) {
  TripleData data;
  load_triples(kData + "/triples.tsv", data);
  KbConfig cfg;
  cfg.dim = 8;
  cfg.epochs = 60;
  cfg.batch_size = 4;
  cfg.negatives = 3;
  const KbModel a = train_kb(data, cfg);
  const KbModel b = train_kb(data, cfg);
  EXPECT_EQ(a.entity_vectors, b.entity_vectors);
  // is_a categories are the objects of is_a triples.
  EXPECT_FALSE(a.categories.empty());
  const int dave = a.entities.at("dave"), person = a.entities.at("person"),
            state = a.entities.at("state"), isa = a.relations.at("is_a");
  EXPECT_GT(score_triple(a, {dave, isa, person}), score_triple(a, {dave, isa, state}));
}

TEST(TrainKbTest, PhraseEntitiesCompose) {
  TripleData data;
  load_triples(kData + "/triples.tsv", data);
  KbConfig cfg;
  cfg.dim = 6;
  cfg.epochs = 5;
  cfg.batch_size = 4;
  cfg.negatives = 2;
  cfg.phrase_entities = true;
  const KbModel m = train_kb(data, cfg);
  const int ny = m.entities.at("new york");
  ASSERT_TRUE(m.phrases[ny].has_value());
  EXPECT_EQ(m.entity_vector(ny).size(), 6u);
  EXPECT_EQ(m.word_vectors.cols(), 3u);
}

TEST(EmbeddingIoTest, ExportLoadRoundTrip) {
  const KbModel m = hand_model();
  std::stringstream ss;
  export_embeddings(m, ss);
  const EmbeddingTable t = load_embeddings(ss);
  EXPECT_EQ(t.ids.size(), 4u);
  EXPECT_EQ(t.vectors, m.entity_vectors);
  std::istringstream bad("2 3\nx 1 2\n");
  EXPECT_THROW(load_embeddings(bad), InputError);
}

}  // namespace
}  // namespace kblstm
