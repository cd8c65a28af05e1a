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


#include "kblstm/evaluate.h"

#include <gtest/gtest.h>

#include <set>

#include "kblstm/errors.h"
#include "kblstm/numerics.h"

namespace kblstm {
namespace {

std::vector<SentenceSpans> one(std::vector<Span> spans) { return {{0, std::move(spans)}}; }

TEST(EvaluateSpansTest, PerfectPrediction) {
  const auto g = one({{0, 1, "PER"}, {3, 3, "LOC"}});
  const Prf p = evaluate_spans(g, g);
  EXPECT_EQ(p.precision, 1.0);
  EXPECT_EQ(p.recall, 1.0);
  EXPECT_EQ(p.f1, 1.0);
  EXPECT_TRUE(p.warnings.empty());
}

TEST(EvaluateSpansTest, NoPredictions) {
  const Prf p = evaluate_spans(one({{0, 0, "PER"}}), one({}));
  EXPECT_EQ(p.precision, 0.0);
  EXPECT_EQ(p.recall, 0.0);
  EXPECT_EQ(p.f1, 0.0);
  EXPECT_FALSE(p.warnings.empty());
}

TEST(EvaluateSpansTest, ThreeGoldTwoPredictedOneCorrect) {
  const auto g = one({{0, 0, "PER"}, {2, 3, "ORG"}, {5, 5, "LOC"}});
  // Wrong type and wrong boundary both count as errors.
  const auto p = one({{0, 0, "PER"}, {2, 2, "ORG"}});
  const Prf r = evaluate_spans(g, p);
  EXPECT_DOUBLE_EQ(r.precision, 0.5);
  EXPECT_DOUBLE_EQ(r.recall, 1.0 / 3.0);
  EXPECT_NEAR(r.f1, 0.4, 1e-15);
  const Prf typed = evaluate_spans(g, one({{5, 5, "GPE"}}));
  EXPECT_EQ(typed.correct, 0u);
}

TEST(EvaluateSpansTest, MisalignedIds) {
  std::vector<SentenceSpans> g{{0, {}}, {1, {}}}, p{{0, {}}, {2, {}}};
  EXPECT_THROW(evaluate_spans(g, p), InputError);
  EXPECT_THROW(evaluate_spans(g, one({})), InputError);
}

TEST(EvaluateSpansTest, RandomSetsAgainstNaiveCounter) {
  Rng rng(12);
  const char* types[] = {"A", "B"};
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<SentenceSpans> g, p;
    size_t correct = 0, ng = 0, np = 0;
    for (size_t s = 0; s < 4; ++s) {
      std::set<Span> gs, ps;
      for (int k = 0; k < 4; ++k) {
        const size_t a = rng.below(6), len = rng.below(2);
        if (rng.bernoulli(0.6)) gs.insert({a, a + len, types[rng.below(2)]});
        if (rng.bernoulli(0.6)) ps.insert({a, a + len, types[rng.below(2)]});
      }
      for (const auto& x : ps) correct += gs.count(x);
      ng += gs.size();
      np += ps.size();
      g.push_back({s, {gs.begin(), gs.end()}});
      p.push_back({s, {ps.begin(), ps.end()}});
    }
    const Prf r = evaluate_spans(g, p);
    ASSERT_EQ(r.correct, correct);
    const double prec = np ? double(correct) / np : 0.0, rec = ng ? double(correct) / ng : 0.0;
    const double f1 = prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
    EXPECT_NEAR(r.f1, f1, 1e-15);
  }
}

TEST(RankSumTest, IdenticalSamples) {
  const std::vector<double> a{1, 2, 3, 4, 5};
  EXPECT_NEAR(wilcoxon_rank_sum(a, a), 1.0, 1e-12);
  const std::vector<double> same{0.5, 0.5, 0.5};
  EXPECT_EQ(wilcoxon_rank_sum(same, same), 1.0);
}

TEST(RankSumTest, CompleteSeparation) {
  std::vector<double> a, b;
  for (int i = 1; i <= 10; ++i) {
    a.push_back(i);
    b.push_back(i + 10);
  }
  const RankSumResult r = wilcoxon_rank_sum_test(a, b);
  EXPECT_LT(r.p_value, 0.001);
  EXPECT_EQ(r.u, 0.0);
  // Normal approximation without continuity correction.
  EXPECT_NEAR(r.p_value, 0.00015705228423075119, 1e-12);
}

TEST(RankSumTest, TiesMatchReferenceValue) {
  const std::vector<double> a{0.81, 0.83, 0.80, 0.85, 0.82};
  const std::vector<double> b{0.78, 0.80, 0.79, 0.77, 0.80, 0.76};
  const RankSumResult r = wilcoxon_rank_sum_test(a, b);
  EXPECT_EQ(r.u, 29.0);
  EXPECT_NEAR(r.p_value, 0.009891565734721483, 1e-12);
}

TEST(RankSumTest, UStatisticMatchesPairCounting) {
  Rng rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> a(10), b(10);
    // Coarse values so that ties occur.
    for (double& x : a) x = static_cast<double>(rng.below(8));
    for (double& x : b) x = static_cast<double>(rng.below(8));
    double u = 0;
    for (double x : a) {
      for (double y : b) u += x > y ? 1.0 : (x == y ? 0.5 : 0.0);
    }
    EXPECT_EQ(wilcoxon_rank_sum_test(a, b).u, u);
  }
}

TEST(RankSumTest, TooFewSamples) {
  const std::vector<double> a{1, 2}, b{1, 2, 3};
  EXPECT_THROW(wilcoxon_rank_sum(a, b), InputError);
}

TEST(MeanStdTest, SampleStandardDeviation) {
  const std::vector<double> v{2, 4, 4, 4, 5, 5, 7, 9};
  const MeanStd ms = mean_std(v);
  EXPECT_DOUBLE_EQ(ms.mean, 5.0);
  EXPECT_NEAR(ms.stddev, std::sqrt(32.0 / 7.0), 1e-15);
  EXPECT_EQ(mean_std(std::vector<double>{3.0}).stddev, 0.0);
}

}  // namespace
}  // namespace kblstm
