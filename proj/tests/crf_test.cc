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


#include "kblstm/crf.h"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "kblstm/errors.h"

namespace kblstm {
namespace {

struct Instance {
  Matrix emissions;
  TransitionTable trans;
};

Instance random_instance(size_t T, size_t L, Rng& rng) {
  Instance in{Matrix(T, L), TransitionTable(L)};
  fill_uniform(in.emissions.values(), -3, 3, rng);
  fill_uniform(in.trans.matrix().values(), -2, 2, rng);
  in.trans.enforce_structure();
  return in;
}

// Independent path score: start -> y_0 -> ... -> y_{T-1} -> stop.
double path_score(const Instance& in, const std::vector<int>& y) {
  const size_t L = in.trans.num_tags();
  const Matrix& a = in.trans.matrix();
  double s = a(L, y[0]) + a(y.back(), L + 1);
  for (size_t t = 0; t < y.size(); ++t) s += in.emissions(t, y[t]);
  for (size_t t = 1; t < y.size(); ++t) s += a(y[t - 1], y[t]);
  return s;
}

template <typename F>
void for_each_path(size_t T, size_t L, F&& fn) {
  std::vector<int> y(T, 0);
  while (true) {
    fn(y);
    size_t k = 0;
    while (k < T && ++y[k] == static_cast<int>(L)) y[k++] = 0;
    if (k == T) break;
  }
}

TEST(CrfTest, LogPartitionAndMarginalsMatchEnumeration) {
  Rng rng(17);
  for (int trial = 0; trial < 60; ++trial) {
    const size_t T = 1 + rng.below(5), L = 1 + rng.below(4);
    const Instance in = random_instance(T, L, rng);
    std::vector<double> scores;
    Matrix unary(T, L);
    for_each_path(T, L, [&](const std::vector<int>& y) { scores.push_back(path_score(in, y)); });
    double mx = -std::numeric_limits<double>::infinity();
    for (double s : scores) mx = std::max(mx, s);
    double z = 0;
    for (double s : scores) z += std::exp(s - mx);
    const double log_z = mx + std::log(z);
    size_t idx = 0;
    for_each_path(T, L, [&](const std::vector<int>& y) {
      const double p = std::exp(scores[idx++] - log_z);
      for (size_t t = 0; t < T; ++t) unary(t, y[t]) += p;
    });
    EXPECT_NEAR(log_partition(in.emissions, in.trans), log_z, 1e-10);
    const CrfMarginals m = crf_marginals(in.emissions, in.trans);
    for (size_t t = 0; t < T; ++t) {
      for (size_t k = 0; k < L; ++k) EXPECT_NEAR(m.unary(t, k), unary(t, k), 1e-10);
    }
  }
}

TEST(CrfTest, ViterbiFindsEnumeratedArgmax) {
  Rng rng(23);
  for (int trial = 0; trial < 60; ++trial) {
    const size_t T = 1 + rng.below(5), L = 1 + rng.below(4);
    const Instance in = random_instance(T, L, rng);
    double best = -std::numeric_limits<double>::infinity();
    for_each_path(T, L, [&](const std::vector<int>& y) { best = std::max(best, path_score(in, y)); });
    const Decoded d = viterbi(in.emissions, in.trans);
    EXPECT_EQ(path_score(in, d.tags), best);
    EXPECT_NEAR(d.score, best, 1e-12);
  }
}

TEST(CrfTest, SequenceScoreByHand) {
  TransitionTable a(2);
  a.at(2, 0) = 0.5;   // start -> 0
  a.at(0, 1) = -1.0;  // 0 -> 1
  a.at(1, 3) = 0.25;  // 1 -> stop
  const Matrix e = Matrix::from_rows({{1.0, 2.0}, {3.0, 4.0}});
  const std::vector<int> y{0, 1};
  EXPECT_DOUBLE_EQ(sequence_score(e, a, y), 0.5 + 1.0 - 1.0 + 4.0 + 0.25);
}

TEST(CrfTest, StructureIsEnforced) {
  TransitionTable a(3);
  EXPECT_EQ(a(0, a.start()), kForbiddenScore);
  EXPECT_EQ(a(a.stop(), 1), kForbiddenScore);
  EXPECT_TRUE(a.forbidden(2, a.start()));
  EXPECT_FALSE(a.forbidden(a.start(), 2));
}

TEST(CrfTest, NllGradientIsMarginalsMinusGold) {
  Rng rng(5);
  const Instance in = random_instance(4, 3, rng);
  const std::vector<int> gold{0, 2, 2, 1};
  const CrfNll r = crf_nll_grad(in.emissions, in.trans, gold);
  const CrfMarginals m = crf_marginals(in.emissions, in.trans);
  EXPECT_NEAR(r.loss, m.log_z - sequence_score(in.emissions, in.trans, gold), 1e-12);
  for (size_t t = 0; t < 4; ++t) {
    for (size_t k = 0; k < 3; ++k) {
      const double ind = gold[t] == static_cast<int>(k) ? 1.0 : 0.0;
      EXPECT_NEAR(r.d_emissions(t, k), m.unary(t, k) - ind, 1e-12);
    }
  }
  // Forbidden entries never receive gradient.
  for (size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(r.d_transitions(i, in.trans.start()), 0.0);
    EXPECT_EQ(r.d_transitions(in.trans.stop(), i), 0.0);
  }
}

TEST(CrfTest, NllFiniteDifference) {
  Rng rng(8);
  Instance in = random_instance(5, 4, rng);
  const std::vector<int> gold{3, 0, 0, 1, 2};
  Matrix dp(5, 4), da(6, 6);
  std::vector<ParamRef> refs{{"P", in.emissions.values(), dp.values()},
                             {"A", in.trans.matrix().values(), da.values()}};
  auto loss = [&](bool with_grad) {
    const CrfNll r = crf_nll_grad(in.emissions, in.trans, gold);
    if (with_grad) {
      std::copy(r.d_emissions.values().begin(), r.d_emissions.values().end(), dp.values().begin());
      std::copy(r.d_transitions.values().begin(), r.d_transitions.values().end(), da.values().begin());
    }
    return r.loss;
  };
  EXPECT_LT(grad_check(loss, refs).max_relative_error, 1e-6);
}

TEST(CrfTest, BadGoldSequences) {
  Rng rng(1);
  const Instance in = random_instance(2, 2, rng);
  EXPECT_THROW(crf_nll_grad(in.emissions, in.trans, std::vector<int>{0, 2}), VocabularyError);
  EXPECT_THROW(crf_nll_grad(in.emissions, in.trans, std::vector<int>{0}), InputError);
}

TEST(SoftmaxNllTest, UniformScoresGiveLogL) {
  const Matrix w(4, 3, 0.0);
  const SoftmaxNll r = softmax_nll(Vector{1, 2, 3}, w, 2);
  EXPECT_NEAR(r.loss, std::log(4.0), 1e-15);
  EXPECT_NEAR(r.d_weights(2, 1), (0.25 - 1.0) * 2.0, 1e-15);
  EXPECT_NEAR(r.d_weights(0, 2), 0.25 * 3.0, 1e-15);
  EXPECT_THROW(softmax_nll(Vector{1, 2}, w, 0), DimensionError);
}

TEST(BioSchemeTest, TransitionsAndDecoding) {
  const std::vector<std::string> tags{"O", "B-PER", "I-PER", "B-LOC", "I-LOC"};
  const BioScheme s(tags);
  EXPECT_TRUE(s.allowed(1, 2));
  EXPECT_TRUE(s.allowed(2, 2));
  EXPECT_FALSE(s.allowed(0, 2));
  EXPECT_FALSE(s.allowed(3, 2));
  EXPECT_FALSE(s.allowed_first(4));
  EXPECT_TRUE(s.well_formed(std::vector<int>{1, 2, 0, 3, 4}));
  EXPECT_FALSE(s.well_formed(std::vector<int>{0, 4}));

  // Emissions prefer an illegal I-LOC after O; the constrained decode must
  // still produce a well-formed sequence.
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    Matrix e(4, 5);
    fill_uniform(e.values(), -2, 2, rng);
    e(1, 4) = 10.0;
    TransitionTable a(5);
    const auto y = bio_decode_constrained(e, a, s);
    EXPECT_TRUE(s.well_formed(y));
  }
}

}  // namespace
}  // namespace kblstm
