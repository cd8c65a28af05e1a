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


#include "kblstm/numerics.h"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "kblstm/errors.h"

namespace kblstm {
namespace {

TEST(MatrixTest, MatmulAgainstHandComputed) {
  const Matrix a = Matrix::from_rows({{1, 2, 3}, {4, 5, 6}});
  const Matrix b = Matrix::from_rows({{7, 8}, {9, 10}, {11, 12}});
  const Matrix c = matmul(a, b);
  EXPECT_EQ(c, Matrix::from_rows({{58, 64}, {139, 154}}));
}

TEST(MatrixTest, ShapeMismatchNamesBothShapes) {
  const Matrix a(2, 3), b(2, 3);
  try {
    matmul(a, b);
    FAIL();
  } catch (const DimensionError& e) {
    EXPECT_NE(std::string(e.what()).find("2x3"), std::string::npos);
  }
  EXPECT_THROW(matvec(a, Vector(2)), DimensionError);
}

TEST(MatrixTest, IdentityAndTransposedProducts) {
  const Matrix a = Matrix::from_rows({{1, -2}, {3, 4}, {0, 5}});
  const Vector x{1.0, 2.0};
  EXPECT_EQ(matvec(a, x), (Vector{-3.0, 11.0, 10.0}));
  Vector y(2, 0.0);
  add_matvec_transposed(a, Vector{1.0, 1.0, 1.0}, y);
  EXPECT_EQ(y, (Vector{4.0, 7.0}));
  EXPECT_EQ(matmul(Matrix::identity(3), a), a);
}

TEST(ActivationTest, SigmoidIsStableAtExtremes) {
  EXPECT_DOUBLE_EQ(sigmoid(0.0), 0.5);
  EXPECT_EQ(sigmoid(-800.0), 0.0);
  EXPECT_EQ(sigmoid(800.0), 1.0);
  EXPECT_NEAR(sigmoid(2.0) + sigmoid(-2.0), 1.0, 1e-15);
}

TEST(ActivationTest, SoftmaxAndLogsumexpLargeInputs) {
  const Vector z{1000.0, 1000.0, 1000.0 - std::log(2.0)};
  const Vector p = softmax(z);
  EXPECT_NEAR(p[0], 0.4, 1e-12);
  EXPECT_NEAR(p[2], 0.2, 1e-12);
  EXPECT_NEAR(logsumexp(z), 1000.0 + std::log(2.5), 1e-9);
  EXPECT_TRUE(std::isfinite(logsumexp(Vector{-1e300, -1e300})));
}

TEST(ActivationTest, CheckFiniteNamesTheTensor) {
  const Vector v{1.0, std::numeric_limits<double>::quiet_NaN()};
  try {
    check_finite(v, "emissions");
    FAIL();
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("emissions"), std::string::npos);
  }
}

TEST(RngTest, SameSeedSameStream) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) ASSERT_EQ(a.next(), b.next());
  Rng c(7);
  for (int i = 0; i < 1000; ++i) {
    const size_t k = c.below(5);
    ASSERT_LT(k, 5u);
    const double u = c.uniform(-0.1, 0.1);
    ASSERT_GE(u, -0.1);
    ASSERT_LT(u, 0.1);
  }
}

TEST(RngTest, GlorotLimit) {
  Rng rng(3);
  Matrix m(20, 30);
  fill_glorot(m, rng);
  const double limit = std::sqrt(6.0 / 50.0);
  for (double v : m.values()) ASSERT_LE(std::abs(v), limit);
}

TEST(OptimizerTest, AdamFirstStepMovesByLearningRate) {
  // With bias correction the first Adam step is lr * sign(g).
  Vector w{1.0, -2.0, 0.5}, g{0.3, -4.0, 1e-3};
  std::vector<ParamRef> refs{{"w", w, g}};
  Optimizer opt = Optimizer::adam(0.01);
  opt.step(refs);
  EXPECT_NEAR(w[0], 0.99, 1e-6);
  EXPECT_NEAR(w[1], -1.99, 1e-6);
  EXPECT_NEAR(w[2], 0.49, 1e-4);
}

TEST(OptimizerTest, AdamMatchesReferenceRecurrence) {
  Vector w{0.0}, g{0.0};
  std::vector<ParamRef> refs{{"w", w, g}};
  Optimizer opt = Optimizer::adam(0.1);
  double m = 0, v = 0, x = 0;
  const double grads[] = {1.0, -0.5, 0.25, 2.0};
  for (int t = 1; t <= 4; ++t) {
    g[0] = grads[t - 1];
    opt.step(refs);
    m = 0.9 * m + 0.1 * grads[t - 1];
    v = 0.999 * v + 0.001 * grads[t - 1] * grads[t - 1];
    x -= 0.1 * (m / (1 - std::pow(0.9, t))) /
         (std::sqrt(v / (1 - std::pow(0.999, t))) + 1e-8);
    EXPECT_NEAR(w[0], x, 1e-14);
  }
}

TEST(OptimizerTest, AdaGradAccumulatesSquares) {
  Vector w{1.0}, g{2.0};
  std::vector<ParamRef> refs{{"w", w, g}};
  Optimizer opt = Optimizer::adagrad(0.05);
  opt.step(refs);
  const double w1 = 1.0 - 0.05 * 2.0 / std::sqrt(4.0 + 1e-8);
  EXPECT_NEAR(w[0], w1, 1e-15);
  opt.step(refs);
  EXPECT_NEAR(w[0], w1 - 0.05 * 2.0 / std::sqrt(8.0 + 1e-8), 1e-15);
}

TEST(OptimizerTest, SizeChangeIsAnError) {
  Vector w{1.0, 2.0}, g{0.1, 0.1};
  Optimizer opt = Optimizer::adam();
  opt.step(std::vector<ParamRef>{{"w", w, g}});
  Vector w3{1, 2, 3}, g3{0, 0, 0};
  EXPECT_THROW(opt.step(std::vector<ParamRef>{{"w", w3, g3}}), DimensionError);
}

TEST(ClipTest, RescalesToMaxNorm) {
  Vector a{3.0}, ga{3.0}, b{4.0}, gb{4.0};
  std::vector<ParamRef> refs{{"a", a, ga}, {"b", b, gb}};
  EXPECT_DOUBLE_EQ(clip_grad_norm(refs, 1.0), 5.0);
  EXPECT_NEAR(global_grad_norm(refs), 1.0, 1e-15);
  EXPECT_NEAR(ga[0], 0.6, 1e-15);
  // Below the threshold nothing changes.
  EXPECT_NEAR(clip_grad_norm(refs, 5.0), 1.0, 1e-15);
  EXPECT_NEAR(gb[0], 0.8, 1e-15);
}

TEST(GradCheckTest, QuadraticIsExact) {
  Vector x{0.3, -1.2, 2.0}, g(3);
  std::vector<ParamRef> refs{{"x", x, g}};
  auto loss = [&](bool with_grad) {
    double v = 0;
    for (size_t i = 0; i < 3; ++i) {
      v += (i + 1.0) * x[i] * x[i];
      if (with_grad) g[i] = 2.0 * (i + 1.0) * x[i];
    }
    return v;
  };
  const auto rep = grad_check(loss, refs);
  EXPECT_LT(rep.max_relative_error, 1e-9);
  EXPECT_EQ(rep.coordinates, 3u);
  EXPECT_EQ(x, (Vector{0.3, -1.2, 2.0}));  // restored
}

TEST(GradCheckTest, WrongGradientIsCaught) {
  Vector x{0.5}, g(1);
  std::vector<ParamRef> refs{{"x", x, g}};
  auto loss = [&](bool with_grad) {
    if (with_grad) g[0] = std::cos(x[0]) * 1.01;
    return std::sin(x[0]);
  };
  const auto rep = grad_check(loss, refs);
  EXPECT_GT(rep.max_relative_error, 5e-3);
  EXPECT_EQ(rep.worst_param, "x");
}

TEST(GradCheckTest, RejectsBadEpsilon) {
  Vector x{0.5}, g(1);
  std::vector<ParamRef> refs{{"x", x, g}};
  auto loss = [&](bool) { return x[0]; };
  EXPECT_THROW(grad_check(loss, refs, 1e-2), InputError);
}

}  // namespace
}  // namespace kblstm
