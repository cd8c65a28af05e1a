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

// Dense linear algebra, activations, optimizers and the finite-difference
// gradient checker. Everything is 64-bit and row-major.

#ifndef KBLSTM_NUMERICS_H_
#define KBLSTM_NUMERICS_H_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <map>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace kblstm {

using Vector = std::vector<double>;

class Matrix {
 public:
  Matrix() = default;
  Matrix(size_t rows, size_t cols, double fill = 0.0);
  Matrix(size_t rows, size_t cols, std::vector<double> data);

  static Matrix identity(size_t n);
  static Matrix from_rows(
      std::initializer_list<std::initializer_list<double>> rows);

  size_t rows() const { return rows_; }
  size_t cols() const { return cols_; }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(size_t r, size_t c) { return data_[r * cols_ + c]; }
  double operator()(size_t r, size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  void fill(double value);
  std::string shape_string() const;

  bool operator==(const Matrix& other) const = default;

 private:
  size_t rows_ = 0;
  size_t cols_ = 0;
  std::vector<double> data_;
};

// Matrix product. Throws DimensionError naming both shapes on mismatch.
Matrix matmul(const Matrix& a, const Matrix& b);

// y = A x.
Vector matvec(const Matrix& a, std::span<const double> x);
// out += A x.
void add_matvec(const Matrix& a, std::span<const double> x,
                std::span<double> out);
// out += A^T y.
void add_matvec_transposed(const Matrix& a, std::span<const double> y,
                           std::span<double> out);
// G += scale * a b^T.
void add_outer(Matrix& g, std::span<const double> a, std::span<const double> b,
               double scale = 1.0);

double dot(std::span<const double> a, std::span<const double> b);
// y += alpha * x.
void axpy(double alpha, std::span<const double> x, std::span<double> y);
double squared_norm(std::span<const double> x);

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Max-shifted softmax; throws DimensionError on empty input.
Vector softmax(std::span<const double> z);
// Max-shifted log-sum-exp; throws DimensionError on empty input.
double logsumexp(std::span<const double> z);

// Throws NumericError when any value is NaN or infinite.
void check_finite(std::span<const double> values, const std::string& what);

// Seedable 64-bit generator. Uniform draws are derived from raw engine bits
// so results do not depend on the standard library's distribution code.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next() { return engine_(); }
  // Uniform in [0, 1) with 53 bits of precision.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n). n must be positive.
  size_t below(size_t n);
  bool bernoulli(double p) { return uniform() < p; }
  double normal();

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[below(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

// Fills every entry with uniform(lo, hi).
void fill_uniform(std::span<double> values, double lo, double hi, Rng& rng);
// Glorot/Xavier uniform: limit sqrt(6 / (rows + cols)).
void fill_glorot(Matrix& m, Rng& rng);

// A named view over a trainable buffer and its gradient accumulator.
struct ParamRef {
  std::string name;
  std::span<double> value;
  std::span<double> grad;
};

void zero_grads(std::span<const ParamRef> params);
double global_grad_norm(std::span<const ParamRef> params);
// Rescales all gradients so their global norm is at most max_norm.
// Returns the pre-clipping norm.
double clip_grad_norm(std::span<const ParamRef> params, double max_norm);

enum class OptimizerKind { kAdam, kAdaGrad };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kAdam;
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adam or AdaGrad state. Accumulators are keyed by parameter name and
// created on first use; a later size change is a DimensionError.
class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig config) : config_(config) {}

  // Adam with (0.001, 0.9, 0.999, 1e-8).
  static Optimizer adam(double learning_rate = 0.001);
  // AdaGrad: theta -= lr * g / sqrt(sum g^2 + eps).
  static Optimizer adagrad(double learning_rate = 0.05);

  void step(std::span<const ParamRef> params);

  const OptimizerConfig& config() const { return config_; }
  int64_t step_count() const { return steps_; }

 private:
  struct Slot {
    std::vector<double> first;
    std::vector<double> second;
  };

  OptimizerConfig config_;
  int64_t steps_ = 0;
  std::map<std::string, Slot> slots_;
};

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::string worst_param;
  size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  size_t coordinates = 0;
};

// Evaluates the loss. When called with true it must also overwrite the
// gradient buffers of every checked ParamRef with the analytic gradient.
using LossFn = std::function<double(bool with_grad)>;

// Compares analytic gradients against central differences
// (f(x+eps) - f(x-eps)) / 2eps coordinate by coordinate and returns the
// largest |a - n| / max(|a|, |n|, 1e-8). Parameter values are restored.
GradCheckReport grad_check(const LossFn& loss, std::span<const ParamRef> params,
                           double epsilon = 1e-5);

}  // namespace kblstm

#endif  // KBLSTM_NUMERICS_H_
