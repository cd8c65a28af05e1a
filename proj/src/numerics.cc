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

#include <algorithm>
#include <cmath>
#include <limits>

#include "kblstm/errors.h"

namespace kblstm {

Matrix::Matrix(size_t rows, size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(size_t rows, size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw DimensionError("matrix data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape_string());
  }
}

Matrix Matrix::identity(size_t n) {
  Matrix m(n, n);
  for (size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_rows(
    std::initializer_list<std::initializer_list<double>> rows) {
  const size_t r = rows.size();
  const size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw DimensionError("ragged matrix literal");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Matrix(r, c, std::move(data));
}

void Matrix::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

std::string Matrix::shape_string() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul shape mismatch: " + a.shape_string() +
                         " times " + b.shape_string());
  }
  Matrix out(a.rows(), b.cols());
  for (size_t i = 0; i < a.rows(); ++i) {
    auto out_row = out.row(i);
    for (size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto b_row = b.row(k);
      for (size_t j = 0; j < b.cols(); ++j) out_row[j] += aik * b_row[j];
    }
  }
  return out;
}

Vector matvec(const Matrix& a, std::span<const double> x) {
  Vector y(a.rows(), 0.0);
  add_matvec(a, x, y);
  return y;
}

void add_matvec(const Matrix& a, std::span<const double> x,
                std::span<double> out) {
  if (a.cols() != x.size() || a.rows() != out.size()) {
    throw DimensionError("matvec shape mismatch: " + a.shape_string() +
                         " times vector of " + std::to_string(x.size()) +
                         " into " + std::to_string(out.size()));
  }
  const size_t cols = a.cols();
  const double* p = a.values().data();
  for (size_t i = 0; i < a.rows(); ++i, p += cols) {
    double sum = 0.0;
    for (size_t j = 0; j < cols; ++j) sum += p[j] * x[j];
    out[i] += sum;
  }
}

void add_matvec_transposed(const Matrix& a, std::span<const double> y,
                           std::span<double> out) {
  if (a.rows() != y.size() || a.cols() != out.size()) {
    throw DimensionError("transposed matvec shape mismatch: " +
                         a.shape_string() + " with vector of " +
                         std::to_string(y.size()));
  }
  const size_t cols = a.cols();
  const double* p = a.values().data();
  for (size_t i = 0; i < a.rows(); ++i, p += cols) {
    const double yi = y[i];
    if (yi == 0.0) continue;
    for (size_t j = 0; j < cols; ++j) out[j] += p[j] * yi;
  }
}

void add_outer(Matrix& g, std::span<const double> a, std::span<const double> b,
               double scale) {
  if (g.rows() != a.size() || g.cols() != b.size()) {
    throw DimensionError("outer product shape mismatch: " + g.shape_string() +
                         " vs " + std::to_string(a.size()) + "x" +
                         std::to_string(b.size()));
  }
  const size_t cols = g.cols();
  double* p = g.values().data();
  for (size_t i = 0; i < g.rows(); ++i, p += cols) {
    const double ai = scale * a[i];
    if (ai == 0.0) continue;
    for (size_t j = 0; j < cols; ++j) p[j] += ai * b[j];
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DimensionError("dot length mismatch: " + std::to_string(a.size()) +
                         " vs " + std::to_string(b.size()));
  }
  double sum = 0.0;
  for (size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size()) {
    throw DimensionError("axpy length mismatch: " + std::to_string(x.size()) +
                         " vs " + std::to_string(y.size()));
  }
  for (size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

double squared_norm(std::span<const double> x) {
  double sum = 0.0;
  for (double v : x) sum += v * v;
  return sum;
}

Vector softmax(std::span<const double> z) {
  if (z.empty()) throw DimensionError("softmax of an empty vector");
  const double max = *std::max_element(z.begin(), z.end());
  Vector out(z.size());
  double sum = 0.0;
  for (size_t i = 0; i < z.size(); ++i) {
    out[i] = std::exp(z[i] - max);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

double logsumexp(std::span<const double> z) {
  if (z.empty()) throw DimensionError("logsumexp of an empty vector");
  const double max = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double v : z) sum += std::exp(v - max);
  return max + std::log(sum);
}

void check_finite(std::span<const double> values, const std::string& what) {
  for (double v : values) {
    if (!std::isfinite(v)) throw NumericError("non-finite value in " + what);
  }
}

size_t Rng::below(size_t n) {
  if (n == 0) throw InputError("Rng::below requires a positive bound");
  // Rejection sampling keeps the draw exactly uniform.
  const uint64_t bound = static_cast<uint64_t>(n);
  const uint64_t limit = std::numeric_limits<uint64_t>::max() -
                         std::numeric_limits<uint64_t>::max() % bound;
  uint64_t x;
  do {
    x = next();
  } while (x >= limit);
  return static_cast<size_t>(x % bound);
}

double Rng::normal() {
  // Box-Muller; the second variate is discarded to keep the stream simple.
  double u1;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

void fill_uniform(std::span<double> values, double lo, double hi, Rng& rng) {
  for (double& v : values) v = rng.uniform(lo, hi);
}

void fill_glorot(Matrix& m, Rng& rng) {
  const double limit =
      std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
  fill_uniform(m.values(), -limit, limit, rng);
}

void zero_grads(std::span<const ParamRef> params) {
  for (const auto& p : params) std::fill(p.grad.begin(), p.grad.end(), 0.0);
}

double global_grad_norm(std::span<const ParamRef> params) {
  double sum = 0.0;
  for (const auto& p : params) sum += squared_norm(p.grad);
  return std::sqrt(sum);
}

double clip_grad_norm(std::span<const ParamRef> params, double max_norm) {
  const double norm = global_grad_norm(params);
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    for (const auto& p : params) {
      for (double& g : p.grad) g *= scale;
    }
  }
  return norm;
}

Optimizer Optimizer::adam(double learning_rate) {
  OptimizerConfig config;
  config.kind = OptimizerKind::kAdam;
  config.learning_rate = learning_rate;
  return Optimizer(config);
}

Optimizer Optimizer::adagrad(double learning_rate) {
  OptimizerConfig config;
  config.kind = OptimizerKind::kAdaGrad;
  config.learning_rate = learning_rate;
  return Optimizer(config);
}

void Optimizer::step(std::span<const ParamRef> params) {
  for (const auto& p : params) {
    if (p.value.size() != p.grad.size()) {
      throw DimensionError("parameter '" + p.name + "' has " +
                           std::to_string(p.value.size()) +
                           " values but gradient of " +
                           std::to_string(p.grad.size()));
    }
    auto it = slots_.find(p.name);
    if (it != slots_.end() && it->second.first.size() != p.value.size()) {
      throw DimensionError("parameter '" + p.name + "' changed size from " +
                           std::to_string(it->second.first.size()) + " to " +
                           std::to_string(p.value.size()));
    }
  }
  ++steps_;
  const double lr = config_.learning_rate;
  const double eps = config_.epsilon;
  if (config_.kind == OptimizerKind::kAdaGrad) {
    for (const auto& p : params) {
      auto& slot = slots_[p.name];
      if (slot.first.empty()) slot.first.assign(p.value.size(), 0.0);
      for (size_t i = 0; i < p.value.size(); ++i) {
        const double g = p.grad[i];
        if (g == 0.0) continue;
        slot.first[i] += g * g;
        p.value[i] -= lr * g / std::sqrt(slot.first[i] + eps);
      }
    }
    return;
  }
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double t = static_cast<double>(steps_);
  const double correction1 = 1.0 - std::pow(b1, t);
  const double correction2 = 1.0 - std::pow(b2, t);
  for (const auto& p : params) {
    auto& slot = slots_[p.name];
    if (slot.first.empty()) {
      slot.first.assign(p.value.size(), 0.0);
      slot.second.assign(p.value.size(), 0.0);
    }
    double* m = slot.first.data();
    double* v = slot.second.data();
    for (size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      m[i] = b1 * m[i] + (1.0 - b1) * g;
      v[i] = b2 * v[i] + (1.0 - b2) * g * g;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      p.value[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
  }
}

GradCheckReport grad_check(const LossFn& loss, std::span<const ParamRef> params,
                           double epsilon) {
  if (!(epsilon >= 1e-7 && epsilon <= 1e-4)) {
    throw InputError("grad_check epsilon must lie in [1e-7, 1e-4]");
  }
  const double base = loss(true);
  if (!std::isfinite(base)) throw NumericError("grad_check: non-finite loss");
  std::vector<Vector> analytic;
  analytic.reserve(params.size());
  for (const auto& p : params) analytic.emplace_back(p.grad.begin(), p.grad.end());

  GradCheckReport report;
  for (size_t k = 0; k < params.size(); ++k) {
    const auto& p = params[k];
    for (size_t i = 0; i < p.value.size(); ++i) {
      const double saved = p.value[i];
      p.value[i] = saved + epsilon;
      const double plus = loss(false);
      p.value[i] = saved - epsilon;
      const double minus = loss(false);
      p.value[i] = saved;
      if (!std::isfinite(plus) || !std::isfinite(minus)) {
        throw NumericError("grad_check: non-finite loss while perturbing " +
                           p.name);
      }
      const double numeric = (plus - minus) / (2.0 * epsilon);
      const double a = analytic[k][i];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      const double rel = std::abs(a - numeric) / denom;
      ++report.coordinates;
      if (rel > report.max_relative_error || report.worst_param.empty()) {
        if (rel >= report.max_relative_error) {
          report.max_relative_error = rel;
          report.worst_param = p.name;
          report.worst_index = i;
          report.analytic = a;
          report.numeric = numeric;
        }
      }
    }
  }
  return report;
}

}  // namespace kblstm
