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

#include "kblstm/rnn.h"

#include <algorithm>
#include <cmath>

#include "kblstm/errors.h"

namespace kblstm {

namespace {

void expect_shape(const Matrix& m, size_t rows, size_t cols,
                  const char* name) {
  if (m.rows() != rows || m.cols() != cols) {
    throw DimensionError(std::string("LSTM parameter ") + name + " is " +
                         m.shape_string() + ", expected " +
                         std::to_string(rows) + "x" + std::to_string(cols));
  }
}

void expect_size(const Vector& v, size_t n, const char* name) {
  if (v.size() != n) {
    throw DimensionError(std::string("LSTM bias ") + name + " has length " +
                         std::to_string(v.size()) + ", expected " +
                         std::to_string(n));
  }
}

// z = W h' + U x + b
Vector preactivation(const Matrix& w, const Matrix& u, const Vector& b,
                     std::span<const double> h_prev,
                     std::span<const double> x) {
  Vector z = b;
  add_matvec(w, h_prev, z);
  add_matvec(u, x, z);
  return z;
}

}  // namespace

LstmParams LstmParams::zeros(size_t input_dim, size_t hidden_dim,
                             bool use_bias) {
  LstmParams p;
  for (Matrix* w : {&p.w_i, &p.w_f, &p.w_o, &p.w_c}) {
    *w = Matrix(hidden_dim, hidden_dim);
  }
  for (Matrix* u : {&p.u_i, &p.u_f, &p.u_o, &p.u_c}) {
    *u = Matrix(hidden_dim, input_dim);
  }
  for (Vector* b : {&p.b_i, &p.b_f, &p.b_o, &p.b_c}) {
    b->assign(hidden_dim, 0.0);
  }
  p.use_bias = use_bias;
  return p;
}

LstmParams LstmParams::glorot(size_t input_dim, size_t hidden_dim, Rng& rng,
                              bool use_bias) {
  LstmParams p = zeros(input_dim, hidden_dim, use_bias);
  for (Matrix* m : {&p.w_i, &p.w_f, &p.w_o, &p.w_c, &p.u_i, &p.u_f, &p.u_o,
                    &p.u_c}) {
    fill_glorot(*m, rng);
  }
  if (use_bias) p.b_f.assign(hidden_dim, 1.0);
  return p;
}

void LstmParams::validate() const {
  const size_t h = w_i.rows();
  const size_t d = u_i.cols();
  expect_shape(w_i, h, h, "W_i");
  expect_shape(w_f, h, h, "W_f");
  expect_shape(w_o, h, h, "W_o");
  expect_shape(w_c, h, h, "W_c");
  expect_shape(u_i, h, d, "U_i");
  expect_shape(u_f, h, d, "U_f");
  expect_shape(u_o, h, d, "U_o");
  expect_shape(u_c, h, d, "U_c");
  expect_size(b_i, h, "b_i");
  expect_size(b_f, h, "b_f");
  expect_size(b_o, h, "b_o");
  expect_size(b_c, h, "b_c");
}

std::vector<ParamRef> param_refs(LstmParams& value, LstmParams& grad,
                                 const std::string& prefix) {
  std::vector<std::span<double>> grads;
  grad.for_each([&](const char*, std::span<double> g) { grads.push_back(g); });
  std::vector<ParamRef> refs;
  size_t k = 0;
  value.for_each([&](const char* name, std::span<double> v) {
    refs.push_back({prefix + name, v, grads.at(k++)});
  });
  return refs;
}

LstmStep lstm_step(std::span<const double> x, std::span<const double> h_prev,
                   std::span<const double> c_prev, const LstmParams& p) {
  const size_t hidden = p.hidden_dim();
  if (x.size() != p.input_dim() || h_prev.size() != hidden ||
      c_prev.size() != hidden) {
    throw DimensionError("lstm_step: input " + std::to_string(x.size()) +
                         ", state " + std::to_string(h_prev.size()) + "/" +
                         std::to_string(c_prev.size()) + " for params D=" +
                         std::to_string(p.input_dim()) +
                         " H=" + std::to_string(hidden));
  }
  LstmStep s;
  s.i = preactivation(p.w_i, p.u_i, p.b_i, h_prev, x);
  s.f = preactivation(p.w_f, p.u_f, p.b_f, h_prev, x);
  s.o = preactivation(p.w_o, p.u_o, p.b_o, h_prev, x);
  s.g = preactivation(p.w_c, p.u_c, p.b_c, h_prev, x);
  s.c.resize(hidden);
  s.h.resize(hidden);
  s.tanh_c.resize(hidden);
  for (size_t k = 0; k < hidden; ++k) {
    s.i[k] = sigmoid(s.i[k]);
    s.f[k] = sigmoid(s.f[k]);
    s.o[k] = sigmoid(s.o[k]);
    s.g[k] = std::tanh(s.g[k]);
    s.c[k] = s.f[k] * c_prev[k] + s.i[k] * s.g[k];
    s.tanh_c[k] = std::tanh(s.c[k]);
    s.h[k] = s.o[k] * s.tanh_c[k];
  }
  return s;
}

void lstm_step_backward(std::span<const double> x,
                        std::span<const double> h_prev,
                        std::span<const double> c_prev, const LstmStep& step,
                        std::span<const double> dh, std::span<const double> dc,
                        const LstmParams& p, LstmParams& grad,
                        std::span<double> dx, std::span<double> dh_prev,
                        std::span<double> dc_prev) {
  const size_t hidden = p.hidden_dim();
  Vector dzi(hidden), dzf(hidden), dzo(hidden), dzg(hidden);
  for (size_t k = 0; k < hidden; ++k) {
    const double i = step.i[k], f = step.f[k], o = step.o[k], g = step.g[k];
    const double tc = step.tanh_c[k];
    const double d_o = dh[k] * tc;
    const double d_c = dc[k] + dh[k] * o * (1.0 - tc * tc);
    dzi[k] = d_c * g * i * (1.0 - i);
    dzf[k] = d_c * c_prev[k] * f * (1.0 - f);
    dzo[k] = d_o * o * (1.0 - o);
    dzg[k] = d_c * i * (1.0 - g * g);
    dc_prev[k] += d_c * f;
  }
  const std::pair<const Vector*, std::pair<const Matrix*, const Matrix*>>
      gates[] = {{&dzi, {&p.w_i, &p.u_i}},
                 {&dzf, {&p.w_f, &p.u_f}},
                 {&dzo, {&p.w_o, &p.u_o}},
                 {&dzg, {&p.w_c, &p.u_c}}};
  Matrix* grad_w[] = {&grad.w_i, &grad.w_f, &grad.w_o, &grad.w_c};
  Matrix* grad_u[] = {&grad.u_i, &grad.u_f, &grad.u_o, &grad.u_c};
  Vector* grad_b[] = {&grad.b_i, &grad.b_f, &grad.b_o, &grad.b_c};
  for (int k = 0; k < 4; ++k) {
    const Vector& dz = *gates[k].first;
    add_outer(*grad_w[k], dz, h_prev);
    add_outer(*grad_u[k], dz, x);
    if (p.use_bias) axpy(1.0, dz, *grad_b[k]);
    add_matvec_transposed(*gates[k].second.first, dz, dh_prev);
    add_matvec_transposed(*gates[k].second.second, dz, dx);
  }
}

Vector LstmStates::previous_hidden(size_t t) const {
  if (!reverse && t > 0) return steps[t - 1].h;
  if (reverse && t + 1 < steps.size()) return steps[t + 1].h;
  return Vector(steps.empty() ? 0 : steps[t].h.size(), 0.0);
}

Vector LstmStates::previous_cell(size_t t) const {
  if (!reverse && t > 0) return steps[t - 1].c;
  if (reverse && t + 1 < steps.size()) return steps[t + 1].c;
  return Vector(steps.empty() ? 0 : steps[t].c.size(), 0.0);
}

LstmStates lstm_encode(std::span<const Vector> xs, const LstmParams& p,
                       bool reverse) {
  if (xs.empty()) throw InputError("lstm_encode: empty input sequence");
  p.validate();
  const size_t n = xs.size();
  const size_t hidden = p.hidden_dim();
  LstmStates states;
  states.reverse = reverse;
  states.steps.resize(n);
  Vector h(hidden, 0.0), c(hidden, 0.0);
  for (size_t k = 0; k < n; ++k) {
    const size_t t = reverse ? n - 1 - k : k;
    states.steps[t] = lstm_step(xs[t], h, c, p);
    h = states.steps[t].h;
    c = states.steps[t].c;
  }
  return states;
}

void lstm_backward(std::span<const Vector> xs, const LstmStates& states,
                   const LstmParams& p, std::span<const Vector> dh,
                   std::span<const Vector> dc, LstmParams& grad,
                   std::span<Vector> dxs) {
  const size_t n = states.size();
  if (xs.size() != n || dh.size() != n || dxs.size() != n ||
      (!dc.empty() && dc.size() != n)) {
    throw DimensionError("lstm_backward: sequence lengths disagree");
  }
  const size_t hidden = p.hidden_dim();
  Vector carry_h(hidden, 0.0), carry_c(hidden, 0.0);
  Vector total_h(hidden), total_c(hidden);
  for (size_t k = 0; k < n; ++k) {
    // Walk positions in the opposite order of the forward recurrence.
    const size_t t = states.reverse ? k : n - 1 - k;
    for (size_t j = 0; j < hidden; ++j) {
      total_h[j] = dh[t][j] + carry_h[j];
      total_c[j] = (dc.empty() ? 0.0 : dc[t][j]) + carry_c[j];
    }
    std::fill(carry_h.begin(), carry_h.end(), 0.0);
    std::fill(carry_c.begin(), carry_c.end(), 0.0);
    const Vector h_prev = states.previous_hidden(t);
    const Vector c_prev = states.previous_cell(t);
    lstm_step_backward(xs[t], h_prev, c_prev, states.steps[t], total_h, total_c,
                       p, grad, dxs[t], carry_h, carry_c);
  }
}

BiStates bilstm_encode(std::span<const Vector> xs, const LstmParams& fwd,
                       const LstmParams& bwd) {
  fwd.validate();
  bwd.validate();
  if (fwd.input_dim() != bwd.input_dim() ||
      fwd.hidden_dim() != bwd.hidden_dim()) {
    throw DimensionError("bilstm_encode: forward params D=" +
                         std::to_string(fwd.input_dim()) +
                         " H=" + std::to_string(fwd.hidden_dim()) +
                         " vs backward D=" + std::to_string(bwd.input_dim()) +
                         " H=" + std::to_string(bwd.hidden_dim()));
  }
  BiStates out;
  out.forward = lstm_encode(xs, fwd, false);
  out.backward = lstm_encode(xs, bwd, true);
  out.h.resize(xs.size());
  out.c.resize(xs.size());
  for (size_t t = 0; t < xs.size(); ++t) {
    const auto& f = out.forward.steps[t];
    const auto& b = out.backward.steps[t];
    out.h[t] = f.h;
    out.h[t].insert(out.h[t].end(), b.h.begin(), b.h.end());
    out.c[t] = f.c;
    out.c[t].insert(out.c[t].end(), b.c.begin(), b.c.end());
  }
  return out;
}

void bilstm_backward(std::span<const Vector> xs, const BiStates& states,
                     const LstmParams& fwd, const LstmParams& bwd,
                     std::span<const Vector> dh, std::span<const Vector> dc,
                     LstmParams& grad_fwd, LstmParams& grad_bwd,
                     std::span<Vector> dxs) {
  const size_t n = states.size();
  const size_t hidden = fwd.hidden_dim();
  std::vector<Vector> dh_f(n), dh_b(n), dc_f, dc_b;
  for (size_t t = 0; t < n; ++t) {
    if (dh[t].size() != 2 * hidden) {
      throw DimensionError("bilstm_backward: gradient of size " +
                           std::to_string(dh[t].size()) + ", expected " +
                           std::to_string(2 * hidden));
    }
    dh_f[t].assign(dh[t].begin(), dh[t].begin() + hidden);
    dh_b[t].assign(dh[t].begin() + hidden, dh[t].end());
  }
  if (!dc.empty()) {
    dc_f.resize(n);
    dc_b.resize(n);
    for (size_t t = 0; t < n; ++t) {
      dc_f[t].assign(dc[t].begin(), dc[t].begin() + hidden);
      dc_b[t].assign(dc[t].begin() + hidden, dc[t].end());
    }
  }
  lstm_backward(xs, states.forward, fwd, dh_f, dc_f, grad_fwd, dxs);
  lstm_backward(xs, states.backward, bwd, dh_b, dc_b, grad_bwd, dxs);
}

}  // namespace kblstm
