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

// LSTM cell, sequence encoder and bidirectional wrapper with hand-derived
// backward passes.
//
//   i = sigmoid(W_i h' + U_i x + b_i)      f, o analogous
//   g = tanh(W_c h' + U_c x + b_c)
//   c = f * c' + i * g
//   h = o * tanh(c)

#ifndef KBLSTM_RNN_H_
#define KBLSTM_RNN_H_

#include <span>
#include <string>
#include <vector>

#include "kblstm/numerics.h"

namespace kblstm {

struct LstmParams {
  // Recurrent weights, hidden x hidden.
  Matrix w_i, w_f, w_o, w_c;
  // Input weights, hidden x input.
  Matrix u_i, u_f, u_o, u_c;
  Vector b_i, b_f, b_o, b_c;
  // When false the biases stay at zero and are not exposed for training.
  bool use_bias = true;

  static LstmParams zeros(size_t input_dim, size_t hidden_dim,
                          bool use_bias = true);
  // Glorot-uniform matrices, zero biases except the forget bias at 1.0.
  static LstmParams glorot(size_t input_dim, size_t hidden_dim, Rng& rng,
                           bool use_bias = true);

  size_t input_dim() const { return u_i.cols(); }
  size_t hidden_dim() const { return w_i.rows(); }

  // Throws DimensionError unless all eight matrices and four biases agree.
  void validate() const;

  template <typename F>
  void for_each(F&& fn) {
    fn("W_i", w_i.values());
    fn("W_f", w_f.values());
    fn("W_o", w_o.values());
    fn("W_c", w_c.values());
    fn("U_i", u_i.values());
    fn("U_f", u_f.values());
    fn("U_o", u_o.values());
    fn("U_c", u_c.values());
    if (use_bias) {
      fn("b_i", std::span<double>(b_i));
      fn("b_f", std::span<double>(b_f));
      fn("b_o", std::span<double>(b_o));
      fn("b_c", std::span<double>(b_c));
    }
  }
};

// Pairs every trainable buffer of `value` with its twin in `grad`.
std::vector<ParamRef> param_refs(LstmParams& value, LstmParams& grad,
                                 const std::string& prefix);

// Everything one time step produces, including what backprop needs.
struct LstmStep {
  Vector h, c;
  Vector i, f, o;
  Vector g;       // tanh candidate
  Vector tanh_c;  // tanh(c)
};

LstmStep lstm_step(std::span<const double> x, std::span<const double> h_prev,
                   std::span<const double> c_prev, const LstmParams& p);

// Gradients of one step. dh and dc are the total upstream gradients on the
// step's outputs. Parameter gradients accumulate into `grad`; dx, dh_prev
// and dc_prev are accumulated (+=).
void lstm_step_backward(std::span<const double> x,
                        std::span<const double> h_prev,
                        std::span<const double> c_prev, const LstmStep& step,
                        std::span<const double> dh, std::span<const double> dc,
                        const LstmParams& p, LstmParams& grad,
                        std::span<double> dx, std::span<double> dh_prev,
                        std::span<double> dc_prev);

// States of a whole sequence, always indexed by original position.
struct LstmStates {
  std::vector<LstmStep> steps;
  bool reverse = false;

  size_t size() const { return steps.size(); }
  // Hidden state fed into position t: h_{t-1} forward, h_{t+1} reversed,
  // zeros at the sequence boundary.
  Vector previous_hidden(size_t t) const;
  Vector previous_cell(size_t t) const;
};

// Runs the cell from a zero state over xs, right-to-left when reverse.
LstmStates lstm_encode(std::span<const Vector> xs, const LstmParams& p,
                       bool reverse = false);

// Backprop through time. dh[t] and dc[t] are external gradients on the
// states at original position t (dc may be empty). Accumulates parameter
// gradients into `grad` and input gradients into dxs.
void lstm_backward(std::span<const Vector> xs, const LstmStates& states,
                   const LstmParams& p, std::span<const Vector> dh,
                   std::span<const Vector> dc, LstmParams& grad,
                   std::span<Vector> dxs);

struct BiStates {
  LstmStates forward;
  LstmStates backward;
  std::vector<Vector> h;  // [fwd h; bwd h], 2H per position
  std::vector<Vector> c;  // [fwd c; bwd c], 2H per position

  size_t size() const { return h.size(); }
};

BiStates bilstm_encode(std::span<const Vector> xs, const LstmParams& fwd,
                       const LstmParams& bwd);

// dh and dc carry 2H-dimensional gradients per position (dc may be empty).
void bilstm_backward(std::span<const Vector> xs, const BiStates& states,
                     const LstmParams& fwd, const LstmParams& bwd,
                     std::span<const Vector> dh, std::span<const Vector> dc,
                     LstmParams& grad_fwd, LstmParams& grad_bwd,
                     std::span<Vector> dxs);

}  // namespace kblstm

#endif  // KBLSTM_RNN_H_
