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

// Prediction heads over per-position state vectors: an independent softmax
// classifier and a linear-chain CRF with explicit START and STOP tags.
//
// A CRF over T positions and L tags scores a tag sequence y as
//
//   g(y) = A[START, y_1] + sum_t P[t, y_t] + sum_t A[y_t, y_{t+1}]
//          + A[y_T, STOP]
//
// and normalizes over all L^T sequences. P is the T x L emission table and
// A the (L+2) x (L+2) transition table; row/column L is START and L+1 is
// STOP.

#ifndef KBLSTM_CRF_H_
#define KBLSTM_CRF_H_

#include <span>
#include <string>
#include <vector>

#include "kblstm/numerics.h"

namespace kblstm {

// Log-space stand-in for -infinity. Keeps arithmetic finite.
inline constexpr double kForbiddenScore = -1e4;

struct SoftmaxNll {
  double loss = 0.0;
  Vector d_state;     // gradient w.r.t. the state vector
  Matrix d_weights;   // gradient w.r.t. the L x dim class weights
};

// -log softmax(W h)[gold]. Throws VocabularyError for an out-of-range gold.
SoftmaxNll softmax_nll(std::span<const double> state, const Matrix& weights,
                       int gold);

class TransitionTable {
 public:
  TransitionTable() = default;
  explicit TransitionTable(size_t num_tags);

  size_t num_tags() const { return num_tags_; }
  size_t start() const { return num_tags_; }
  size_t stop() const { return num_tags_ + 1; }

  double operator()(size_t from, size_t to) const { return scores_(from, to); }
  double& at(size_t from, size_t to) { return scores_(from, to); }

  Matrix& matrix() { return scores_; }
  const Matrix& matrix() const { return scores_; }

  // Transitions into START and out of STOP are structurally impossible.
  bool forbidden(size_t from, size_t to) const {
    return to == start() || from == stop();
  }
  // Resets every structurally forbidden entry to kForbiddenScore.
  void enforce_structure();

 private:
  size_t num_tags_ = 0;
  Matrix scores_;
};

double sequence_score(const Matrix& emissions, const TransitionTable& trans,
                      std::span<const int> tags);

double log_partition(const Matrix& emissions, const TransitionTable& trans);

struct CrfMarginals {
  double log_z = 0.0;
  Matrix unary;                 // T x L
  std::vector<Matrix> pairwise;  // T-1 tables of L x L
};

// Forward-backward posterior marginals.
CrfMarginals crf_marginals(const Matrix& emissions,
                           const TransitionTable& trans);

struct CrfNll {
  double loss = 0.0;
  Matrix d_emissions;    // T x L
  Matrix d_transitions;  // (L+2) x (L+2); forbidden entries stay zero
};

CrfNll crf_nll_grad(const Matrix& emissions, const TransitionTable& trans,
                    std::span<const int> gold);

struct Decoded {
  std::vector<int> tags;
  double score = 0.0;
};

// Highest scoring sequence. Ties go to the smallest tag index, both when
// choosing the final tag and at every backpointer.
Decoded viterbi(const Matrix& emissions, const TransitionTable& trans);

// Which transitions a BIO tag vocabulary permits: I-X only after B-X or I-X.
class BioScheme {
 public:
  // Throws ConfigError unless every name is "O", "B-X" or "I-X" (or the
  // untyped "B"/"I"), each I-X has a matching B-X, and "O" is present.
  explicit BioScheme(std::span<const std::string> tag_names);

  bool allowed(int from, int to) const;
  bool allowed_first(int tag) const;
  // True when the sequence contains no I tag without a matching opener.
  bool well_formed(std::span<const int> tags) const;

  size_t size() const { return inside_of_.size(); }

 private:
  // For I-X tags, the index of B-X; -1 otherwise.
  std::vector<int> inside_of_;
  std::vector<std::string> types_;
};

// Viterbi with BIO-invalid transitions masked to kForbiddenScore.
std::vector<int> bio_decode_constrained(const Matrix& emissions,
                                        const TransitionTable& trans,
                                        const BioScheme& scheme);

}  // namespace kblstm

#endif  // KBLSTM_CRF_H_
