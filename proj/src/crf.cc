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

#include <algorithm>
#include <cmath>
#include <map>

#include "kblstm/errors.h"

namespace kblstm {

namespace {

void check_tables(const Matrix& emissions, const TransitionTable& trans) {
  if (emissions.rows() == 0) {
    throw InputError("CRF over an empty sequence");
  }
  if (emissions.cols() != trans.num_tags()) {
    throw DimensionError("emission table " + emissions.shape_string() +
                         " does not match " + std::to_string(trans.num_tags()) +
                         " transition tags");
  }
}

void check_tags(std::span<const int> tags, size_t length, size_t num_tags) {
  if (tags.size() != length) {
    throw InputError("tag sequence of length " + std::to_string(tags.size()) +
                     " for " + std::to_string(length) + " positions");
  }
  for (int y : tags) {
    if (y < 0 || static_cast<size_t>(y) >= num_tags) {
      throw VocabularyError("tag index " + std::to_string(y) +
                            " outside tag vocabulary of size " +
                            std::to_string(num_tags));
    }
  }
}

// alpha[t][y]: log-sum of all prefixes ending in y at t, START included.
Matrix forward_scores(const Matrix& p, const TransitionTable& a) {
  const size_t n = p.rows(), tags = p.cols();
  Matrix alpha(n, tags);
  for (size_t y = 0; y < tags; ++y) alpha(0, y) = a(a.start(), y) + p(0, y);
  Vector terms(tags);
  for (size_t t = 1; t < n; ++t) {
    for (size_t y = 0; y < tags; ++y) {
      for (size_t prev = 0; prev < tags; ++prev) {
        terms[prev] = alpha(t - 1, prev) + a(prev, y);
      }
      alpha(t, y) = p(t, y) + logsumexp(terms);
    }
  }
  return alpha;
}

// beta[t][y]: log-sum of all suffixes after y at t, STOP included.
Matrix backward_scores(const Matrix& p, const TransitionTable& a) {
  const size_t n = p.rows(), tags = p.cols();
  Matrix beta(n, tags);
  for (size_t y = 0; y < tags; ++y) beta(n - 1, y) = a(y, a.stop());
  Vector terms(tags);
  for (size_t t = n - 1; t-- > 0;) {
    for (size_t y = 0; y < tags; ++y) {
      for (size_t next = 0; next < tags; ++next) {
        terms[next] = a(y, next) + p(t + 1, next) + beta(t + 1, next);
      }
      beta(t, y) = logsumexp(terms);
    }
  }
  return beta;
}

double final_log_z(const Matrix& alpha, const TransitionTable& a) {
  const size_t last = alpha.rows() - 1;
  Vector terms(alpha.cols());
  for (size_t y = 0; y < alpha.cols(); ++y) {
    terms[y] = alpha(last, y) + a(y, a.stop());
  }
  return logsumexp(terms);
}

}  // namespace

SoftmaxNll softmax_nll(std::span<const double> state, const Matrix& weights,
                       int gold) {
  if (gold < 0 || static_cast<size_t>(gold) >= weights.rows()) {
    throw VocabularyError("gold class " + std::to_string(gold) +
                          " outside " + std::to_string(weights.rows()) +
                          " classes");
  }
  const Vector logits = matvec(weights, state);
  const Vector probs = softmax(logits);
  SoftmaxNll out;
  out.loss = logsumexp(logits) - logits[gold];
  Vector d_logits = probs;
  d_logits[gold] -= 1.0;
  out.d_weights = Matrix(weights.rows(), weights.cols());
  add_outer(out.d_weights, d_logits, state);
  out.d_state.assign(state.size(), 0.0);
  add_matvec_transposed(weights, d_logits, out.d_state);
  return out;
}

TransitionTable::TransitionTable(size_t num_tags)
    : num_tags_(num_tags), scores_(num_tags + 2, num_tags + 2) {
  enforce_structure();
}

void TransitionTable::enforce_structure() {
  for (size_t i = 0; i < num_tags_ + 2; ++i) {
    scores_(i, start()) = kForbiddenScore;
    scores_(stop(), i) = kForbiddenScore;
  }
}

double sequence_score(const Matrix& emissions, const TransitionTable& trans,
                      std::span<const int> tags) {
  check_tables(emissions, trans);
  check_tags(tags, emissions.rows(), trans.num_tags());
  double score = trans(trans.start(), tags[0]);
  for (size_t t = 0; t < tags.size(); ++t) {
    score += emissions(t, tags[t]);
    const size_t next = t + 1 < tags.size() ? static_cast<size_t>(tags[t + 1])
                                            : trans.stop();
    score += trans(tags[t], next);
  }
  return score;
}

double log_partition(const Matrix& emissions, const TransitionTable& trans) {
  check_tables(emissions, trans);
  return final_log_z(forward_scores(emissions, trans), trans);
}

CrfMarginals crf_marginals(const Matrix& emissions,
                           const TransitionTable& trans) {
  check_tables(emissions, trans);
  const size_t n = emissions.rows(), tags = emissions.cols();
  const Matrix alpha = forward_scores(emissions, trans);
  const Matrix beta = backward_scores(emissions, trans);
  CrfMarginals out;
  out.log_z = final_log_z(alpha, trans);
  out.unary = Matrix(n, tags);
  for (size_t t = 0; t < n; ++t) {
    for (size_t y = 0; y < tags; ++y) {
      out.unary(t, y) = std::exp(alpha(t, y) + beta(t, y) - out.log_z);
    }
  }
  out.pairwise.reserve(n - 1);
  for (size_t t = 0; t + 1 < n; ++t) {
    Matrix xi(tags, tags);
    for (size_t y = 0; y < tags; ++y) {
      for (size_t next = 0; next < tags; ++next) {
        xi(y, next) = std::exp(alpha(t, y) + trans(y, next) +
                               emissions(t + 1, next) + beta(t + 1, next) -
                               out.log_z);
      }
    }
    out.pairwise.push_back(std::move(xi));
  }
  return out;
}

CrfNll crf_nll_grad(const Matrix& emissions, const TransitionTable& trans,
                    std::span<const int> gold) {
  check_tables(emissions, trans);
  check_tags(gold, emissions.rows(), trans.num_tags());
  const size_t n = emissions.rows(), tags = emissions.cols();
  const CrfMarginals marg = crf_marginals(emissions, trans);
  CrfNll out;
  out.loss = marg.log_z - sequence_score(emissions, trans, gold);
  out.d_emissions = marg.unary;
  for (size_t t = 0; t < n; ++t) out.d_emissions(t, gold[t]) -= 1.0;

  out.d_transitions = Matrix(tags + 2, tags + 2);
  Matrix& da = out.d_transitions;
  for (size_t y = 0; y < tags; ++y) {
    da(trans.start(), y) += marg.unary(0, y);
    da(y, trans.stop()) += marg.unary(n - 1, y);
  }
  for (size_t t = 0; t + 1 < n; ++t) {
    for (size_t y = 0; y < tags; ++y) {
      for (size_t next = 0; next < tags; ++next) {
        da(y, next) += marg.pairwise[t](y, next);
      }
    }
  }
  da(trans.start(), gold[0]) -= 1.0;
  da(gold[n - 1], trans.stop()) -= 1.0;
  for (size_t t = 0; t + 1 < n; ++t) da(gold[t], gold[t + 1]) -= 1.0;
  return out;
}

Decoded viterbi(const Matrix& emissions, const TransitionTable& trans) {
  check_tables(emissions, trans);
  const size_t n = emissions.rows(), tags = emissions.cols();
  Matrix best(n, tags);
  std::vector<std::vector<int>> back(n, std::vector<int>(tags, 0));
  for (size_t y = 0; y < tags; ++y) {
    best(0, y) = trans(trans.start(), y) + emissions(0, y);
  }
  for (size_t t = 1; t < n; ++t) {
    for (size_t y = 0; y < tags; ++y) {
      int arg = 0;
      double top = best(t - 1, 0) + trans(0, y);
      for (size_t prev = 1; prev < tags; ++prev) {
        const double s = best(t - 1, prev) + trans(prev, y);
        if (s > top) {
          top = s;
          arg = static_cast<int>(prev);
        }
      }
      best(t, y) = top + emissions(t, y);
      back[t][y] = arg;
    }
  }
  Decoded out;
  int last = 0;
  out.score = best(n - 1, 0) + trans(0, trans.stop());
  for (size_t y = 1; y < tags; ++y) {
    const double s = best(n - 1, y) + trans(y, trans.stop());
    if (s > out.score) {
      out.score = s;
      last = static_cast<int>(y);
    }
  }
  out.tags.assign(n, 0);
  out.tags[n - 1] = last;
  for (size_t t = n - 1; t > 0; --t) out.tags[t - 1] = back[t][out.tags[t]];
  return out;
}

BioScheme::BioScheme(std::span<const std::string> tag_names)
    : inside_of_(tag_names.size(), -1), types_(tag_names.size()) {
  std::map<std::string, int> begin_of;
  bool has_outside = false;
  for (size_t k = 0; k < tag_names.size(); ++k) {
    const std::string& name = tag_names[k];
    if (name == "O") {
      has_outside = true;
    } else if (name == "B" || name.rfind("B-", 0) == 0) {
      types_[k] = name.size() > 2 ? name.substr(2) : "";
      begin_of[types_[k]] = static_cast<int>(k);
    } else if (name == "I" || name.rfind("I-", 0) == 0) {
      types_[k] = name.size() > 2 ? name.substr(2) : "";
    } else {
      throw ConfigError("tag '" + name + "' is not a BIO tag");
    }
  }
  if (!has_outside) throw ConfigError("BIO tag vocabulary lacks 'O'");
  for (size_t k = 0; k < tag_names.size(); ++k) {
    const std::string& name = tag_names[k];
    if (name == "I" || name.rfind("I-", 0) == 0) {
      auto it = begin_of.find(types_[k]);
      if (it == begin_of.end()) {
        throw ConfigError("tag '" + name + "' has no matching B tag");
      }
      inside_of_[k] = it->second;
    }
  }
}

bool BioScheme::allowed(int from, int to) const {
  const int opener = inside_of_.at(to);
  if (opener < 0) return true;
  return from == opener || (inside_of_.at(from) == opener);
}

bool BioScheme::allowed_first(int tag) const { return inside_of_.at(tag) < 0; }

bool BioScheme::well_formed(std::span<const int> tags) const {
  for (size_t t = 0; t < tags.size(); ++t) {
    if (t == 0 ? !allowed_first(tags[t]) : !allowed(tags[t - 1], tags[t])) {
      return false;
    }
  }
  return true;
}

std::vector<int> bio_decode_constrained(const Matrix& emissions,
                                        const TransitionTable& trans,
                                        const BioScheme& scheme) {
  if (scheme.size() != trans.num_tags()) {
    throw ConfigError("BIO scheme has " + std::to_string(scheme.size()) +
                      " tags but the transition table has " +
                      std::to_string(trans.num_tags()));
  }
  TransitionTable masked = trans;
  const int tags = static_cast<int>(trans.num_tags());
  for (int to = 0; to < tags; ++to) {
    if (!scheme.allowed_first(to)) masked.at(masked.start(), to) = kForbiddenScore;
    for (int from = 0; from < tags; ++from) {
      if (!scheme.allowed(from, to)) masked.at(from, to) = kForbiddenScore;
    }
  }
  return viterbi(emissions, masked).tags;
}

}  // namespace kblstm
