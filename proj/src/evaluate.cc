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

#include <algorithm>
#include <cmath>
#include <set>

#include "kblstm/errors.h"

namespace kblstm {

Prf evaluate_spans(std::span<const SentenceSpans> gold,
                   std::span<const SentenceSpans> predicted) {
  if (gold.size() != predicted.size()) {
    throw InputError("gold has " + std::to_string(gold.size()) +
                     " sentences, predictions have " +
                     std::to_string(predicted.size()));
  }
  Prf r;
  for (size_t i = 0; i < gold.size(); ++i) {
    if (gold[i].sentence_id != predicted[i].sentence_id) {
      throw InputError("sentence ids misaligned at position " +
                       std::to_string(i) + ": gold " +
                       std::to_string(gold[i].sentence_id) + ", predicted " +
                       std::to_string(predicted[i].sentence_id));
    }
    const std::set<Span> g(gold[i].spans.begin(), gold[i].spans.end());
    const std::set<Span> p(predicted[i].spans.begin(),
                           predicted[i].spans.end());
    r.gold += g.size();
    r.predicted += p.size();
    for (const auto& s : p) r.correct += g.count(s);
  }
  if (r.predicted == 0) {
    r.warnings.push_back("no predicted spans; precision set to 0");
  } else {
    r.precision = static_cast<double>(r.correct) / r.predicted;
  }
  if (r.gold == 0) {
    r.warnings.push_back("no gold spans; recall set to 0");
  } else {
    r.recall = static_cast<double>(r.correct) / r.gold;
  }
  if (r.precision + r.recall > 0.0) {
    r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
  } else {
    r.warnings.push_back("precision and recall are 0; F1 set to 0");
  }
  return r;
}

RankSumResult wilcoxon_rank_sum_test(std::span<const double> a,
                                     std::span<const double> b) {
  if (a.size() < 3 || b.size() < 3) {
    throw InputError("rank-sum test needs at least 3 values per sample (got " +
                     std::to_string(a.size()) + " and " +
                     std::to_string(b.size()) + ")");
  }
  struct Item {
    double value;
    bool first;
  };
  std::vector<Item> all;
  for (double v : a) all.push_back({v, true});
  for (double v : b) all.push_back({v, false});
  std::sort(all.begin(), all.end(),
            [](const Item& x, const Item& y) { return x.value < y.value; });

  const double n1 = static_cast<double>(a.size());
  const double n2 = static_cast<double>(b.size());
  const double n = n1 + n2;
  double rank_sum_a = 0.0;
  double tie_term = 0.0;  // sum of t^3 - t over tie groups
  for (size_t i = 0; i < all.size();) {
    size_t j = i;
    while (j < all.size() && all[j].value == all[i].value) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    const double t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    for (size_t k = i; k < j; ++k) {
      if (all[k].first) rank_sum_a += avg_rank;
    }
    i = j;
  }
  RankSumResult r;
  r.u = rank_sum_a - n1 * (n1 + 1.0) / 2.0;
  const double mean = n1 * n2 / 2.0;
  const double var = n1 * n2 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
  if (var <= 0.0) {
    r.z = 0.0;
    r.p_value = 1.0;
    return r;
  }
  r.z = (r.u - mean) / std::sqrt(var);
  r.p_value = std::min(1.0, std::erfc(std::abs(r.z) / std::sqrt(2.0)));
  return r;
}

double wilcoxon_rank_sum(std::span<const double> a, std::span<const double> b) {
  return wilcoxon_rank_sum_test(a, b).p_value;
}

MeanStd mean_std(std::span<const double> values) {
  MeanStd r;
  if (values.empty()) return r;
  for (double v : values) r.mean += v;
  r.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - r.mean) * (v - r.mean);
    r.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return r;
}

}  // namespace kblstm
