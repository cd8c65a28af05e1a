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

// Exact-match span scoring and the two-sided Wilcoxon rank-sum test.

#ifndef KBLSTM_EVALUATE_H_
#define KBLSTM_EVALUATE_H_

#include <span>
#include <string>
#include <vector>

#include "kblstm/corpus.h"

namespace kblstm {

struct SentenceSpans {
  size_t sentence_id = 0;
  std::vector<Span> spans;
};

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  size_t correct = 0;
  size_t predicted = 0;
  size_t gold = 0;
  // Set when a zero denominator forced a metric to 0.
  std::vector<std::string> warnings;
};

// A predicted span counts when (start, end, type) equals a gold span of
// the same sentence. Both lists must carry the same sentence ids in the
// same order (InputError otherwise).
Prf evaluate_spans(std::span<const SentenceSpans> gold,
                   std::span<const SentenceSpans> predicted);

struct RankSumResult {
  double u = 0.0;        // Mann-Whitney U of the first sample
  double z = 0.0;
  double p_value = 1.0;  // two-sided
};

// Normal approximation with tie correction, no continuity correction.
// Each sample needs at least 3 values (InputError).
RankSumResult wilcoxon_rank_sum_test(std::span<const double> a,
                                     std::span<const double> b);
double wilcoxon_rank_sum(std::span<const double> a, std::span<const double> b);

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation, 0 for one value
};
MeanStd mean_std(std::span<const double> values);

}  // namespace kblstm

#endif  // KBLSTM_EVALUATE_H_
