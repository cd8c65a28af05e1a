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

// Finite-difference audit of every hand-written backward pass.

#ifndef KBLSTM_GRAD_AUDIT_H_
#define KBLSTM_GRAD_AUDIT_H_

#include <cstdint>
#include <string>
#include <vector>

namespace kblstm {

inline constexpr double kAuditThreshold = 1e-4;
inline constexpr double kAuditEpsilon = 1e-5;

struct AuditResult {
  std::string component;
  double max_relative_error = 0.0;
  size_t instances = 0;
  size_t coordinates = 0;
  std::string worst;  // "<instance>:<param>[<index>]"
  bool passed = false;
};

struct AuditReport {
  std::vector<AuditResult> components;
  double threshold = kAuditThreshold;
  bool passed = false;
};

// Registered suites, in report order: rnn, knowattn, crf, kbembed.
const std::vector<std::string>& audit_components();

// Runs every suite over seeded random instances. `corrupt` names a suite
// whose analytic gradients are doubled before comparison (checker sanity);
// an unknown name is a UsageError.
AuditReport grad_audit(uint64_t seed = 1, const std::string& corrupt = "",
                       double threshold = kAuditThreshold,
                       double epsilon = kAuditEpsilon);

// Report lines: `component<TAB>max_rel_err<TAB>instances<TAB>coords<TAB>PASS|FAIL`.
std::string format_audit(const AuditReport& report);

}  // namespace kblstm

#endif  // KBLSTM_GRAD_AUDIT_H_
