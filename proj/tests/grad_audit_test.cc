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


#include "kblstm/grad_audit.h"

#include <gtest/gtest.h>

#include <algorithm>

#include "kblstm/errors.h"

namespace kblstm {
namespace {

TEST(GradAuditTest, FreshRunPassesEveryComponent) {
  const AuditReport r = grad_audit();
  EXPECT_TRUE(r.passed) << format_audit(r);
  for (const auto& c : r.components) {
    EXPECT_LT(c.max_relative_error, kAuditThreshold) << c.component;
    EXPECT_GT(c.coordinates, 100u);
  }
}

TEST(GradAuditTest, ListsExactlyFourSuites) {
  EXPECT_EQ(audit_components(),
            (std::vector<std::string>{"rnn", "knowattn", "crf", "kbembed"}));
  const AuditReport r = grad_audit(3);
  ASSERT_EQ(r.components.size(), 4u);
  EXPECT_EQ(r.components[2].component, "crf");
}

TEST(GradAuditTest, CorruptionIsFlaggedOnlyWhereInjected) {
  for (const auto& name : audit_components()) {
    const AuditReport r = grad_audit(1, name);
    EXPECT_FALSE(r.passed);
    for (const auto& c : r.components) EXPECT_EQ(c.passed, c.component != name) << c.component;
  }
  EXPECT_THROW(grad_audit(1, "lstm"), UsageError);
}

TEST(GradAuditTest, ReportFormat) {
  const std::string text = format_audit(grad_audit());
  EXPECT_EQ(text.rfind("rnn\t", 0), 0u);
  EXPECT_NE(text.find("\tPASS"), std::string::npos);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 4);
}

}  // namespace
}  // namespace kblstm
