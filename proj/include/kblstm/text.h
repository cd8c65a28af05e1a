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

// Small string helpers shared by the file readers.

#ifndef KBLSTM_TEXT_H_
#define KBLSTM_TEXT_H_

#include <string>
#include <string_view>
#include <vector>

namespace kblstm {

std::vector<std::string> split(std::string_view line, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
std::string trim(std::string_view s);
void strip_cr(std::string& line);
// ASCII lower-casing; bytes outside ASCII pass through unchanged.
std::string casefold(std::string_view s);
bool parse_double(std::string_view s, double& out);
bool parse_int(std::string_view s, long long& out);

}  // namespace kblstm

#endif  // KBLSTM_TEXT_H_
