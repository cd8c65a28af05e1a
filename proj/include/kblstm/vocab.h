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

#ifndef KBLSTM_VOCAB_H_
#define KBLSTM_VOCAB_H_

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "kblstm/errors.h"

namespace kblstm {

// Bidirectional string <-> dense id map. Ids follow insertion order.
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> names) {
    for (auto& n : names) add(n);
  }

  int add(const std::string& name) {
    auto [it, inserted] = index_.emplace(name, static_cast<int>(names_.size()));
    if (inserted) names_.push_back(name);
    return it->second;
  }

  // -1 when absent.
  int find(std::string_view name) const {
    auto it = index_.find(std::string(name));
    return it == index_.end() ? -1 : it->second;
  }

  int at(std::string_view name) const {
    const int id = find(name);
    if (id < 0) throw VocabularyError("unknown id '" + std::string(name) + "'");
    return id;
  }

  const std::string& name(int id) const {
    if (id < 0 || static_cast<size_t>(id) >= names_.size()) {
      throw VocabularyError("id " + std::to_string(id) + " out of range");
    }
    return names_[id];
  }

  bool contains(std::string_view name) const { return find(name) >= 0; }
  size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::vector<std::string> names_;
  std::map<std::string, int, std::less<>> index_;
};

}  // namespace kblstm

#endif  // KBLSTM_VOCAB_H_
