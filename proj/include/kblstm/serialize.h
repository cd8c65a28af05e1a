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

// Binary model container. Layout (all integers little-endian):
//
//   "KBL1"  u32 version
//   u32 n_kv,      n_kv x { u32 len, key bytes, u32 len, value bytes }
//   u32 n_tensor,  n_tensor x { u32 len, name bytes, u32 rank,
//                               rank x u64 dim, prod(dims) x f64 }
//
// The key-value block holds the configuration and the vocabularies.

#ifndef KBLSTM_SERIALIZE_H_
#define KBLSTM_SERIALIZE_H_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "kblstm/kbembed.h"
#include "kblstm/tagger.h"

namespace kblstm {

inline constexpr uint32_t kContainerVersion = 1;

struct Tensor {
  std::vector<uint64_t> dims;
  std::vector<double> values;
};

struct Container {
  std::map<std::string, std::string> kv;
  // Written in insertion order.
  std::vector<std::pair<std::string, Tensor>> tensors;

  const Tensor& tensor(const std::string& name) const;
  const std::string& value(const std::string& key) const;
};

void write_container(const Container& c, std::ostream& out);
// InputError on bad magic, unsupported version or truncation.
Container read_container(std::istream& in);

Container to_container(const TaggerModel& model);
TaggerModel from_container(const Container& c);

void save_model(const TaggerModel& model, const std::string& path);
TaggerModel load_model(const std::string& path);

// Knowledge-graph embedding models use the same container.
Container kb_to_container(const KbModel& model);
KbModel kb_from_container(const Container& c);
void save_kb_model(const KbModel& model, const std::string& path);
KbModel load_kb_model(const std::string& path);

}  // namespace kblstm

#endif  // KBLSTM_SERIALIZE_H_
