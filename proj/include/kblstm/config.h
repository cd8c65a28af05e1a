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


// Run configuration: defaults, then the KBLSTM_SEED environment variable,
// then a flat `key = value` file, then command-line flags.

#ifndef KBLSTM_CONFIG_H_
#define KBLSTM_CONFIG_H_

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "kblstm/kbembed.h"
#include "kblstm/synth.h"
#include "kblstm/tagger.h"
#include "kblstm/training.h"

namespace kblstm {

enum class Task {
  kKbTrain,
  kKbEval,
  kChunkerTrain,
  kTyperTrain,
  kEventTrain,
  kTag,
  kEval,
  kSynthGen,
  kGradAudit,
  kAttnDump,
  kValidate,
};

const char* task_name(Task t);
const std::vector<Task>& all_tasks();

struct RunConfig {
  Task task = Task::kGradAudit;

  // Paths.
  std::string train, dev, test, input, model, chunker, lexicon, embeddings,
      word_vectors, test_triples, out, gold;
  std::vector<std::string> triples, pred, corpus;

  TaggerConfig tagger;
  BoundarySource boundary = BoundarySource::kGold;
  int runs = 1;

  KbConfig kb;
  double min_confidence = 0.9;
  size_t top_k = 10;
  LinkMode link_mode = LinkMode::kObject;

  std::string kind = "disambig";  // synth-gen: disambig | block-kb
  SynthSpec synth;
  BlockKbSpec block;

  uint64_t seed = 1;
  std::string corrupt;  // grad-audit checker sanity

  // Set when --help was handled; the caller should exit 0.
  bool help_shown = false;
};

// Every key accepted on the command line (as --key) and in config files.
std::vector<std::string> config_keys();

// Parses `args` (without the program name). UsageError names the offending
// key for unknown flags, bad values, range violations and missing paths.
RunConfig parse_config(const std::vector<std::string>& args,
                       const std::optional<std::string>& env_seed = std::nullopt,
                       std::ostream* help_out = nullptr);

// Resolved values as `key = value` lines, readable back as a config file.
std::string format_config(const RunConfig& config);

}  // namespace kblstm

#endif  // KBLSTM_CONFIG_H_
