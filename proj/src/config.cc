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


#include "kblstm/config.h"

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "kblstm/errors.h"
#include "kblstm/text.h"

namespace kblstm {
namespace {

struct KeySpec {
  std::string name;
  bool list = false;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

[[noreturn]] void bad(const std::string& key, const std::string& why) {
  throw UsageError("--" + key + ": " + why);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  if (!parse_double(trim(v), out)) bad(key, "expected a number, got '" + v + "'");
  return out;
}

long long to_int(const std::string& key, const std::string& v) {
  long long out = 0;
  if (!parse_int(trim(v), out)) bad(key, "expected an integer, got '" + v + "'");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  const std::string s = casefold(trim(v));
  if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
  if (s == "0" || s == "false" || s == "no" || s == "off") return false;
  bad(key, "expected true or false, got '" + v + "'");
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

using Range = std::function<bool(double)>;

KeySpec path_key(const std::string& name, std::string RunConfig::*field) {
  return {name, false, [field](RunConfig& c, const std::string& v) { c.*field = trim(v); },
          [field](const RunConfig& c) { return c.*field; }};
}

KeySpec list_key(const std::string& name,
                 std::vector<std::string> RunConfig::*field) {
  return {name, true,
          [field](RunConfig& c, const std::string& v) {
            (c.*field).clear();
            for (const auto& p : split(v, ',')) {
              if (!trim(p).empty()) (c.*field).push_back(trim(p));
            }
          },
          [field](const RunConfig& c) { return join(c.*field, ","); }};
}

template <typename T, typename Access>
KeySpec int_key(const std::string& name, Access access, long long lo,
                long long hi, const std::string& range) {
  return {name, false,
          [=](RunConfig& c, const std::string& v) {
            const long long x = to_int(name, v);
            if (x < lo || x > hi) bad(name, "must be " + range + ", got " + v);
            access(c) = static_cast<T>(x);
          },
          [=](const RunConfig& c) {
            return std::to_string(access(const_cast<RunConfig&>(c)));
          }};
}

template <typename Access>
KeySpec real_key(const std::string& name, Access access, Range ok,
                 const std::string& range) {
  return {name, false,
          [=](RunConfig& c, const std::string& v) {
            const double x = to_double(name, v);
            if (!ok(x)) bad(name, "must be " + range + ", got " + v);
            access(c) = x;
          },
          [=](const RunConfig& c) { return fmt(access(const_cast<RunConfig&>(c))); }};
}

template <typename Access>
KeySpec bool_key(const std::string& name, Access access) {
  return {name, false,
          [=](RunConfig& c, const std::string& v) { access(c) = to_bool(name, v); },
          [=](const RunConfig& c) {
            return std::string(access(const_cast<RunConfig&>(c)) ? "true" : "false");
          }};
}

KeySpec choice_key(const std::string& name, std::vector<std::string> choices,
                   std::function<void(RunConfig&, const std::string&)> set,
                   std::function<std::string(const RunConfig&)> get) {
  return {name, false,
          [=](RunConfig& c, const std::string& raw) {
            const std::string v = trim(raw);
            if (std::find(choices.begin(), choices.end(), v) == choices.end()) {
              bad(name, "must be one of " + join(choices, "|") + ", got '" + v + "'");
            }
            set(c, v);
          },
          get};
}

const long long kMaxCount = 1000000000;

const std::vector<KeySpec>& key_specs() {
  static const std::vector<KeySpec> specs = [] {
    auto positive = [](double x) { return x > 0.0; };
    auto nonneg = [](double x) { return x >= 0.0; };
    auto unit_open = [](double x) { return x >= 0.0 && x < 1.0; };
    std::vector<KeySpec> s;
    s.push_back(path_key("train", &RunConfig::train));
    s.push_back(path_key("dev", &RunConfig::dev));
    s.push_back(path_key("test", &RunConfig::test));
    s.push_back(path_key("input", &RunConfig::input));
    s.push_back(path_key("model", &RunConfig::model));
    s.push_back(path_key("chunker", &RunConfig::chunker));
    s.push_back(path_key("lexicon", &RunConfig::lexicon));
    s.push_back(path_key("embeddings", &RunConfig::embeddings));
    s.push_back(path_key("word-vectors", &RunConfig::word_vectors));
    s.push_back(path_key("test-triples", &RunConfig::test_triples));
    s.push_back(path_key("out", &RunConfig::out));
    s.push_back(path_key("gold", &RunConfig::gold));
    s.push_back(list_key("triples", &RunConfig::triples));
    s.push_back(list_key("pred", &RunConfig::pred));
    s.push_back(list_key("corpus", &RunConfig::corpus));

    s.push_back(int_key<size_t>("word-dim", [](RunConfig& c) -> size_t& { return c.tagger.word_dim; }, 1, 100000, ">= 1"));
    s.push_back(int_key<size_t>("cap-dim", [](RunConfig& c) -> size_t& { return c.tagger.cap_dim; }, 1, 100000, ">= 1"));
    s.push_back(int_key<size_t>("hidden", [](RunConfig& c) -> size_t& { return c.tagger.hidden; }, 1, 100000, ">= 1"));
    s.push_back(choice_key(
        "objective", {"softmax", "crf"},
        [](RunConfig& c, const std::string& v) { c.tagger.objective = parse_objective(v); },
        [](const RunConfig& c) { return std::string(objective_name(c.tagger.objective)); }));
    s.push_back(choice_key(
        "knowledge", {"none", "features", "attention"},
        [](RunConfig& c, const std::string& v) { c.tagger.knowledge = parse_knowledge(v); },
        [](const RunConfig& c) { return std::string(knowledge_name(c.tagger.knowledge)); }));
    s.push_back(real_key("dropout", [](RunConfig& c) -> double& { return c.tagger.dropout; }, unit_open, "in [0, 1)"));
    s.push_back(real_key("lr", [](RunConfig& c) -> double& { return c.tagger.learning_rate; }, positive, "> 0"));
    s.push_back(real_key("clip", [](RunConfig& c) -> double& { return c.tagger.clip_norm; }, positive, "> 0"));
    s.push_back(real_key("unk-rate", [](RunConfig& c) -> double& { return c.tagger.unk_rate; }, unit_open, "in [0, 1)"));
    s.push_back(int_key<int>("epochs", [](RunConfig& c) -> int& { return c.tagger.epochs; }, 1, kMaxCount, ">= 1"));
    s.push_back(int_key<int>("patience", [](RunConfig& c) -> int& { return c.tagger.patience; }, 1, kMaxCount, ">= 1"));
    s.push_back(bool_key("use-bias", [](RunConfig& c) -> bool& { return c.tagger.use_bias; }));
    s.push_back(bool_key("train-projection", [](RunConfig& c) -> bool& { return c.tagger.train_projection; }));
    s.push_back(bool_key("constrained-decode", [](RunConfig& c) -> bool& { return c.tagger.constrained_decode; }));
    s.push_back(choice_key(
        "boundary", {"gold", "chunker"},
        [](RunConfig& c, const std::string& v) {
          c.boundary = v == "gold" ? BoundarySource::kGold : BoundarySource::kChunker;
        },
        [](const RunConfig& c) {
          return std::string(c.boundary == BoundarySource::kGold ? "gold" : "chunker");
        }));
    s.push_back(int_key<int>("runs", [](RunConfig& c) -> int& { return c.runs; }, 1, 1000, "in [1, 1000]"));

    s.push_back(int_key<size_t>("kb-dim", [](RunConfig& c) -> size_t& { return c.kb.dim; }, 1, 100000, ">= 1"));
    s.push_back(real_key("kb-lr", [](RunConfig& c) -> double& { return c.kb.learning_rate; }, positive, "> 0"));
    s.push_back(int_key<size_t>("batch", [](RunConfig& c) -> size_t& { return c.kb.batch_size; }, 1, kMaxCount, ">= 1"));
    s.push_back(int_key<size_t>("negatives", [](RunConfig& c) -> size_t& { return c.kb.negatives; }, 1, 100000, ">= 1"));
    s.push_back(int_key<int>("kb-epochs", [](RunConfig& c) -> int& { return c.kb.epochs; }, 1, kMaxCount, ">= 1"));
    s.push_back(real_key("weight-decay", [](RunConfig& c) -> double& { return c.kb.weight_decay; }, nonneg, ">= 0"));
    s.push_back(bool_key("phrase-entities", [](RunConfig& c) -> bool& { return c.kb.phrase_entities; }));
    s.push_back({"category-relation", false,
                 [](RunConfig& c, const std::string& v) {
                   if (trim(v).empty()) bad("category-relation", "must not be empty");
                   c.kb.category_relation = trim(v);
                 },
                 [](const RunConfig& c) { return c.kb.category_relation; }});
    s.push_back(real_key("min-confidence", [](RunConfig& c) -> double& { return c.min_confidence; },
                         [](double x) { return x >= 0.0 && x <= 1.0; }, "in [0, 1]"));
    s.push_back(int_key<size_t>("top-k", [](RunConfig& c) -> size_t& { return c.top_k; }, 1, kMaxCount, ">= 1"));
    s.push_back(choice_key(
        "link-mode", {"object", "category"},
        [](RunConfig& c, const std::string& v) {
          c.link_mode = v == "object" ? LinkMode::kObject : LinkMode::kCategory;
        },
        [](const RunConfig& c) {
          return std::string(c.link_mode == LinkMode::kObject ? "object" : "category");
        }));

    s.push_back(choice_key(
        "kind", {"disambig", "block-kb"},
        [](RunConfig& c, const std::string& v) { c.kind = v; },
        [](const RunConfig& c) { return c.kind; }));
    s.push_back(int_key<size_t>("vocab", [](RunConfig& c) -> size_t& { return c.synth.vocab; }, 1, kMaxCount, ">= 1"));
    s.push_back(int_key<size_t>("categories", [](RunConfig& c) -> size_t& { return c.synth.categories; }, 1, 100000, ">= 1"));
    s.push_back(int_key<size_t>("ambiguous", [](RunConfig& c) -> size_t& { return c.synth.ambiguous; }, 0, kMaxCount, ">= 0"));
    s.push_back(int_key<size_t>("train-sentences", [](RunConfig& c) -> size_t& { return c.synth.train_sentences; }, 1, kMaxCount, ">= 1"));
    s.push_back(int_key<size_t>("dev-sentences", [](RunConfig& c) -> size_t& { return c.synth.dev_sentences; }, 1, kMaxCount, ">= 1"));
    s.push_back(int_key<size_t>("test-sentences", [](RunConfig& c) -> size_t& { return c.synth.test_sentences; }, 1, kMaxCount, ">= 1"));
    s.push_back(real_key("ambiguity-rate", [](RunConfig& c) -> double& { return c.synth.ambiguity_rate; },
                         [](double x) { return x > 0.0 && x <= 1.0; }, "in (0, 1]"));
    s.push_back(int_key<size_t>("entities", [](RunConfig& c) -> size_t& { return c.block.entities; }, 2, kMaxCount, ">= 2"));
    s.push_back(int_key<size_t>("block-categories", [](RunConfig& c) -> size_t& { return c.block.categories; }, 1, 100000, ">= 1"));
    s.push_back(int_key<size_t>("links", [](RunConfig& c) -> size_t& { return c.block.links_per_relation; }, 1, 100000, ">= 1"));
    s.push_back(real_key("heldout", [](RunConfig& c) -> double& { return c.block.heldout; }, unit_open, "in [0, 1)"));

    s.push_back(int_key<uint64_t>("seed", [](RunConfig& c) -> uint64_t& { return c.seed; }, 0,
                                  std::numeric_limits<long long>::max(), ">= 0"));
    s.push_back({"corrupt", false,
                 [](RunConfig& c, const std::string& v) { c.corrupt = trim(v); },
                 [](const RunConfig& c) { return c.corrupt; }});
    return s;
  }();
  return specs;
}

const KeySpec* find_key(const std::string& name) {
  for (const auto& k : key_specs()) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

std::string normalize_key(std::string key) {
  key = trim(key);
  std::replace(key.begin(), key.end(), '_', '-');
  return key;
}

std::vector<std::pair<std::string, std::string>> read_config_file(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("--config: cannot open '" + path + "'");
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw UsageError(path + ":" + std::to_string(line_no) +
                       ": expected 'key = value'");
    }
    const std::string key = normalize_key(t.substr(0, eq));
    if (!find_key(key)) {
      throw UsageError(path + ":" + std::to_string(line_no) +
                       ": unknown key '" + key + "'");
    }
    out.emplace_back(key, trim(t.substr(eq + 1)));
  }
  return out;
}

void require(bool present, const std::string& key, Task task) {
  if (!present) {
    throw UsageError("--" + key + " is required for " + task_name(task));
  }
}

void check_required(const RunConfig& c) {
  const Task t = c.task;
  switch (t) {
    case Task::kKbTrain:
      require(!c.triples.empty(), "triples", t);
      require(!c.out.empty(), "out", t);
      break;
    case Task::kKbEval:
      require(!c.model.empty(), "model", t);
      require(!c.test_triples.empty(), "test-triples", t);
      break;
    case Task::kChunkerTrain:
      require(!c.train.empty(), "train", t);
      require(!c.dev.empty(), "dev", t);
      require(!c.out.empty(), "out", t);
      break;
    case Task::kTyperTrain:
    case Task::kEventTrain:
      require(!c.train.empty(), "train", t);
      require(!c.dev.empty(), "dev", t);
      require(!c.out.empty(), "out", t);
      if (t == Task::kTyperTrain && c.boundary == BoundarySource::kChunker) {
        require(!c.chunker.empty(), "chunker", t);
      }
      if (c.tagger.knowledge != KnowledgeMode::kNone) {
        require(!c.lexicon.empty(), "lexicon", t);
        require(!c.embeddings.empty(), "embeddings", t);
      }
      break;
    case Task::kTag:
    case Task::kAttnDump:
      require(!c.model.empty(), "model", t);
      require(!c.input.empty(), "input", t);
      break;
    case Task::kEval:
      require(!c.gold.empty(), "gold", t);
      require(!c.pred.empty(), "pred", t);
      break;
    case Task::kSynthGen:
      require(!c.out.empty(), "out", t);
      break;
    case Task::kGradAudit:
      break;
    case Task::kValidate:
      if (c.corpus.empty() && c.lexicon.empty() && c.embeddings.empty() &&
          c.triples.empty()) {
        throw UsageError(
            "validate needs at least one of --corpus, --lexicon, --embeddings, "
            "--triples");
      }
      break;
  }
}

}  // namespace

const char* task_name(Task t) {
  switch (t) {
    case Task::kKbTrain: return "kb-train";
    case Task::kKbEval: return "kb-eval";
    case Task::kChunkerTrain: return "chunker-train";
    case Task::kTyperTrain: return "typer-train";
    case Task::kEventTrain: return "event-train";
    case Task::kTag: return "tag";
    case Task::kEval: return "eval";
    case Task::kSynthGen: return "synth-gen";
    case Task::kGradAudit: return "grad-audit";
    case Task::kAttnDump: return "attn-dump";
    case Task::kValidate: return "validate";
  }
  return "?";
}

const std::vector<Task>& all_tasks() {
  static const std::vector<Task> tasks = {
      Task::kKbTrain,   Task::kKbEval,   Task::kChunkerTrain, Task::kTyperTrain,
      Task::kEventTrain, Task::kTag,     Task::kEval,         Task::kSynthGen,
      Task::kGradAudit, Task::kAttnDump, Task::kValidate};
  return tasks;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& k : key_specs()) out.push_back(k.name);
  return out;
}

RunConfig parse_config(const std::vector<std::string>& args,
                       const std::optional<std::string>& env_seed,
                       std::ostream* help_out) {
  CLI::App app{"Knowledge-aware BiLSTM taggers and KB embeddings", "kblstm"};
  app.require_subcommand(1);
  std::map<std::string, std::string> scalars;
  std::map<std::string, std::vector<std::string>> lists;
  std::string config_path;
  std::map<CLI::App*, Task> subs;
  for (Task t : all_tasks()) {
    CLI::App* sub = app.add_subcommand(task_name(t));
    sub->add_option("--config", config_path, "flat key = value file");
    for (const auto& k : key_specs()) {
      if (k.list) {
        sub->add_option("--" + k.name, lists[k.name])->delimiter(',');
      } else {
        sub->add_option("--" + k.name, scalars[k.name]);
      }
    }
    sub->add_flag("--no-bias", "same as --use-bias false");
    sub->add_flag("--no-projection", "same as --train-projection false");
    subs[sub] = t;
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  RunConfig config;
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    if (help_out) *help_out << app.help();
    config.help_shown = true;
    return config;
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  CLI::App* chosen = app.get_subcommands().front();
  config.task = subs.at(chosen);
  if (chosen->get_help_ptr() && chosen->get_help_ptr()->count() > 0) {
    if (help_out) *help_out << chosen->help();
    config.help_shown = true;
    return config;
  }

  bool seed_set = false;
  if (!config_path.empty()) {
    for (const auto& [key, value] : read_config_file(config_path)) {
      find_key(key)->set(config, value);
      seed_set = seed_set || key == "seed";
    }
  }
  for (const auto& k : key_specs()) {
    if (chosen->count("--" + k.name) == 0) continue;
    k.set(config, k.list ? join(lists[k.name], ",") : scalars[k.name]);
    seed_set = seed_set || k.name == "seed";
  }
  if (chosen->count("--no-bias") > 0) config.tagger.use_bias = false;
  if (chosen->count("--no-projection") > 0) config.tagger.train_projection = false;
  if (!seed_set && env_seed && !trim(*env_seed).empty()) {
    find_key("seed")->set(config, *env_seed);
  }

  config.tagger.seed = config.kb.seed = config.synth.seed = config.block.seed =
      config.seed;
  try {
    config.tagger.validate();
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
  check_required(config);
  return config;
}

std::string format_config(const RunConfig& config) {
  std::string out = std::string("# task = ") + task_name(config.task) + '\n';
  for (const auto& k : key_specs()) {
    out += k.name + " = " + k.get(config) + '\n';
  }
  return out;
}

}  // namespace kblstm
