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


// kblstm command-line driver. Logs go to stderr, results to stdout.
// Exit codes: 0 ok, 1 usage, 2 data or validation, 3 numerical gate.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "kblstm/config.h"
#include "kblstm/corpus.h"
#include "kblstm/errors.h"
#include "kblstm/evaluate.h"
#include "kblstm/grad_audit.h"
#include "kblstm/kbembed.h"
#include "kblstm/knowattn.h"
#include "kblstm/serialize.h"
#include "kblstm/synth.h"
#include "kblstm/training.h"
#include "kblstm/validate.h"

namespace kblstm {
namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

void log_line(const std::string& msg) { std::fprintf(stderr, "[kblstm] %s\n", msg.c_str()); }

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

void print_warnings(const Prf& prf) {
  for (const auto& w : prf.warnings) log_line("warning: " + w);
}

void print_metrics(uint64_t seed, const Prf& prf) {
  std::printf("%llu\t%s\t%s\t%s\n", static_cast<unsigned long long>(seed),
              fixed(prf.precision).c_str(), fixed(prf.recall).c_str(),
              fixed(prf.f1).c_str());
}

void print_summary(const std::vector<Prf>& runs) {
  std::vector<double> p, r, f;
  for (const auto& x : runs) {
    p.push_back(x.precision);
    r.push_back(x.recall);
    f.push_back(x.f1);
  }
  auto cell = [](const std::vector<double>& v) {
    const MeanStd ms = mean_std(v);
    return fixed(ms.mean) + "±" + fixed(ms.stddev);
  };
  std::printf("mean±std\t%s\t%s\t%s\n", cell(p).c_str(), cell(r).c_str(),
              cell(f).c_str());
}

bool has_bio_tags(const Corpus& corpus) {
  for (const auto& s : corpus.sentences) {
    for (const auto& t : s.tokens) {
      if (t.tag.size() > 2 && (t.tag[0] == 'B' || t.tag[0] == 'I') && t.tag[1] == '-') {
        return true;
      }
    }
  }
  return false;
}

bool is_chunker(const TaggerModel& model) {
  for (const auto& t : model.tags.names()) {
    if (t != "B" && t != "I" && t != "O") return false;
  }
  return true;
}

std::vector<SentenceSpans> untyped(std::vector<SentenceSpans> spans) {
  for (auto& s : spans) {
    for (auto& sp : s.spans) sp.type.clear();
  }
  return spans;
}

Prf score(const TaggerModel& model, const TaggerModel* chunker,
          const Corpus& corpus) {
  const SpanScheme scheme = has_bio_tags(corpus) ? SpanScheme::kBio : SpanScheme::kUnit;
  auto gold = gold_spans(corpus, scheme);
  if (is_chunker(model)) gold = untyped(std::move(gold));
  const Prf prf = evaluate_spans(gold, tag(model, chunker, corpus));
  print_warnings(prf);
  return prf;
}

std::optional<EmbeddingTable> maybe_word_vectors(const RunConfig& c) {
  if (c.word_vectors.empty()) return std::nullopt;
  return load_embeddings(c.word_vectors);
}

std::optional<ConceptLexicon> maybe_lexicon(const RunConfig& c) {
  if (c.tagger.knowledge == KnowledgeMode::kNone || c.lexicon.empty()) {
    return std::nullopt;
  }
  return ConceptLexicon::load(c.lexicon, c.embeddings);
}

EpochLog epoch_logger(uint64_t seed) {
  return [seed](const EpochRecord& r) {
    log_line("seed " + std::to_string(seed) + " epoch " + std::to_string(r.epoch) +
             " loss " + fixed(r.train_loss) + " dev_f1 " + fixed(r.dev_f1));
  };
}

std::string run_path(const RunConfig& c, uint64_t seed) {
  return c.runs == 1 ? c.out : c.out + "." + std::to_string(seed);
}

int run_tagger_training(const RunConfig& c) {
  const Corpus train = read_corpus(c.train);
  const Corpus dev = read_corpus(c.dev);
  std::optional<Corpus> test;
  if (!c.test.empty()) test = read_corpus(c.test);
  const auto words = maybe_word_vectors(c);
  const auto lexicon = maybe_lexicon(c);
  std::optional<TaggerModel> chunker;
  if (c.task == Task::kTyperTrain && c.boundary == BoundarySource::kChunker) {
    chunker = load_model(c.chunker);
  }
  const EmbeddingTable* pre = words ? &*words : nullptr;
  const ConceptLexicon* lex = lexicon ? &*lexicon : nullptr;
  const TaggerModel* chunk = chunker ? &*chunker : nullptr;

  std::vector<Prf> results;
  for (int run = 0; run < c.runs; ++run) {
    TaggerConfig cfg = c.tagger;
    cfg.seed = c.seed + static_cast<uint64_t>(run);
    TrainResult result;
    switch (c.task) {
      case Task::kChunkerTrain:
        result = train_stage1_chunker(train, dev, cfg, pre, epoch_logger(cfg.seed));
        break;
      case Task::kTyperTrain:
        result = train_stage2_typer(train, dev, c.boundary, chunk, cfg, lex, pre,
                                    epoch_logger(cfg.seed));
        break;
      default:
        result = train_event_tagger(train, dev, cfg, lex, pre, epoch_logger(cfg.seed));
        break;
    }
    log_line("seed " + std::to_string(cfg.seed) + " best epoch " +
             std::to_string(result.best_epoch) + " dev_f1 " +
             fixed(result.best_dev_f1));
    save_model(result.model, run_path(c, cfg.seed));
    const Prf prf = score(result.model, chunk, test ? *test : dev);
    print_metrics(cfg.seed, prf);
    results.push_back(prf);
  }
  if (c.runs > 1) print_summary(results);
  return kExitOk;
}

TripleData read_triple_files(const std::vector<std::string>& paths, double min_conf) {
  TripleData data;
  for (const auto& p : paths) load_triples(p, data, true, min_conf);
  return data;
}

int run_kb_train(const RunConfig& c) {
  const TripleData data = read_triple_files(c.triples, c.min_confidence);
  log_line("triples " + std::to_string(data.triples.size()) + " entities " +
           std::to_string(data.entities.size()) + " relations " +
           std::to_string(data.relations.size()));
  const KbModel model = train_kb(data, c.kb, [](int epoch, double loss) {
    log_line("kb epoch " + std::to_string(epoch) + " loss " + fixed(loss, 6));
  });
  save_kb_model(model, c.out);
  if (!c.embeddings.empty()) {
    std::ofstream out(c.embeddings, std::ios::binary);
    if (!out) throw InputError("cannot write " + c.embeddings);
    export_embeddings(model, out);
  }
  return kExitOk;
}

int run_kb_eval(const RunConfig& c) {
  const KbModel model = load_kb_model(c.model);
  TripleData data;
  data.entities = model.entities;
  data.relations = model.relations;
  load_triples(c.test_triples, data, false, c.min_confidence);
  const double acc = eval_link_prediction(model, data.triples, c.top_k, c.link_mode);
  std::printf("%s\ttop%zu\t%s\n", c.link_mode == LinkMode::kObject ? "object" : "category",
              c.top_k, fixed(acc).c_str());
  return kExitOk;
}

// Input corpus with its tag column replaced by predictions.
Corpus with_predicted_tags(const Corpus& input, const std::vector<SentenceSpans>& pred,
                           bool bio) {
  Corpus out = input;
  for (size_t i = 0; i < out.sentences.size(); ++i) {
    auto& toks = out.sentences[i].tokens;
    for (auto& t : toks) t.tag = "O";
    for (const Span& s : pred[i].spans) {
      for (size_t k = s.start; k <= s.end; ++k) {
        if (!bio) {
          toks[k].tag = s.type;
        } else {
          const std::string prefix = k == s.start ? "B" : "I";
          toks[k].tag = s.type.empty() ? prefix : prefix + "-" + s.type;
        }
      }
    }
  }
  return out;
}

int run_tag(const RunConfig& c) {
  const TaggerModel model = load_model(c.model);
  std::optional<TaggerModel> chunker;
  if (!c.chunker.empty()) chunker = load_model(c.chunker);
  const Corpus input = read_corpus(c.input);
  const auto pred = tag(model, chunker ? &*chunker : nullptr, input);
  const bool bio = model.config.scheme == SpanScheme::kBio ||
                   model.config.unit == UnitMode::kChunk;
  write_corpus(with_predicted_tags(input, pred, bio), std::cout);
  return kExitOk;
}

int run_eval(const RunConfig& c) {
  const Corpus gold = read_corpus(c.gold);
  const SpanScheme scheme = has_bio_tags(gold) ? SpanScheme::kBio : SpanScheme::kUnit;
  const auto gold_sp = gold_spans(gold, scheme);
  std::vector<Prf> results;
  for (size_t i = 0; i < c.pred.size(); ++i) {
    const Corpus pred = read_corpus(c.pred[i]);
    if (pred.size() != gold.size()) {
      throw InputError(c.pred[i] + ": " + std::to_string(pred.size()) +
                       " sentences, gold has " + std::to_string(gold.size()));
    }
    const Prf prf = evaluate_spans(gold_sp, gold_spans(pred, scheme));
    print_warnings(prf);
    print_metrics(c.seed + i, prf);
    results.push_back(prf);
  }
  if (results.size() > 1) print_summary(results);
  return kExitOk;
}

int run_synth(const RunConfig& c) {
  if (c.kind == "block-kb") {
    write_block_kb(gen_block_kb(c.block), c.out);
    log_line("block KB written to " + c.out);
    return kExitOk;
  }
  const SynthOutput out = gen_synthetic(c.synth);
  write_synthetic(out, c.out);
  std::printf("ceiling\t%s\n", fixed(out.ceiling, 6).c_str());
  return kExitOk;
}

int run_grad_audit(const RunConfig& c) {
  const AuditReport report = grad_audit(c.seed, c.corrupt);
  std::fputs(format_audit(report).c_str(), stdout);
  return report.passed ? kExitOk : kExitNumeric;
}

int run_attn_dump(const RunConfig& c) {
  const TaggerModel model = load_model(c.model);
  std::optional<TaggerModel> chunker;
  if (!c.chunker.empty()) chunker = load_model(c.chunker);
  const Corpus input = read_corpus(c.input);
  for (size_t i = 0; i < input.size(); ++i) {
    const Sentence& s = input.sentences[i];
    Sequence seq;
    if (model.config.unit == UnitMode::kChunk) {
      seq = chunk_sequence(s, build_chunks(s, mention_boundaries(s, chunker ? &*chunker : nullptr)));
    } else {
      seq = token_sequence(s);
    }
    if (i > 0) std::printf("\n");
    for (const auto& r : dump_attention(model, seq)) {
      std::printf("%s\n", format_attention_record(r).c_str());
    }
  }
  return kExitOk;
}

int run_validate(const RunConfig& c) {
  const ValidationReport report =
      validate_files({c.corpus, c.lexicon, c.embeddings, c.triples});
  std::fputs(format_report(report).c_str(), stdout);
  log_line(std::to_string(report.violations.size()) + " violation(s)");
  return report.ok() ? kExitOk : kExitData;
}

int dispatch(const RunConfig& c) {
  switch (c.task) {
    case Task::kKbTrain: return run_kb_train(c);
    case Task::kKbEval: return run_kb_eval(c);
    case Task::kChunkerTrain:
    case Task::kTyperTrain:
    case Task::kEventTrain: return run_tagger_training(c);
    case Task::kTag: return run_tag(c);
    case Task::kEval: return run_eval(c);
    case Task::kSynthGen: return run_synth(c);
    case Task::kGradAudit: return run_grad_audit(c);
    case Task::kAttnDump: return run_attn_dump(c);
    case Task::kValidate: return run_validate(c);
  }
  return kExitUsage;
}

int main_impl(int argc, char** argv) {
  RunConfig config;
  try {
    std::optional<std::string> env_seed;
    if (const char* s = std::getenv("KBLSTM_SEED")) env_seed = s;
    config = parse_config(std::vector<std::string>(argv + 1, argv + argc), env_seed,
                          &std::cout);
    if (config.help_shown) return kExitOk;
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kExitUsage;
  }
  std::fputs(format_config(config).c_str(), stderr);
  try {
    return dispatch(config);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kExitUsage;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return kExitNumeric;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  }
}

}  // namespace
}  // namespace kblstm

int main(int argc, char** argv) { return kblstm::main_impl(argc, argv); }
