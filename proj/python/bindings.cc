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


// Python bindings. Matrices cross the boundary as lists of rows.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "kblstm/corpus.h"
#include "kblstm/crf.h"
#include "kblstm/errors.h"
#include "kblstm/evaluate.h"
#include "kblstm/grad_audit.h"
#include "kblstm/kbembed.h"
#include "kblstm/knowattn.h"
#include "kblstm/serialize.h"
#include "kblstm/synth.h"
#include "kblstm/tagger.h"
#include "kblstm/training.h"
#include "kblstm/validate.h"

namespace py = pybind11;

namespace kblstm {
namespace {

using Rows = std::vector<std::vector<double>>;

Matrix to_matrix(const Rows& rows) {
  const size_t cols = rows.empty() ? 0 : rows[0].size();
  Matrix m(rows.size(), cols);
  for (size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != cols) throw DimensionError("ragged matrix rows");
    for (size_t c = 0; c < cols; ++c) m(r, c) = rows[r][c];
  }
  return m;
}

Rows to_rows(const Matrix& m) {
  Rows out(m.rows());
  for (size_t r = 0; r < m.rows(); ++r) out[r].assign(m.row(r).begin(), m.row(r).end());
  return out;
}

// transitions is (L+2) x (L+2) with START = L and STOP = L+1.
TransitionTable to_transitions(const Rows& rows) {
  const Matrix m = to_matrix(rows);
  if (m.rows() < 2 || m.rows() != m.cols()) {
    throw DimensionError("transitions must be square (L+2)x(L+2), got " + m.shape_string());
  }
  TransitionTable t(m.rows() - 2);
  t.matrix() = m;
  t.enforce_structure();
  return t;
}

py::dict prf_dict(const Prf& p) {
  py::dict d;
  d["precision"] = p.precision;
  d["recall"] = p.recall;
  d["f1"] = p.f1;
  d["correct"] = p.correct;
  d["predicted"] = p.predicted;
  d["gold"] = p.gold;
  return d;
}

TaggerConfig tagger_config(const std::string& knowledge, const std::string& objective,
                           size_t word_dim, size_t hidden, int epochs, double dropout,
                           double learning_rate, uint64_t seed) {
  TaggerConfig cfg;
  if (knowledge == "none") {
    cfg.knowledge = KnowledgeMode::kNone;
  } else if (knowledge == "features") {
    cfg.knowledge = KnowledgeMode::kFeatures;
  } else if (knowledge == "attention") {
    cfg.knowledge = KnowledgeMode::kAttention;
  } else {
    throw ConfigError("knowledge must be none|features|attention, got " + knowledge);
  }
  if (objective == "crf") {
    cfg.objective = Objective::kCrf;
  } else if (objective == "softmax") {
    cfg.objective = Objective::kSoftmax;
  } else {
    throw ConfigError("objective must be crf|softmax, got " + objective);
  }
  cfg.word_dim = word_dim;
  cfg.hidden = hidden;
  cfg.epochs = epochs;
  cfg.dropout = dropout;
  cfg.learning_rate = learning_rate;
  cfg.seed = seed;
  cfg.validate();
  return cfg;
}

}  // namespace
}  // namespace kblstm

PYBIND11_MODULE(_core, m) {
  using namespace kblstm;
  m.doc() = "Knowledge-aware BiLSTM sequence tagging";

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<DimensionError>(m, "DimensionError", base.ptr());
  py::register_exception<InputError>(m, "InputError", base.ptr());
  py::register_exception<VocabularyError>(m, "VocabularyError", base.ptr());
  py::register_exception<SamplingError>(m, "SamplingError", base.ptr());
  py::register_exception<NumericError>(m, "NumericError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<StateError>(m, "StateError", base.ptr());
  py::register_exception<UsageError>(m, "UsageError", base.ptr());

  m.def(
      "grad_audit",
      [](uint64_t seed, const std::string& corrupt) {
        const AuditReport r = grad_audit(seed, corrupt);
        py::list comps;
        for (const auto& c : r.components) {
          py::dict d;
          d["component"] = c.component;
          d["max_relative_error"] = c.max_relative_error;
          d["instances"] = c.instances;
          d["coordinates"] = c.coordinates;
          d["worst"] = c.worst;
          d["passed"] = c.passed;
          comps.append(d);
        }
        py::dict out;
        out["passed"] = r.passed;
        out["components"] = comps;
        return out;
      },
      py::arg("seed") = 1, py::arg("corrupt") = "");

  m.def(
      "log_partition",
      [](const Rows& em, const Rows& trans) {
        return log_partition(to_matrix(em), to_transitions(trans));
      },
      py::arg("emissions"), py::arg("transitions"));
  m.def(
      "viterbi",
      [](const Rows& em, const Rows& trans) {
        const Decoded d = viterbi(to_matrix(em), to_transitions(trans));
        return py::make_tuple(d.tags, d.score);
      },
      py::arg("emissions"), py::arg("transitions"));
  m.def(
      "crf_marginals",
      [](const Rows& em, const Rows& trans) {
        return to_rows(crf_marginals(to_matrix(em), to_transitions(trans)).unary);
      },
      py::arg("emissions"), py::arg("transitions"));
  m.def(
      "sequence_score",
      [](const Rows& em, const Rows& trans, const std::vector<int>& tags) {
        return sequence_score(to_matrix(em), to_transitions(trans), tags);
      },
      py::arg("emissions"), py::arg("transitions"), py::arg("tags"));

  m.def(
      "attention_weights",
      [](size_t hidden, size_t input_dim, const Rows& candidates, uint64_t seed) {
        Rng rng(seed);
        const size_t dk = candidates.empty() ? 2 * hidden : candidates[0].size();
        const AttnParams p = AttnParams::init(dk, hidden, input_dim, rng);
        Vector h(2 * hidden), hp(2 * hidden), x(input_dim), c(2 * hidden);
        for (auto* v : {&h, &hp, &x, &c}) fill_uniform(*v, -1, 1, rng);
        CandidateSet cands;
        for (size_t i = 0; i < candidates.size(); ++i) {
          cands.ids.push_back(static_cast<int>(i));
          cands.vectors.push_back(candidates[i]);
        }
        const KnowledgeStep k = knowledge_state(h, sentinel(hp, x, c, p).s, cands, p);
        return py::make_tuple(k.alpha, k.beta);
      },
      "Attention weights (alpha, beta) for random parameters and states.",
      py::arg("hidden"), py::arg("input_dim"), py::arg("candidates"), py::arg("seed") = 1);

  m.def(
      "wilcoxon_rank_sum",
      [](const std::vector<double>& a, const std::vector<double>& b) {
        const RankSumResult r = wilcoxon_rank_sum_test(a, b);
        return py::make_tuple(r.u, r.z, r.p_value);
      },
      py::arg("a"), py::arg("b"));

  m.def(
      "evaluate_files",
      [](const std::string& gold_path, const std::string& pred_path) {
        const Corpus gold = read_corpus(gold_path);
        const Corpus pred = read_corpus(pred_path);
        bool bio = false;
        for (const auto& s : gold.sentences) {
          for (const auto& t : s.tokens) bio |= t.tag.size() > 1 && t.tag[1] == '-';
        }
        const SpanScheme scheme = bio ? SpanScheme::kBio : SpanScheme::kUnit;
        return prf_dict(evaluate_spans(gold_spans(gold, scheme), gold_spans(pred, scheme)));
      },
      py::arg("gold"), py::arg("pred"));

  m.def(
      "synth_gen",
      [](const std::string& out, uint64_t seed, size_t vocab, size_t categories,
         size_t ambiguous, size_t train, size_t dev, size_t test, double rate) {
        SynthSpec spec;
        spec.seed = seed;
        spec.vocab = vocab;
        spec.categories = categories;
        spec.ambiguous = ambiguous;
        spec.train_sentences = train;
        spec.dev_sentences = dev;
        spec.test_sentences = test;
        spec.ambiguity_rate = rate;
        const SynthOutput s = gen_synthetic(spec);
        write_synthetic(s, out);
        return s.ceiling;
      },
      "Writes a disambiguation corpus to `out`; returns the KB-blind ceiling.",
      py::arg("out"), py::arg("seed") = 1, py::arg("vocab") = 200, py::arg("categories") = 8,
      py::arg("ambiguous") = 40, py::arg("train_sentences") = 2000,
      py::arg("dev_sentences") = 500, py::arg("test_sentences") = 500,
      py::arg("ambiguity_rate") = 0.3);
  m.def(
      "block_kb_gen",
      [](const std::string& out, uint64_t seed) {
        BlockKbSpec spec;
        spec.seed = seed;
        write_block_kb(gen_block_kb(spec), out);
      },
      py::arg("out"), py::arg("seed") = 1);

  m.def(
      "kb_train",
      [](const std::vector<std::string>& triples, const std::string& out,
         const std::string& embeddings, size_t dim, int epochs, double lr, uint64_t seed) {
        TripleData data;
        for (const auto& p : triples) load_triples(p, data, true);
        KbConfig cfg;
        cfg.dim = dim;
        cfg.epochs = epochs;
        cfg.learning_rate = lr;
        cfg.seed = seed;
        const KbModel model = train_kb(data, cfg);
        save_kb_model(model, out);
        if (!embeddings.empty()) {
          std::ofstream f(embeddings, std::ios::binary);
          if (!f) throw InputError("cannot write " + embeddings);
          export_embeddings(model, f);
        }
      },
      py::arg("triples"), py::arg("out"), py::arg("embeddings") = "", py::arg("dim") = 100,
      py::arg("epochs") = 100, py::arg("lr") = 0.05, py::arg("seed") = 1);
  m.def(
      "kb_eval",
      [](const std::string& model_path, const std::string& test, size_t top_k,
         const std::string& mode) {
        const KbModel model = load_kb_model(model_path);
        TripleData data;
        data.entities = model.entities;
        data.relations = model.relations;
        load_triples(test, data, false);
        if (mode != "object" && mode != "category") {
          throw ConfigError("mode must be object|category, got " + mode);
        }
        return eval_link_prediction(model, data.triples, top_k,
                                    mode == "object" ? LinkMode::kObject : LinkMode::kCategory);
      },
      py::arg("model"), py::arg("test"), py::arg("top_k") = 10, py::arg("mode") = "object");

  m.def(
      "train_typer",
      [](const std::string& train, const std::string& dev, const std::string& out,
         const std::string& knowledge, const std::string& objective, const std::string& lexicon,
         const std::string& embeddings, size_t word_dim, size_t hidden, int epochs,
         double dropout, double lr, uint64_t seed) {
        const TaggerConfig cfg =
            tagger_config(knowledge, objective, word_dim, hidden, epochs, dropout, lr, seed);
        std::optional<ConceptLexicon> lex;
        if (!lexicon.empty()) lex = ConceptLexicon::load(lexicon, embeddings);
        const TrainResult r = train_stage2_typer(read_corpus(train), read_corpus(dev),
                                                 BoundarySource::kGold, nullptr, cfg,
                                                 lex ? &*lex : nullptr);
        save_model(r.model, out);
        return r.best_dev_f1;
      },
      "Gold-boundary chunk typer; saves the model and returns the best dev F1.",
      py::arg("train"), py::arg("dev"), py::arg("out"), py::arg("knowledge") = "attention",
      py::arg("objective") = "crf", py::arg("lexicon") = "", py::arg("embeddings") = "",
      py::arg("word_dim") = 100, py::arg("hidden") = 100, py::arg("epochs") = 30,
      py::arg("dropout") = 0.5, py::arg("lr") = 0.001, py::arg("seed") = 1);
  m.def(
      "tag",
      [](const std::string& model_path, const std::string& input) {
        const TaggerModel model = load_model(model_path);
        const Corpus corpus = read_corpus(input);
        py::list out;
        for (const auto& s : tag(model, nullptr, corpus)) {
          py::list spans;
          for (const Span& sp : s.spans) spans.append(py::make_tuple(sp.start, sp.end, sp.type));
          out.append(spans);
        }
        return out;
      },
      "Predicted (start, end, type) spans per sentence.", py::arg("model"), py::arg("input"));

  m.def(
      "validate",
      [](const std::vector<std::string>& corpora, const std::string& lexicon,
         const std::string& embeddings, const std::vector<std::string>& triples) {
        const ValidationReport r = validate_files({corpora, lexicon, embeddings, triples});
        py::list out;
        for (const auto& v : r.violations) out.append(py::make_tuple(v.file, v.line, v.reason));
        return out;
      },
      py::arg("corpora") = std::vector<std::string>{}, py::arg("lexicon") = "",
      py::arg("embeddings") = "", py::arg("triples") = std::vector<std::string>{});
}
