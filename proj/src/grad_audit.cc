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

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <functional>

#include "kblstm/crf.h"
#include "kblstm/errors.h"
#include "kblstm/kbembed.h"
#include "kblstm/knowattn.h"
#include "kblstm/numerics.h"
#include "kblstm/rnn.h"
#include "kblstm/tagger.h"

namespace kblstm {
namespace {

Vector random_vector(size_t n, Rng& rng, double scale = 1.0) {
  Vector v(n);
  fill_uniform(v, -scale, scale, rng);
  return v;
}

Matrix random_matrix(size_t r, size_t c, Rng& rng, double scale = 1.0) {
  Matrix m(r, c);
  fill_uniform(m.values(), -scale, scale, rng);
  return m;
}

void randomize(LstmParams& p, Rng& rng) {
  p.for_each([&](const char*, std::span<double> v) {
    fill_uniform(v, -0.8, 0.8, rng);
  });
}

// Runs grad_check for one instance and folds it into the component result.
class Collector {
 public:
  Collector(AuditResult& result, bool corrupt, double epsilon)
      : result_(result), corrupt_(corrupt), epsilon_(epsilon) {}

  void check(const std::string& instance, const LossFn& loss,
             const std::vector<ParamRef>& refs) {
    LossFn run = loss;
    if (corrupt_) {
      run = [&loss, &refs](bool with_grad) {
        const double v = loss(with_grad);
        if (with_grad) {
          for (const auto& p : refs) {
            for (double& g : p.grad) g *= 2.0;
          }
        }
        return v;
      };
    }
    const GradCheckReport rep = grad_check(run, refs, epsilon_);
    if (std::getenv("KBLSTM_AUDIT_TRACE")) std::fprintf(stderr, "%s %.3e %s[%zu] a=%.9g n=%.9g\n", instance.c_str(), rep.max_relative_error, rep.worst_param.c_str(), rep.worst_index, rep.analytic, rep.numeric);
    ++result_.instances;
    result_.coordinates += rep.coordinates;
    if (rep.max_relative_error >= result_.max_relative_error) {
      result_.max_relative_error = rep.max_relative_error;
      result_.worst = instance + ":" + rep.worst_param + "[" +
                      std::to_string(rep.worst_index) + "]";
    }
  }

 private:
  AuditResult& result_;
  bool corrupt_;
  double epsilon_;
};

void add_vector_ref(std::vector<ParamRef>& refs, const std::string& name,
                    Vector& value, Vector& grad) {
  refs.push_back({name, value, grad});
}

void rnn_suite(Rng& rng, Collector& out) {
  const size_t dims[] = {2, 3, 5};
  // Single steps, including a bias-free cell.
  for (size_t d : dims) {
    for (size_t h : dims) {
      for (bool bias : {true, false}) {
        if (!bias && h != 3) continue;
        LstmParams p = LstmParams::zeros(d, h, bias);
        randomize(p, rng);
        LstmParams g = LstmParams::zeros(d, h, bias);
        Vector x = random_vector(d, rng), hp = random_vector(h, rng),
               cp = random_vector(h, rng);
        Vector dx(d), dhp(h), dcp(h);
        const Vector r = random_vector(h, rng), q = random_vector(h, rng);
        std::vector<ParamRef> refs = param_refs(p, g, "");
        add_vector_ref(refs, "x", x, dx);
        add_vector_ref(refs, "h_prev", hp, dhp);
        add_vector_ref(refs, "c_prev", cp, dcp);
        auto loss = [&](bool with_grad) {
          const LstmStep s = lstm_step(x, hp, cp, p);
          if (with_grad) {
            zero_grads(refs);
            lstm_step_backward(x, hp, cp, s, r, q, p, g, dx, dhp, dcp);
          }
          return dot(r, s.h) + dot(q, s.c);
        };
        out.check("lstm_step D=" + std::to_string(d) + " H=" +
                      std::to_string(h) + (bias ? "" : " nobias"),
                  loss, refs);
      }
    }
  }
  // Bidirectional encodings with losses on both h and c.
  for (size_t d : dims) {
    for (size_t h : {size_t{2}, size_t{3}}) {
      for (size_t T : {size_t{1}, size_t{3}, size_t{7}}) {
        LstmParams f = LstmParams::zeros(d, h), b = LstmParams::zeros(d, h);
        randomize(f, rng);
        randomize(b, rng);
        LstmParams gf = LstmParams::zeros(d, h), gb = LstmParams::zeros(d, h);
        std::vector<Vector> xs(T), dxs(T), r(T), q(T);
        for (size_t t = 0; t < T; ++t) {
          xs[t] = random_vector(d, rng);
          dxs[t].assign(d, 0.0);
          r[t] = random_vector(2 * h, rng);
          q[t] = random_vector(2 * h, rng);
        }
        std::vector<ParamRef> refs = param_refs(f, gf, "fwd/");
        for (auto& ref : param_refs(b, gb, "bwd/")) refs.push_back(ref);
        for (size_t t = 0; t < T; ++t) {
          add_vector_ref(refs, "x" + std::to_string(t), xs[t], dxs[t]);
        }
        auto loss = [&](bool with_grad) {
          const BiStates bi = bilstm_encode(xs, f, b);
          double v = 0.0;
          for (size_t t = 0; t < T; ++t) {
            v += dot(r[t], bi.h[t]) + dot(q[t], bi.c[t]);
          }
          if (with_grad) {
            zero_grads(refs);
            bilstm_backward(xs, bi, f, b, r, q, gf, gb, dxs);
          }
          return v;
        };
        out.check("bilstm D=" + std::to_string(d) + " H=" + std::to_string(h) +
                      " T=" + std::to_string(T),
                  loss, refs);
      }
    }
  }
}

ConceptLexicon random_lexicon(size_t concepts, size_t dim, Rng& rng) {
  EmbeddingTable table;
  for (size_t c = 0; c < concepts; ++c) table.ids.add("c" + std::to_string(c));
  table.vectors = random_matrix(concepts, dim, rng);
  return ConceptLexicon(std::move(table));
}

void knowattn_suite(Rng& rng, Collector& out) {
  // Sentinel, attention and fusion in isolation.
  for (size_t h : {size_t{2}, size_t{3}}) {
    for (size_t L : {size_t{0}, size_t{1}, size_t{4}}) {
      const size_t d = 3, dk = 2 + rng.below(5), two_h = 2 * h;
      AttnParams p = AttnParams::init(dk, h, d, rng, true);
      fill_uniform(p.w_p.values(), -1.0, 1.0, rng);
      AttnParams g = AttnParams::zeros_like(p);
      CandidateSet cands;
      for (size_t i = 0; i < L; ++i) {
        cands.ids.push_back(static_cast<int>(i));
        cands.vectors.push_back(random_vector(dk, rng));
      }
      Vector hp = random_vector(two_h, rng), x = random_vector(d, rng),
             c = random_vector(two_h, rng, 1.5), hv = random_vector(two_h, rng);
      Vector dhp(two_h), dx(d), dc(two_h), dh(two_h);
      const Vector r = random_vector(two_h, rng);
      std::vector<ParamRef> refs = param_refs(p, g, "");
      add_vector_ref(refs, "h_prev", hp, dhp);
      add_vector_ref(refs, "x", x, dx);
      add_vector_ref(refs, "c", c, dc);
      add_vector_ref(refs, "h", hv, dh);
      auto loss = [&](bool with_grad) {
        const Sentinel s = sentinel(hp, x, c, p);
        const KnowledgeStep k = knowledge_state(hv, s.s, cands, p);
        if (with_grad) {
          zero_grads(refs);
          for (size_t i = 0; i < two_h; ++i) dh[i] += r[i];  // fusion
          Vector ds(two_h, 0.0);
          knowledge_state_backward(hv, s.s, cands, k, r, p, g, dh, ds);
          sentinel_backward(hp, x, c, s, ds, p, g, dhp, dx, dc);
        }
        return dot(r, k.h_hat);
      };
      out.check("attention H=" + std::to_string(h) + " L=" + std::to_string(L) +
                    " d_k=" + std::to_string(dk),
                loss, refs);
    }
  }
  // The whole knowledge-aware tagger loss (BiLSTM, sentinel, attention,
  // fusion, head) on short sentences.
  const char* words[] = {"alpha", "Beta", "gamma", "DELTA", "eps"};
  for (Objective obj : {Objective::kCrf, Objective::kSoftmax}) {
    for (UnitMode unit : {UnitMode::kToken, UnitMode::kChunk}) {
      const size_t dk = 4;
      ConceptLexicon lex = random_lexicon(6, dk, rng);
      lex.add_entry("alpha", {"c0"});
      lex.add_entry("beta", {"c1", "c2", "c3", "c4"});
      lex.add_entry("delta", {"c5", "c0"});
      TaggerConfig cfg;
      cfg.word_dim = 3;
      cfg.cap_dim = 2;
      cfg.hidden = 2 + rng.below(2);
      cfg.objective = obj;
      cfg.knowledge = KnowledgeMode::kAttention;
      cfg.unit = unit;
      cfg.scheme = SpanScheme::kUnit;
      cfg.dropout = 0.0;
      cfg.seed = rng.next();
      Sequence seq;
      const size_t T = 3 + rng.below(2);
      const char* tags[] = {"O", "X", "Y"};
      for (size_t t = 0; t < T; ++t) {
        Unit u;
        u.words.push_back(words[t]);
        if (unit == UnitMode::kChunk && t % 2 == 1) u.words.push_back("eps");
        u.head = u.words.size() - 1;
        seq.units.push_back(u);
        seq.gold.push_back(tags[rng.below(3)]);
      }
      std::vector<Sequence> train{seq};
      TaggerModel model = init_tagger(cfg, train, &lex);
      // Unit-scale weights everywhere; the default small init leaves some
      // gradients near 1e-8, where central differences are mostly roundoff.
      fill_uniform(model.word_emb.values(), -1.0, 1.0, rng);
      model.for_each_dense([&](const std::string&, std::span<double> v) {
        fill_uniform(v, -1.0, 1.0, rng);
      });
      model.trans.enforce_structure();
      const EncodedSequence enc = model.encode(seq);
      TaggerGrads grads = TaggerGrads::zeros_like(model);
      tagger_loss(model, enc, tagger_forward(model, enc, nullptr), &grads);
      const std::vector<ParamRef> refs = tagger_param_refs(model, grads);
      auto loss = [&](bool with_grad) {
        if (with_grad) zero_grads(refs);
        const ForwardCache cache = tagger_forward(model, enc, nullptr);
        return tagger_loss(model, enc, cache, with_grad ? &grads : nullptr);
      };
      out.check(std::string("tagger ") + objective_name(obj) +
                    (unit == UnitMode::kChunk ? " chunk" : " token"),
                loss, refs);
    }
  }
}

void crf_suite(Rng& rng, Collector& out) {
  for (int i = 0; i < 8; ++i) {
    const size_t L = 2 + rng.below(3), dim = 2 + rng.below(4);
    Vector state = random_vector(dim, rng, 2.0);
    Matrix w = random_matrix(L, dim, rng);
    const int gold = static_cast<int>(rng.below(L));
    Vector d_state(dim);
    Matrix d_w(L, dim);
    std::vector<ParamRef> refs{{"h", state, d_state}, {"W", w.values(), d_w.values()}};
    auto loss = [&](bool with_grad) {
      SoftmaxNll r = softmax_nll(state, w, gold);
      if (with_grad) {
        std::copy(r.d_state.begin(), r.d_state.end(), d_state.begin());
        std::copy(r.d_weights.values().begin(), r.d_weights.values().end(),
                  d_w.values().begin());
      }
      return r.loss;
    };
    out.check("softmax_nll L=" + std::to_string(L), loss, refs);
  }
  for (int i = 0; i < 12; ++i) {
    const size_t T = 1 + rng.below(5), L = 1 + rng.below(4);
    Matrix p = random_matrix(T, L, rng, 2.0);
    TransitionTable a(L);
    fill_uniform(a.matrix().values(), -1.0, 1.0, rng);
    a.enforce_structure();
    std::vector<int> gold(T);
    for (auto& y : gold) y = static_cast<int>(rng.below(L));
    Matrix dp(T, L), da(L + 2, L + 2);
    std::vector<ParamRef> refs{{"P", p.values(), dp.values()},
                               {"A", a.matrix().values(), da.values()}};
    auto loss = [&](bool with_grad) {
      CrfNll r = crf_nll_grad(p, a, gold);
      if (with_grad) {
        std::copy(r.d_emissions.values().begin(), r.d_emissions.values().end(),
                  dp.values().begin());
        std::copy(r.d_transitions.values().begin(),
                  r.d_transitions.values().end(), da.values().begin());
      }
      return r.loss;
    };
    out.check("crf T=" + std::to_string(T) + " L=" + std::to_string(L), loss,
              refs);
  }
}

void kbembed_suite(Rng& rng, Collector& out) {
  for (int i = 0; i < 8; ++i) {
    const size_t n = 5, dim = 3 + rng.below(3), rels = 2;
    KbModel m;
    for (size_t e = 0; e < n; ++e) m.entities.add("e" + std::to_string(e));
    for (size_t r = 0; r < rels; ++r) m.relations.add("r" + std::to_string(r));
    m.dim = dim;
    m.entity_vectors = random_matrix(n, dim, rng, 0.5);
    for (size_t r = 0; r < rels; ++r) {
      Matrix mr = Matrix::identity(dim);
      for (double& v : mr.values()) v += rng.uniform(-0.3, 0.3);
      m.relation_matrices.push_back(std::move(mr));
    }
    const Triple pos{static_cast<int>(rng.below(n)),
                     static_cast<int>(rng.below(rels)),
                     static_cast<int>(rng.below(n))};
    std::vector<Triple> negs;
    for (size_t e = 0; e < n && negs.size() < 3; ++e) {
      if (static_cast<int>(e) != pos.e2) negs.push_back({pos.e1, pos.r, static_cast<int>(e)});
    }
    Matrix ge(n, dim);
    std::vector<Matrix> gr(rels, Matrix(dim, dim));
    std::vector<ParamRef> refs{{"entities", m.entity_vectors.values(), ge.values()}};
    for (size_t r = 0; r < rels; ++r) {
      refs.push_back({"M_r" + std::to_string(r), m.relation_matrices[r].values(),
                      gr[r].values()});
    }
    auto loss = [&](bool with_grad) {
      RankingLoss rl = ranking_loss_and_grads(m, pos, negs);
      if (with_grad) {
        zero_grads(refs);
        for (const auto& [e, g] : rl.grads.entities) {
          std::copy(g.begin(), g.end(), ge.row(e).begin());
        }
        for (const auto& [r, g] : rl.grads.relations) {
          std::copy(g.values().begin(), g.values().end(), gr[r].values().begin());
        }
      }
      return rl.loss;
    };
    out.check("ranking d=" + std::to_string(dim), loss, refs);
  }
}

using SuiteFn = std::function<void(Rng&, Collector&)>;

const std::vector<std::pair<std::string, SuiteFn>>& registry() {
  static const std::vector<std::pair<std::string, SuiteFn>> suites = {
      {"rnn", rnn_suite},
      {"knowattn", knowattn_suite},
      {"crf", crf_suite},
      {"kbembed", kbembed_suite},
  };
  return suites;
}

}  // namespace

const std::vector<std::string>& audit_components() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [name, fn] : registry()) out.push_back(name);
    return out;
  }();
  return names;
}

AuditReport grad_audit(uint64_t seed, const std::string& corrupt,
                       double threshold, double epsilon) {
  const auto& names = audit_components();
  if (!corrupt.empty() &&
      std::find(names.begin(), names.end(), corrupt) == names.end()) {
    throw UsageError("unknown component '" + corrupt +
                     "' (expected rnn, knowattn, crf or kbembed)");
  }
  AuditReport report;
  report.threshold = threshold;
  report.passed = true;
  uint64_t salt = 0;
  for (const auto& [name, fn] : registry()) {
    AuditResult result;
    result.component = name;
    Rng rng(seed * 0x9E3779B97F4A7C15ULL + (++salt));
    Collector collector(result, name == corrupt, epsilon);
    fn(rng, collector);
    result.passed = result.max_relative_error < threshold;
    report.passed = report.passed && result.passed;
    report.components.push_back(std::move(result));
  }
  return report;
}

std::string format_audit(const AuditReport& report) {
  std::string out;
  char buf[64];
  for (const auto& r : report.components) {
    std::snprintf(buf, sizeof(buf), "%.3e", r.max_relative_error);
    out += r.component + '\t' + buf + '\t' + std::to_string(r.instances) + '\t' +
           std::to_string(r.coordinates) + '\t' + (r.passed ? "PASS" : "FAIL") +
           '\t' + r.worst + '\n';
  }
  return out;
}

}  // namespace kblstm
