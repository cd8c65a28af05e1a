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

#include "kblstm/knowattn.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <set>

#include "kblstm/errors.h"
#include "kblstm/text.h"

namespace kblstm {

ConceptLexicon::ConceptLexicon(EmbeddingTable concepts)
    : concepts_(std::move(concepts.ids)), vectors_(std::move(concepts.vectors)) {}

ConceptLexicon ConceptLexicon::load(std::istream& lexicon,
                                    const EmbeddingTable& embeddings) {
  std::vector<std::pair<std::string, std::vector<std::string>>> rows;
  std::set<std::string> referenced;
  std::string line;
  size_t line_no = 0;
  while (std::getline(lexicon, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split(line, '\t');
    if (fields.size() != 2 || fields[0].empty() || fields[1].empty()) {
      throw InputError("lexicon line " + std::to_string(line_no) +
                       ": expected 'surface<TAB>concept[,concept...]'");
    }
    auto ids = split(fields[1], ',');
    for (auto& id : ids) {
      id = trim(id);
      if (id.empty()) {
        throw InputError("lexicon line " + std::to_string(line_no) +
                         ": empty concept id");
      }
      if (!embeddings.ids.contains(id)) {
        throw VocabularyError("lexicon line " + std::to_string(line_no) +
                              ": concept '" + id + "' has no embedding");
      }
      referenced.insert(id);
    }
    rows.emplace_back(fields[0], std::move(ids));
  }

  EmbeddingTable kept;
  std::vector<double> values;
  for (const auto& name : embeddings.ids.names()) {
    if (!referenced.count(name)) continue;
    kept.ids.add(name);
    auto row = embeddings.vectors.row(embeddings.ids.at(name));
    values.insert(values.end(), row.begin(), row.end());
  }
  kept.vectors =
      Matrix(kept.ids.size(), embeddings.vectors.cols(), std::move(values));
  ConceptLexicon lex(std::move(kept));
  for (const auto& [surface, ids] : rows) lex.add_entry(surface, ids);
  return lex;
}

ConceptLexicon ConceptLexicon::load(const std::string& lexicon_path,
                                    const std::string& embeddings_path) {
  std::ifstream in(lexicon_path);
  if (!in) throw InputError("cannot open lexicon " + lexicon_path);
  return load(in, load_embeddings(embeddings_path));
}

void ConceptLexicon::add_entry(std::string_view surface,
                               const std::vector<std::string>& concept_ids) {
  auto& list = entries_[casefold(surface)];
  for (const auto& id : concept_ids) {
    const int c = concepts_.find(id);
    if (c < 0) {
      throw VocabularyError("concept '" + id + "' has no embedding");
    }
    if (std::find(list.begin(), list.end(), c) == list.end()) list.push_back(c);
  }
}

CandidateSet ConceptLexicon::retrieve(std::string_view surface) const {
  CandidateSet out;
  auto it = entries_.find(casefold(surface));
  if (it == entries_.end()) return out;
  const size_t n = std::min(it->second.size(), kMaxCandidates);
  for (size_t i = 0; i < n; ++i) {
    const int c = it->second[i];
    out.ids.push_back(c);
    auto row = vectors_.row(c);
    out.vectors.emplace_back(row.begin(), row.end());
  }
  return out;
}

CandidateSet ConceptLexicon::retrieve_chunk(std::span<const std::string> words,
                                            size_t head) const {
  if (words.empty()) return {};
  std::string phrase = words[0];
  for (size_t i = 1; i < words.size(); ++i) phrase += ' ' + words[i];
  CandidateSet whole = retrieve(phrase);
  if (!whole.empty() || words.size() == 1) return whole;
  return retrieve(words[std::min(head, words.size() - 1)]);
}

AttnParams AttnParams::init(size_t concept_dim, size_t hidden_dim,
                            size_t input_dim, Rng& rng,
                            bool train_projection) {
  const size_t state = 2 * hidden_dim;
  if (!train_projection && concept_dim != state) {
    throw ConfigError("a frozen identity projection needs d_k == 2H (d_k=" +
                      std::to_string(concept_dim) +
                      ", 2H=" + std::to_string(state) + ")");
  }
  AttnParams p;
  p.w_v = Matrix(concept_dim, state);
  p.w_s = Matrix(state, state);
  p.w_b_fwd = Matrix(hidden_dim, hidden_dim);
  p.w_b_bwd = Matrix(hidden_dim, hidden_dim);
  p.u_b_fwd = Matrix(hidden_dim, input_dim);
  p.u_b_bwd = Matrix(hidden_dim, input_dim);
  for (Matrix* m : {&p.w_v, &p.w_s, &p.w_b_fwd, &p.w_b_bwd, &p.u_b_fwd,
                    &p.u_b_bwd}) {
    fill_glorot(*m, rng);
  }
  p.w_p = Matrix(state, concept_dim);
  for (size_t i = 0; i < std::min(state, concept_dim); ++i) p.w_p(i, i) = 1.0;
  p.train_projection = train_projection;
  return p;
}

AttnParams AttnParams::zeros_like(const AttnParams& other) {
  AttnParams g;
  g.w_v = Matrix(other.w_v.rows(), other.w_v.cols());
  g.w_s = Matrix(other.w_s.rows(), other.w_s.cols());
  g.w_b_fwd = Matrix(other.w_b_fwd.rows(), other.w_b_fwd.cols());
  g.w_b_bwd = Matrix(other.w_b_bwd.rows(), other.w_b_bwd.cols());
  g.u_b_fwd = Matrix(other.u_b_fwd.rows(), other.u_b_fwd.cols());
  g.u_b_bwd = Matrix(other.u_b_bwd.rows(), other.u_b_bwd.cols());
  g.w_p = Matrix(other.w_p.rows(), other.w_p.cols());
  g.train_projection = other.train_projection;
  return g;
}

std::vector<ParamRef> param_refs(AttnParams& value, AttnParams& grad,
                                 const std::string& prefix) {
  std::vector<std::span<double>> grads;
  grad.for_each([&](const char*, std::span<double> g) { grads.push_back(g); });
  std::vector<ParamRef> refs;
  size_t k = 0;
  value.for_each([&](const char* name, std::span<double> v) {
    refs.push_back({prefix + name, v, grads.at(k++)});
  });
  return refs;
}

Sentinel sentinel(std::span<const double> h_prev, std::span<const double> x,
                  std::span<const double> c, const AttnParams& p) {
  const size_t hidden = p.hidden_dim();
  if (h_prev.size() != 2 * hidden || c.size() != 2 * hidden ||
      x.size() != p.input_dim()) {
    throw DimensionError("sentinel: h_prev " + std::to_string(h_prev.size()) +
                         ", c " + std::to_string(c.size()) + ", x " +
                         std::to_string(x.size()) + " for 2H=" +
                         std::to_string(2 * hidden) +
                         " D=" + std::to_string(p.input_dim()));
  }
  Sentinel out;
  out.b.assign(2 * hidden, 0.0);
  out.s.assign(2 * hidden, 0.0);
  const Matrix* w[] = {&p.w_b_fwd, &p.w_b_bwd};
  const Matrix* u[] = {&p.u_b_fwd, &p.u_b_bwd};
  for (int dir = 0; dir < 2; ++dir) {
    const size_t off = dir * hidden;
    std::span<double> z(out.b.data() + off, hidden);
    add_matvec(*w[dir], h_prev.subspan(off, hidden), z);
    add_matvec(*u[dir], x, z);
    for (size_t k = 0; k < hidden; ++k) {
      z[k] = sigmoid(z[k]);
      out.s[off + k] = z[k] * std::tanh(c[off + k]);
    }
  }
  return out;
}

void sentinel_backward(std::span<const double> h_prev,
                       std::span<const double> x, std::span<const double> c,
                       const Sentinel& state, std::span<const double> ds,
                       const AttnParams& p, AttnParams& grad,
                       std::span<double> dh_prev, std::span<double> dx,
                       std::span<double> dc) {
  const size_t hidden = p.hidden_dim();
  const Matrix* w[] = {&p.w_b_fwd, &p.w_b_bwd};
  const Matrix* u[] = {&p.u_b_fwd, &p.u_b_bwd};
  Matrix* gw[] = {&grad.w_b_fwd, &grad.w_b_bwd};
  Matrix* gu[] = {&grad.u_b_fwd, &grad.u_b_bwd};
  Vector dz(hidden);
  for (int dir = 0; dir < 2; ++dir) {
    const size_t off = dir * hidden;
    for (size_t k = 0; k < hidden; ++k) {
      const double b = state.b[off + k];
      const double tc = std::tanh(c[off + k]);
      dc[off + k] += ds[off + k] * b * (1.0 - tc * tc);
      dz[k] = ds[off + k] * tc * b * (1.0 - b);
    }
    add_outer(*gw[dir], dz, h_prev.subspan(off, hidden));
    add_outer(*gu[dir], dz, x);
    add_matvec_transposed(*w[dir], dz, dh_prev.subspan(off, hidden));
    add_matvec_transposed(*u[dir], dz, dx);
  }
}

KnowledgeStep knowledge_state(std::span<const double> h,
                              std::span<const double> s,
                              const CandidateSet& candidates,
                              const AttnParams& p) {
  const size_t state = p.w_s.rows();
  if (h.size() != state || (!candidates.empty() && s.size() != state)) {
    throw DimensionError("knowledge_state: h " + std::to_string(h.size()) +
                         ", s " + std::to_string(s.size()) + " for 2H=" +
                         std::to_string(state));
  }
  KnowledgeStep out;
  out.h_hat.assign(h.begin(), h.end());
  out.m.assign(state, 0.0);
  if (candidates.empty()) return out;
  out.has_candidates = true;

  const size_t n = candidates.size();
  const Vector wh = matvec(p.w_v, h);
  Vector scores(n + 1);
  for (size_t i = 0; i < n; ++i) {
    if (candidates.vectors[i].size() != p.concept_dim()) {
      throw DimensionError("candidate vector of size " +
                           std::to_string(candidates.vectors[i].size()) +
                           ", expected d_k=" +
                           std::to_string(p.concept_dim()));
    }
    scores[i] = dot(candidates.vectors[i], wh);
  }
  scores[n] = dot(s, matvec(p.w_s, h));
  const Vector weights = softmax(scores);
  out.alpha.assign(weights.begin(), weights.begin() + n);
  out.beta = weights[n];

  out.projected.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    out.projected.push_back(matvec(p.w_p, candidates.vectors[i]));
    axpy(out.alpha[i], out.projected[i], out.m);
  }
  axpy(out.beta, s, out.m);
  for (size_t k = 0; k < state; ++k) out.h_hat[k] = h[k] + out.m[k];
  return out;
}

void knowledge_state_backward(std::span<const double> h,
                              std::span<const double> s,
                              const CandidateSet& candidates,
                              const KnowledgeStep& step,
                              std::span<const double> dm, const AttnParams& p,
                              AttnParams& grad, std::span<double> dh,
                              std::span<double> ds) {
  if (!step.has_candidates) return;
  const size_t n = candidates.size();
  Vector weights(step.alpha);
  weights.push_back(step.beta);
  Vector d_weights(n + 1);
  for (size_t i = 0; i < n; ++i) {
    d_weights[i] = dot(dm, step.projected[i]);
    add_outer(grad.w_p, dm, candidates.vectors[i], step.alpha[i]);
  }
  d_weights[n] = dot(dm, s);
  axpy(step.beta, dm, ds);

  // Softmax Jacobian-vector product.
  const double inner = dot(weights, d_weights);
  Vector d_scores(n + 1);
  for (size_t j = 0; j <= n; ++j) {
    d_scores[j] = weights[j] * (d_weights[j] - inner);
  }

  Vector u(p.concept_dim(), 0.0);
  for (size_t i = 0; i < n; ++i) axpy(d_scores[i], candidates.vectors[i], u);
  add_outer(grad.w_v, u, h);
  add_matvec_transposed(p.w_v, u, dh);

  const double dsent = d_scores[n];
  add_outer(grad.w_s, s, h, dsent);
  const Vector wsh = matvec(p.w_s, h);
  axpy(dsent, wsh, ds);
  Vector wts(h.size(), 0.0);
  add_matvec_transposed(p.w_s, s, wts);
  axpy(dsent, wts, dh);
}

Vector fuse(std::span<const double> h, std::span<const double> m) {
  if (h.size() != m.size()) {
    throw DimensionError("fuse: h has " + std::to_string(h.size()) +
                         " values, m has " + std::to_string(m.size()));
  }
  Vector out(h.size());
  for (size_t k = 0; k < h.size(); ++k) out[k] = h[k] + m[k];
  return out;
}

std::string format_attention_record(const AttentionRecord& record) {
  std::string line = std::to_string(record.position) + '\t' + record.surface +
                     '\t';
  char buf[40];
  for (size_t i = 0; i < record.concepts.size(); ++i) {
    if (i > 0) line += ';';
    std::snprintf(buf, sizeof(buf), "%.6f", record.alpha[i]);
    line += record.concepts[i] + ':' + buf;
  }
  line += '\t';
  if (record.beta) {
    std::snprintf(buf, sizeof(buf), "%.6f", *record.beta);
    line += std::string("sentinel:") + buf;
  }
  return line;
}

}  // namespace kblstm
