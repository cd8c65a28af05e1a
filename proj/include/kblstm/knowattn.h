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

// Knowledge module. For each position t with candidate concepts v_1..v_L
// retrieved from a lexicon and BiLSTM state h_t:
//
//   b_t   = sigmoid(W_b h_{t-1} + U_b x_t)        sentinel gate
//   s_t   = b_t * tanh(c_t)                        sentinel vector
//   a_i   = v_i^T W_v h_t                          concept scores
//   a_s   = s_t^T W_s h_t                          sentinel score
//   (alpha, beta) = softmax([a_1 .. a_L, a_s])
//   m_t   = sum_i alpha_i W_p v_i + beta s_t
//   hhat_t = h_t + m_t
//
// with m_t = 0 when the candidate set is empty. The sentinel is computed
// per LSTM direction (forward uses h_{t-1}, backward h_{t+1}) and the two
// halves are concatenated, so W_b is block diagonal and U_b stacked.
// W_p maps d_k-dimensional concept vectors into the 2H state space.

#ifndef KBLSTM_KNOWATTN_H_
#define KBLSTM_KNOWATTN_H_

#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kblstm/kbembed.h"
#include "kblstm/numerics.h"
#include "kblstm/vocab.h"

namespace kblstm {

inline constexpr size_t kMaxCandidates = 32;

struct CandidateSet {
  std::vector<int> ids;
  std::vector<Vector> vectors;

  size_t size() const { return ids.size(); }
  bool empty() const { return ids.empty(); }
};

// Surface (case-folded) -> concept ids, plus the frozen concept embeddings.
class ConceptLexicon {
 public:
  ConceptLexicon() = default;
  explicit ConceptLexicon(EmbeddingTable concepts);

  // Reads `surface<TAB>id[,id...]` lines. Only concepts the lexicon
  // references are kept from the embedding table, in table order. A
  // referenced concept without an embedding is a VocabularyError.
  static ConceptLexicon load(std::istream& lexicon,
                             const EmbeddingTable& embeddings);
  static ConceptLexicon load(const std::string& lexicon_path,
                             const std::string& embeddings_path);

  // Appends concept ids under the folded surface, skipping duplicates.
  void add_entry(std::string_view surface,
                 const std::vector<std::string>& concept_ids);

  // Exact match on the case-folded surface; a miss is an empty set. At
  // most kMaxCandidates concepts are returned, in lexicon order.
  CandidateSet retrieve(std::string_view surface) const;
  // Whole-phrase lookup first, then the head word alone.
  CandidateSet retrieve_chunk(std::span<const std::string> words,
                              size_t head) const;

  const Vocabulary& concepts() const { return concepts_; }
  const Matrix& vectors() const { return vectors_; }
  size_t dim() const { return vectors_.cols(); }
  size_t num_concepts() const { return concepts_.size(); }
  const std::map<std::string, std::vector<int>>& entries() const {
    return entries_;
  }
  bool empty() const { return entries_.empty(); }

 private:
  Vocabulary concepts_;
  Matrix vectors_;
  std::map<std::string, std::vector<int>> entries_;
};

struct AttnParams {
  Matrix w_v;              // d_k x 2H
  Matrix w_s;              // 2H x 2H
  Matrix w_b_fwd, w_b_bwd;  // H x H each
  Matrix u_b_fwd, u_b_bwd;  // H x D each
  Matrix w_p;              // 2H x d_k
  bool train_projection = true;

  // Glorot-initialized scoring and sentinel weights; W_p starts as an
  // identity block. With train_projection=false, d_k must equal 2H and
  // W_p stays the identity.
  static AttnParams init(size_t concept_dim, size_t hidden_dim,
                         size_t input_dim, Rng& rng,
                         bool train_projection = true);
  static AttnParams zeros_like(const AttnParams& other);

  size_t hidden_dim() const { return w_b_fwd.rows(); }
  size_t input_dim() const { return u_b_fwd.cols(); }
  size_t concept_dim() const { return w_v.rows(); }

  template <typename F>
  void for_each(F&& fn) {
    fn("W_v", w_v.values());
    fn("W_s", w_s.values());
    fn("W_b_fwd", w_b_fwd.values());
    fn("W_b_bwd", w_b_bwd.values());
    fn("U_b_fwd", u_b_fwd.values());
    fn("U_b_bwd", u_b_bwd.values());
    if (train_projection) fn("W_p", w_p.values());
  }
};

std::vector<ParamRef> param_refs(AttnParams& value, AttnParams& grad,
                                 const std::string& prefix);

struct Sentinel {
  Vector b;  // gate, 2H
  Vector s;  // sentinel vector, 2H
};

// h_prev = [fwd h_{t-1}; bwd h_{t+1}], c = [fwd c_t; bwd c_t].
Sentinel sentinel(std::span<const double> h_prev, std::span<const double> x,
                  std::span<const double> c, const AttnParams& p);

// Accumulates gradients given ds, the upstream gradient on s.
void sentinel_backward(std::span<const double> h_prev,
                       std::span<const double> x, std::span<const double> c,
                       const Sentinel& state, std::span<const double> ds,
                       const AttnParams& p, AttnParams& grad,
                       std::span<double> dh_prev, std::span<double> dx,
                       std::span<double> dc);

struct KnowledgeStep {
  bool has_candidates = false;
  Vector alpha;                   // one weight per candidate
  double beta = 0.0;              // sentinel weight
  std::vector<Vector> projected;  // W_p v_i
  Vector m;                       // knowledge state, 2H
  Vector h_hat;                   // h + m
};

KnowledgeStep knowledge_state(std::span<const double> h,
                              std::span<const double> s,
                              const CandidateSet& candidates,
                              const AttnParams& p);

// Given dm (the upstream gradient on m_t), accumulates into the
// parameter gradients and into dh and ds.
void knowledge_state_backward(std::span<const double> h,
                              std::span<const double> s,
                              const CandidateSet& candidates,
                              const KnowledgeStep& step,
                              std::span<const double> dm, const AttnParams& p,
                              AttnParams& grad, std::span<double> dh,
                              std::span<double> ds);

Vector fuse(std::span<const double> h, std::span<const double> m);

// One line of an attention dump.
struct AttentionRecord {
  size_t position = 0;
  std::string surface;
  std::vector<std::string> concepts;
  Vector alpha;
  std::optional<double> beta;  // absent when there are no candidates
};

// `position<TAB>surface<TAB>concept:weight;...<TAB>sentinel:weight`
std::string format_attention_record(const AttentionRecord& record);

}  // namespace kblstm

#endif  // KBLSTM_KNOWATTN_H_
