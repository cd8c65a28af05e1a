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

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "kblstm/errors.h"

namespace kblstm {
namespace {

const std::string kData = KBLSTM_TEST_DATA;

ConceptLexicon clinton() {
  return ConceptLexicon::load(kData + "/clinton_lexicon.tsv", kData + "/concepts.vec");
}

std::vector<std::string> names(const ConceptLexicon& lex, const CandidateSet& c) {
  std::vector<std::string> out;
  for (int id : c.ids) out.push_back(lex.concepts().name(id));
  return out;
}

TEST(LexiconTest, CaseFoldedExactMatch) {
  const ConceptLexicon lex = clinton();
  const auto c = lex.retrieve("Clinton");
  EXPECT_EQ(names(lex, c), (std::vector<std::string>{"person", "city", "county"}));
  ASSERT_EQ(c.vectors.size(), 3u);
  EXPECT_EQ(c.vectors[0], (Vector{0.9, 0.1, -0.2, 0.05}));
  EXPECT_TRUE(lex.retrieve("Clintons").empty());
  // Only referenced concepts are kept.
  EXPECT_FALSE(lex.concepts().contains("organization"));
  EXPECT_EQ(lex.dim(), 4u);
}

TEST(LexiconTest, ChunkPhraseThenHead) {
  const ConceptLexicon lex = clinton();
  const std::vector<std::string> ny{"New", "York"};
  EXPECT_EQ(names(lex, lex.retrieve_chunk(ny, 1)), (std::vector<std::string>{"city", "state"}));
  const std::vector<std::string> bill{"Bill", "Clinton"};
  EXPECT_EQ(lex.retrieve_chunk(bill, 1).size(), 3u);
  EXPECT_TRUE(lex.retrieve_chunk(bill, 0).empty());
}

TEST(LexiconTest, MissingEmbeddingIsClosureError) {
  EXPECT_THROW(ConceptLexicon::load(kData + "/bad_lexicon.tsv", kData + "/concepts.vec"),
               VocabularyError);
}

TEST(LexiconTest, CandidateCap) {
  EmbeddingTable t;
  t.vectors = Matrix(40, 2, 0.5);
  std::vector<std::string> ids;
  for (int i = 0; i < 40; ++i) {
    ids.push_back("c" + std::to_string(i));
    t.ids.add(ids.back());
  }
  ConceptLexicon lex(std::move(t));
  lex.add_entry("many", ids);
  lex.add_entry("many", {"c0"});  // duplicate skipped
  EXPECT_EQ(lex.retrieve("MANY").size(), kMaxCandidates);
}

struct Draw {
  AttnParams p;
  Vector h, hp, x, c;
  CandidateSet cands;
};

Draw draw(size_t L, uint64_t seed) {
  Rng rng(seed);
  const size_t H = 3, D = 4, dk = 5;
  Draw d{AttnParams::init(dk, H, D, rng), Vector(2 * H), Vector(2 * H), Vector(D), Vector(2 * H), {}};
  fill_uniform(d.p.w_p.values(), -1, 1, rng);
  for (Vector* v : {&d.h, &d.hp, &d.x, &d.c}) fill_uniform(*v, -1, 1, rng);
  for (size_t i = 0; i < L; ++i) {
    d.cands.ids.push_back(static_cast<int>(i));
    d.cands.vectors.emplace_back(dk);
    fill_uniform(d.cands.vectors.back(), -1, 1, rng);
  }
  return d;
}

TEST(SentinelTest, PerDirectionGate) {
  const Draw d = draw(0, 3);
  const Sentinel s = sentinel(d.hp, d.x, d.c, d.p);
  const size_t H = 3;
  for (size_t k = 0; k < 2 * H; ++k) {
    const bool fwd = k < H;
    const Matrix& w = fwd ? d.p.w_b_fwd : d.p.w_b_bwd;
    const Matrix& u = fwd ? d.p.u_b_fwd : d.p.u_b_bwd;
    const size_t r = fwd ? k : k - H;
    double z = 0;
    for (size_t j = 0; j < H; ++j) z += w(r, j) * d.hp[(fwd ? 0 : H) + j];
    for (size_t j = 0; j < 4; ++j) z += u(r, j) * d.x[j];
    const double b = 1.0 / (1.0 + std::exp(-z));
    EXPECT_NEAR(s.b[k], b, 1e-14);
    EXPECT_NEAR(s.s[k], b * std::tanh(d.c[k]), 1e-14);
  }
}

TEST(KnowledgeStateTest, MatchesDirectMixture) {
  const Draw d = draw(3, 4);
  const Sentinel s = sentinel(d.hp, d.x, d.c, d.p);
  const KnowledgeStep k = knowledge_state(d.h, s.s, d.cands, d.p);
  // Scores a_i = v_i^T W_v h and a_s = s^T W_s h, softmaxed together.
  std::vector<double> a;
  for (const auto& v : d.cands.vectors) a.push_back(dot(v, matvec(d.p.w_v, d.h)));
  a.push_back(dot(s.s, matvec(d.p.w_s, d.h)));
  double mx = *std::max_element(a.begin(), a.end()), z = 0;
  for (double x : a) z += std::exp(x - mx);
  Vector m(6, 0.0);
  for (size_t i = 0; i < 3; ++i) {
    const double w = std::exp(a[i] - mx) / z;
    EXPECT_NEAR(k.alpha[i], w, 1e-14);
    axpy(w, matvec(d.p.w_p, d.cands.vectors[i]), m);
  }
  const double beta = std::exp(a[3] - mx) / z;
  EXPECT_NEAR(k.beta, beta, 1e-14);
  axpy(beta, s.s, m);
  for (size_t j = 0; j < 6; ++j) {
    EXPECT_NEAR(k.m[j], m[j], 1e-14);
    EXPECT_NEAR(k.h_hat[j], d.h[j] + m[j], 1e-14);
  }
}

TEST(KnowledgeStateTest, EmptyCandidatesLeaveStateUntouched) {
  const Draw d = draw(0, 5);
  const Sentinel s = sentinel(d.hp, d.x, d.c, d.p);
  const KnowledgeStep k = knowledge_state(d.h, s.s, d.cands, d.p);
  EXPECT_FALSE(k.has_candidates);
  EXPECT_EQ(k.h_hat, d.h);
  EXPECT_EQ(k.m, Vector(6, 0.0));
}

TEST(KnowledgeStateTest, FrozenProjectionNeedsMatchingDims) {
  Rng rng(1);
  EXPECT_THROW(AttnParams::init(5, 3, 4, rng, false), ConfigError);
  const AttnParams p = AttnParams::init(6, 3, 4, rng, false);
  EXPECT_EQ(p.w_p, Matrix::identity(6));
}

TEST(KnowledgeStateTest, DimensionMismatch) {
  const Draw d = draw(2, 6);
  EXPECT_THROW(knowledge_state(Vector(5), Vector(6), d.cands, d.p), DimensionError);
}

TEST(KnowledgeStateTest, BackwardMatchesFiniteDifferences) {
  Draw d = draw(4, 7);
  AttnParams g = AttnParams::zeros_like(d.p);
  Vector dh(6), dhp(6), dx(4), dc(6), r(6);
  Rng rng(9);
  fill_uniform(r, -1, 1, rng);
  std::vector<ParamRef> refs = param_refs(d.p, g, "");
  refs.push_back({"h", d.h, dh});
  refs.push_back({"h_prev", d.hp, dhp});
  refs.push_back({"x", d.x, dx});
  refs.push_back({"c", d.c, dc});
  auto loss = [&](bool with_grad) {
    const Sentinel s = sentinel(d.hp, d.x, d.c, d.p);
    const KnowledgeStep k = knowledge_state(d.h, s.s, d.cands, d.p);
    if (with_grad) {
      zero_grads(refs);
      Vector ds(6, 0.0);
      knowledge_state_backward(d.h, s.s, d.cands, k, r, d.p, g, dh, ds);
      sentinel_backward(d.hp, d.x, d.c, s, ds, d.p, g, dhp, dx, dc);
    }
    return dot(r, k.m);
  };
  EXPECT_LT(grad_check(loss, refs).max_relative_error, 1e-5);
}

TEST(AttentionRecordTest, Format) {
  AttentionRecord r{2, "Clinton", {"person", "city"}, {0.75, 0.125}, 0.125};
  EXPECT_EQ(format_attention_record(r),
            "2\tClinton\tperson:0.750000;city:0.125000\tsentinel:0.125000");
  AttentionRecord none{0, "the", {}, {}, std::nullopt};
  EXPECT_EQ(format_attention_record(none), "0\tthe\t\t");
}

}  // namespace
}  // namespace kblstm
