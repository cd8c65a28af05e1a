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

// Synthetic data with planted structure.
//
// Disambiguation corpus. Mention types are coarse categories; each category
// owns a few fine concepts. Every mention is preceded by a cue word that
// reveals a pair of candidate types, and the gold type is chosen uniformly
// within the pair. Ambiguous surfaces list fine concepts from two or three
// categories in the lexicon; in a sentence exactly one of them falls in the
// cue's pair, so context plus KB determine the type. Half of the ambiguous
// surfaces (and one fine concept per category) never occur in training.
// For those held-out surfaces a predictor without KB access sees only the
// cue, so its accuracy is bounded by the per-cue majority rate. That bound
// is computed on the generated test split and stored in the answer key.
//
// Block KB. Entities fall into latent categories; is_a links each entity
// to its category node, one relation links entities of the same category
// and another links category k to category k+1. A fraction of the is_a
// triples is held out for category prediction.

#ifndef KBLSTM_SYNTH_H_
#define KBLSTM_SYNTH_H_

#include <cstdint>
#include <string>
#include <vector>

#include "kblstm/corpus.h"

namespace kblstm {

struct SynthSpec {
  size_t vocab = 200;  // distinct mention surfaces
  size_t categories = 8;
  size_t ambiguous = 40;
  size_t train_sentences = 2000;
  size_t dev_sentences = 500;
  size_t test_sentences = 500;
  double ambiguity_rate = 0.3;  // share of mentions drawn from ambiguous surfaces
  uint64_t seed = 1;

  // InputError for infeasible specs.
  void validate() const;
};

// A held-out ambiguous mention in the test split.
struct KeyedToken {
  size_t sentence = 0;
  size_t token = 0;
  std::string surface;
  std::string cue;
  std::string gold;
};

struct SynthOutput {
  Corpus train, dev, test;
  std::vector<std::string> kb_triples;  // TSV lines
  std::vector<std::string> lexicon;     // TSV lines
  std::vector<std::string> types;
  // cue word -> the two types it reveals
  std::vector<std::pair<std::string, std::pair<std::string, std::string>>> cues;
  std::vector<KeyedToken> heldout_ambiguous;
  double ceiling = 1.0;  // KB-blind bound on heldout_ambiguous accuracy
  std::string answer_key_json() const;
};

SynthOutput gen_synthetic(const SynthSpec& spec);

// KB-blind ceiling recomputed from the test corpus: group the keyed tokens
// by the cue word in front of them and count the majority type per group.
double kb_blind_ceiling(const Corpus& test,
                        const std::vector<KeyedToken>& tokens);

// Writes train.txt, dev.txt, test.txt, kb.tsv, lexicon.tsv and
// answer_key.json into dir (created if missing).
void write_synthetic(const SynthOutput& out, const std::string& dir);

struct BlockKbSpec {
  size_t entities = 100;
  size_t categories = 8;
  size_t links_per_relation = 3;  // outgoing triples per entity and relation
  double heldout = 0.15;          // share of is_a triples held out
  uint64_t seed = 1;
};

struct BlockKb {
  std::vector<std::string> train;  // TSV lines
  std::vector<std::string> test;
};

BlockKb gen_block_kb(const BlockKbSpec& spec);
void write_block_kb(const BlockKb& kb, const std::string& dir);

}  // namespace kblstm

#endif  // KBLSTM_SYNTH_H_
