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

#include "kblstm/synth.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "json.hpp"
#include "kblstm/errors.h"
#include "kblstm/numerics.h"
#include "kblstm/text.h"

namespace kblstm {
namespace {

constexpr size_t kFinePerCategory = 4;
constexpr size_t kHeldoutFine = 3;  // index of the fine concept kept out of training
constexpr size_t kFillers = 40;

const char* const kTypeNames[] = {"PER", "LOC", "ORG", "GPE", "FAC", "VEH",
                                  "WEA", "EVT", "ART", "LAW", "NRP", "PRD"};

std::string type_name(size_t k) {
  if (k < std::size(kTypeNames)) return kTypeNames[k];
  return "T" + std::to_string(k);
}

// Pronounceable made-up word, unique within `used`.
std::string make_word(Rng& rng, std::set<std::string>& used, bool capital) {
  static const char kCons[] = "bdfgklmnprstvz";
  static const char kVowels[] = "aeiou";
  while (true) {
    std::string w;
    const size_t syllables = 2 + rng.below(2);
    for (size_t s = 0; s < syllables; ++s) {
      w += kCons[rng.below(sizeof(kCons) - 1)];
      w += kVowels[rng.below(sizeof(kVowels) - 1)];
    }
    if (rng.bernoulli(0.5)) w += kCons[rng.below(sizeof(kCons) - 1)];
    if (capital) w[0] = static_cast<char>(w[0] - 'a' + 'A');
    if (used.insert(casefold(w)).second) return w;
  }
}

struct Surface {
  std::string text;
  std::vector<size_t> types;  // category of each candidate
  std::vector<std::string> concepts;
  bool in_train = true;
};

struct Pair {
  size_t a, b;
  std::string cue;
  bool contains(size_t t) const { return t == a || t == b; }
};

}  // namespace

void SynthSpec::validate() const {
  if (vocab < 1) throw InputError("vocab must be positive");
  if (categories < 2) throw InputError("need at least 2 categories");
  if (ambiguous > 0 && categories < 3) {
    throw InputError("ambiguous surfaces need at least 3 categories");
  }
  if (ambiguous > vocab) {
    throw InputError("more ambiguous surfaces (" + std::to_string(ambiguous) +
                     ") than vocabulary (" + std::to_string(vocab) + ")");
  }
  if (vocab - ambiguous < 2 * categories) {
    throw InputError("need at least 2 unambiguous surfaces per category");
  }
  if (!(ambiguity_rate > 0.0 && ambiguity_rate <= 1.0)) {
    throw InputError("ambiguity rate must lie in (0, 1]");
  }
  if (train_sentences < 1) throw InputError("need at least one training sentence");
}

SynthOutput gen_synthetic(const SynthSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  std::set<std::string> used;
  SynthOutput out;
  const size_t C = spec.categories;
  for (size_t k = 0; k < C; ++k) {
    out.types.push_back(type_name(k));
    used.insert(casefold(out.types.back()));
  }
  auto fine_name = [&](size_t k, size_t j) {
    return casefold(out.types[k]) + "." + std::to_string(j);
  };

  std::vector<Pair> pairs;
  if (C == 2) {
    pairs.push_back({0, 1, ""});
  } else {
    for (size_t k = 0; k < C; ++k) pairs.push_back({k, (k + 1) % C, ""});
  }
  for (auto& p : pairs) {
    p.cue = make_word(rng, used, false);
    out.cues.push_back({p.cue, {out.types[p.a], out.types[p.b]}});
  }
  std::vector<std::string> fillers;
  for (size_t i = 0; i < kFillers; ++i) fillers.push_back(make_word(rng, used, false));

  // Unambiguous surfaces, round-robin over categories. Every fourth one per
  // category is withheld from training.
  std::vector<Surface> surfaces;
  const size_t n_unamb = spec.vocab - spec.ambiguous;
  for (size_t i = 0; i < n_unamb; ++i) {
    const size_t k = i % C;
    Surface s;
    s.text = make_word(rng, used, true);
    s.types = {k};
    s.concepts = {fine_name(k, rng.below(kHeldoutFine))};
    s.in_train = (i / C) % 4 != 3;
    surfaces.push_back(std::move(s));
  }
  // Ambiguous surfaces: the first half seen in training, the rest held out
  // and built only from held-out fine concepts.
  const size_t n_seen_amb = spec.ambiguous - spec.ambiguous / 2;
  std::vector<size_t> cats(C);
  for (size_t k = 0; k < C; ++k) cats[k] = k;
  for (size_t i = 0; i < spec.ambiguous; ++i) {
    const bool seen = i < n_seen_amb;
    Surface s;
    s.text = make_word(rng, used, true);
    const size_t n = std::min<size_t>(2 + rng.below(2), C - 1);
    rng.shuffle(cats);
    for (size_t c = 0; c < n; ++c) {
      s.types.push_back(cats[c]);
      s.concepts.push_back(
          fine_name(cats[c], seen ? rng.below(kHeldoutFine) : kHeldoutFine));
    }
    s.in_train = seen;
    surfaces.push_back(std::move(s));
  }

  // Pools: unambiguous by type, ambiguous by (pair, gold type).
  std::vector<std::vector<size_t>> unamb_seen(C), unamb_unseen(C);
  std::map<std::pair<size_t, size_t>, std::vector<size_t>> amb_seen, amb_held;
  for (size_t i = 0; i < surfaces.size(); ++i) {
    const Surface& s = surfaces[i];
    if (s.types.size() == 1) {
      (s.in_train ? unamb_seen : unamb_unseen)[s.types[0]].push_back(i);
      continue;
    }
    for (size_t p = 0; p < pairs.size(); ++p) {
      size_t inside = 0, gold = 0;
      for (size_t t : s.types) {
        if (pairs[p].contains(t)) {
          ++inside;
          gold = t;
        }
      }
      if (inside == 1) (s.in_train ? amb_seen : amb_held)[{p, gold}].push_back(i);
    }
  }

  auto pick = [&](const std::vector<size_t>& pool) {
    return pool[rng.below(pool.size())];
  };
  auto gen_split = [&](size_t count, bool is_train, bool is_test) {
    Corpus corpus;
    for (size_t n = 0; n < count; ++n) {
      Sentence sent;
      auto add_fillers = [&] {
        const size_t k = rng.below(3);
        for (size_t i = 0; i < k; ++i) {
          sent.tokens.push_back({fillers[rng.below(fillers.size())], "O", false});
        }
      };
      add_fillers();
      const size_t mentions = 1 + rng.below(2);
      for (size_t m = 0; m < mentions; ++m) {
        const size_t p = rng.below(pairs.size());
        const size_t gold = rng.bernoulli(0.5) ? pairs[p].a : pairs[p].b;
        size_t chosen = SIZE_MAX;
        bool heldout = false;
        if (rng.bernoulli(spec.ambiguity_rate)) {
          const auto seen_it = amb_seen.find({p, gold});
          const auto held_it = amb_held.find({p, gold});
          const bool has_seen = seen_it != amb_seen.end();
          const bool has_held = !is_train && held_it != amb_held.end();
          if (has_held && (!has_seen || rng.bernoulli(0.5))) {
            chosen = pick(held_it->second);
            heldout = true;
          } else if (has_seen) {
            chosen = pick(seen_it->second);
          }
        }
        if (chosen == SIZE_MAX) {
          const bool unseen = !is_train && !unamb_unseen[gold].empty() &&
                              rng.bernoulli(0.25);
          chosen = pick(unseen ? unamb_unseen[gold] : unamb_seen[gold]);
        }
        sent.tokens.push_back({pairs[p].cue, "O", false});
        if (is_test && heldout) {
          out.heldout_ambiguous.push_back({corpus.size(), sent.tokens.size(),
                                           surfaces[chosen].text, pairs[p].cue,
                                           out.types[gold]});
        }
        sent.tokens.push_back({surfaces[chosen].text, "B-" + out.types[gold], false});
        add_fillers();
      }
      sent.tokens.push_back({".", "O", false});
      corpus.sentences.push_back(std::move(sent));
    }
    return corpus;
  };
  out.train = gen_split(spec.train_sentences, true, false);
  out.dev = gen_split(spec.dev_sentences, false, false);
  out.test = gen_split(spec.test_sentences, false, true);
  out.ceiling = kb_blind_ceiling(out.test, out.heldout_ambiguous);

  // Knowledge base and lexicon.
  for (const Surface& s : surfaces) {
    std::vector<std::string> order = s.concepts;
    rng.shuffle(order);
    out.lexicon.push_back(s.text + '\t' + join(order, ","));
    for (const auto& c : s.concepts) out.kb_triples.push_back(s.text + "\tis_a\t" + c);
  }
  for (size_t k = 0; k < C; ++k) {
    for (size_t j = 0; j < kFinePerCategory; ++j) {
      out.kb_triples.push_back(fine_name(k, j) + "\tsubtype_of\t" + out.types[k]);
      for (size_t j2 = 0; j2 < kFinePerCategory; ++j2) {
        if (j2 != j) {
          out.kb_triples.push_back(fine_name(k, j) + "\trelated_to\t" +
                                   fine_name(k, j2));
        }
      }
    }
  }
  return out;
}

double kb_blind_ceiling(const Corpus& test,
                        const std::vector<KeyedToken>& tokens) {
  if (tokens.empty()) return 1.0;
  std::map<std::string, std::map<std::string, size_t>> counts;
  for (const auto& k : tokens) {
    const Sentence& s = test.sentences.at(k.sentence);
    if (k.token == 0 || k.token >= s.size()) {
      throw InputError("answer key position outside its sentence");
    }
    const std::string& tag = s.tokens[k.token].tag;
    const std::string type = tag.size() > 2 ? tag.substr(2) : tag;
    ++counts[s.tokens[k.token - 1].surface][type];
  }
  size_t best = 0;
  for (const auto& [cue, by_type] : counts) {
    size_t m = 0;
    for (const auto& [type, n] : by_type) m = std::max(m, n);
    best += m;
  }
  return static_cast<double>(best) / static_cast<double>(tokens.size());
}

std::string SynthOutput::answer_key_json() const {
  nlohmann::ordered_json j;
  j["ceiling"] = ceiling;
  j["types"] = types;
  nlohmann::ordered_json cue_map = nlohmann::ordered_json::object();
  for (const auto& [cue, pair] : cues) cue_map[cue] = {pair.first, pair.second};
  j["cues"] = cue_map;
  j["heldout_ambiguous_count"] = heldout_ambiguous.size();
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& k : heldout_ambiguous) {
    rows.push_back({{"sentence", k.sentence},
                    {"token", k.token},
                    {"surface", k.surface},
                    {"cue", k.cue},
                    {"gold", k.gold}});
  }
  j["heldout_ambiguous"] = rows;
  return j.dump(1) + "\n";
}

namespace {

void write_lines(const std::filesystem::path& path,
                 const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  for (const auto& l : lines) out << l << '\n';
}

void write_corpus_file(const std::filesystem::path& path, const Corpus& c) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  write_corpus(c, out);
}

}  // namespace

void write_synthetic(const SynthOutput& out, const std::string& dir) {
  const std::filesystem::path root(dir);
  std::filesystem::create_directories(root);
  write_corpus_file(root / "train.txt", out.train);
  write_corpus_file(root / "dev.txt", out.dev);
  write_corpus_file(root / "test.txt", out.test);
  write_lines(root / "kb.tsv", out.kb_triples);
  write_lines(root / "lexicon.tsv", out.lexicon);
  std::ofstream key(root / "answer_key.json", std::ios::binary);
  key << out.answer_key_json();
}

BlockKb gen_block_kb(const BlockKbSpec& spec) {
  if (spec.entities < 2 || spec.categories < 2 ||
      spec.entities < 2 * spec.categories) {
    throw InputError("block KB needs at least two entities per category");
  }
  if (!(spec.heldout >= 0.0 && spec.heldout < 1.0)) {
    throw InputError("held-out share must lie in [0, 1)");
  }
  Rng rng(spec.seed);
  const size_t n = spec.entities, C = spec.categories;
  std::vector<size_t> category(n);
  for (size_t i = 0; i < n; ++i) category[i] = i % C;
  rng.shuffle(category);
  std::vector<std::vector<size_t>> members(C);
  for (size_t i = 0; i < n; ++i) members[category[i]].push_back(i);

  auto ent = [](size_t i) { return "e" + std::to_string(i); };
  auto cat = [](size_t k) { return "cat" + std::to_string(k); };
  BlockKb kb;
  std::set<std::string> seen;
  for (size_t i = 0; i < n; ++i) {
    const size_t k = category[i];
    for (size_t l = 0; l < spec.links_per_relation; ++l) {
      size_t j = i;
      while (j == i) j = members[k][rng.below(members[k].size())];
      const std::string same = ent(i) + "\tsame_group\t" + ent(j);
      if (seen.insert(same).second) kb.train.push_back(same);
      const auto& next = members[(k + 1) % C];
      const std::string nxt =
          ent(i) + "\tnext_group\t" + ent(next[rng.below(next.size())]);
      if (seen.insert(nxt).second) kb.train.push_back(nxt);
    }
  }
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  rng.shuffle(order);
  const size_t n_test =
      static_cast<size_t>(spec.heldout * static_cast<double>(n) + 0.5);
  std::vector<size_t> remaining(C);
  for (size_t k = 0; k < C; ++k) remaining[k] = members[k].size();
  std::set<size_t> held;
  for (size_t i : order) {
    if (held.size() == n_test) break;
    if (remaining[category[i]] <= 1) continue;  // keep every category trainable
    --remaining[category[i]];
    held.insert(i);
  }
  for (size_t i = 0; i < n; ++i) {
    const std::string line = ent(i) + "\tis_a\t" + cat(category[i]);
    (held.count(i) ? kb.test : kb.train).push_back(line);
  }
  return kb;
}

void write_block_kb(const BlockKb& kb, const std::string& dir) {
  const std::filesystem::path root(dir);
  std::filesystem::create_directories(root);
  write_lines(root / "kb_train.tsv", kb.train);
  write_lines(root / "kb_test.tsv", kb.test);
}

}  // namespace kblstm
