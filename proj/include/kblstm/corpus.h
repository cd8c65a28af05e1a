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

// Token-per-line corpora, capitalization classes, spans and chunks.
//
// File format: `surface<TAB>tag[<TAB>head_flag]`, blank line between
// sentences, `-DOCSTART-` lines skipped.

#ifndef KBLSTM_CORPUS_H_
#define KBLSTM_CORPUS_H_

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace kblstm {

enum class CapClass { kAllLower, kAllUpper, kInitialUpper, kMixed, kNonAlpha };
inline constexpr size_t kNumCapClasses = 5;

// Throws InputError on an empty surface. Only ASCII letters count as
// alphabetic; a single upper-case letter is kInitialUpper.
CapClass capitalization_class(std::string_view surface);
const char* cap_class_name(CapClass c);

struct Token {
  std::string surface;
  std::string tag;
  bool head = false;  // explicit head marker from the optional third column
};

struct Sentence {
  std::vector<Token> tokens;
  size_t size() const { return tokens.size(); }
  std::vector<std::string> surfaces() const;
  std::vector<std::string> tags() const;
};

struct Corpus {
  std::vector<Sentence> sentences;
  size_t size() const { return sentences.size(); }
  bool empty() const { return sentences.empty(); }
};

// Throws InputError with the line number on a malformed row.
Corpus read_corpus(std::istream& in);
Corpus read_corpus(const std::string& path);
void write_corpus(const Corpus& corpus, std::ostream& out);

// Inclusive token range with a type label.
struct Span {
  size_t start = 0;
  size_t end = 0;
  std::string type;

  auto operator<=>(const Span&) const = default;
};

// Spans encoded by a BIO sequence. An I-X that does not continue an open
// X span starts a new one (CoNLL reading). Untyped B/I give type "".
std::vector<Span> bio_spans(std::span<const std::string> tags);

// Every non-O unit is its own single-unit span.
std::vector<Span> unit_spans(std::span<const std::string> tags);

// Removes the type from B-X / I-X tags, leaving B / I / O.
std::string strip_type(std::string_view tag);

// A stage-2 input unit: a mention chunk or a maximal run of non-mention
// tokens (typed "O").
struct Chunk {
  size_t start = 0;
  size_t end = 0;   // inclusive
  size_t head = 0;  // absolute token index, start <= head <= end
  std::string type;
};

// Builds the chunk sequence covering all tokens: each mention span becomes
// a chunk and every gap between mentions one O chunk. The head is the
// token flagged as head inside the span, else the last token.
std::vector<Chunk> build_chunks(const Sentence& sentence,
                                std::span<const Span> mentions);

}  // namespace kblstm

#endif  // KBLSTM_CORPUS_H_
