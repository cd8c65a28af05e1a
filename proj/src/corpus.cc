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

#include "kblstm/corpus.h"

#include <fstream>
#include <istream>
#include <ostream>

#include "kblstm/errors.h"
#include "kblstm/text.h"

namespace kblstm {
namespace {

bool is_upper(char ch) { return ch >= 'A' && ch <= 'Z'; }
bool is_lower(char ch) { return ch >= 'a' && ch <= 'z'; }

}  // namespace

CapClass capitalization_class(std::string_view surface) {
  if (surface.empty()) throw InputError("capitalization of an empty surface");
  size_t upper = 0, lower = 0;
  for (char ch : surface) {
    upper += is_upper(ch);
    lower += is_lower(ch);
  }
  if (upper + lower == 0) return CapClass::kNonAlpha;
  if (upper == 0) return CapClass::kAllLower;
  if (lower == 0) return upper == 1 && is_upper(surface[0])
                             ? CapClass::kInitialUpper
                             : CapClass::kAllUpper;
  // Upper-case first letter followed only by lower-case letters.
  size_t first_alpha = 0;
  while (!is_upper(surface[first_alpha]) && !is_lower(surface[first_alpha])) {
    ++first_alpha;
  }
  if (upper == 1 && is_upper(surface[first_alpha])) {
    return CapClass::kInitialUpper;
  }
  return CapClass::kMixed;
}

const char* cap_class_name(CapClass c) {
  switch (c) {
    case CapClass::kAllLower: return "allLower";
    case CapClass::kAllUpper: return "allUpper";
    case CapClass::kInitialUpper: return "initialUpper";
    case CapClass::kMixed: return "mixed";
    case CapClass::kNonAlpha: return "nonAlpha";
  }
  return "?";
}

std::vector<std::string> Sentence::surfaces() const {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(t.surface);
  return out;
}

std::vector<std::string> Sentence::tags() const {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(t.tag);
  return out;
}

Corpus read_corpus(std::istream& in) {
  Corpus corpus;
  Sentence current;
  std::string line;
  size_t line_no = 0;
  auto flush = [&] {
    if (!current.tokens.empty()) corpus.sentences.push_back(std::move(current));
    current = Sentence{};
  };
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (trim(line).empty()) {
      flush();
      continue;
    }
    if (line.rfind("-DOCSTART-", 0) == 0) {
      flush();
      continue;
    }
    const auto fields = split(line, '\t');
    if (fields.size() < 2 || fields.size() > 3 || fields[0].empty() ||
        fields[1].empty()) {
      throw InputError("corpus line " + std::to_string(line_no) +
                       ": expected 'surface<TAB>tag[<TAB>head_flag]'");
    }
    Token tok{fields[0], fields[1], false};
    if (fields.size() == 3) {
      if (fields[2] != "0" && fields[2] != "1") {
        throw InputError("corpus line " + std::to_string(line_no) +
                         ": head flag must be 0 or 1");
      }
      tok.head = fields[2] == "1";
    }
    current.tokens.push_back(std::move(tok));
  }
  flush();
  return corpus;
}

Corpus read_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open corpus " + path);
  return read_corpus(in);
}

void write_corpus(const Corpus& corpus, std::ostream& out) {
  for (size_t s = 0; s < corpus.sentences.size(); ++s) {
    if (s > 0) out << '\n';
    for (const auto& t : corpus.sentences[s].tokens) {
      out << t.surface << '\t' << t.tag;
      if (t.head) out << "\t1";
      out << '\n';
    }
  }
}

std::vector<Span> bio_spans(std::span<const std::string> tags) {
  std::vector<Span> spans;
  bool open = false;
  for (size_t i = 0; i < tags.size(); ++i) {
    const std::string& tag = tags[i];
    const char kind = tag.empty() ? 'O' : tag[0];
    const std::string type = tag.size() > 2 ? tag.substr(2) : "";
    if (kind == 'I' && open && spans.back().type == type &&
        spans.back().end + 1 == i) {
      spans.back().end = i;
    } else if (kind == 'B' || kind == 'I') {
      spans.push_back({i, i, type});
      open = true;
    } else {
      open = false;
    }
  }
  return spans;
}

std::vector<Span> unit_spans(std::span<const std::string> tags) {
  std::vector<Span> spans;
  for (size_t i = 0; i < tags.size(); ++i) {
    if (tags[i] != "O") spans.push_back({i, i, tags[i]});
  }
  return spans;
}

std::string strip_type(std::string_view tag) {
  if (tag.size() >= 2 && (tag[0] == 'B' || tag[0] == 'I') && tag[1] == '-') {
    return std::string(1, tag[0]);
  }
  return std::string(tag);
}

std::vector<Chunk> build_chunks(const Sentence& sentence,
                                std::span<const Span> mentions) {
  std::vector<Chunk> chunks;
  size_t next = 0;
  auto gap = [&](size_t until) {
    if (next < until) chunks.push_back({next, until - 1, until - 1, "O"});
  };
  for (const Span& m : mentions) {
    if (m.start < next || m.end < m.start || m.end >= sentence.size()) {
      throw InputError("mention spans overlap or leave the sentence");
    }
    gap(m.start);
    size_t head = m.end;
    for (size_t i = m.start; i <= m.end; ++i) {
      if (sentence.tokens[i].head) head = i;
    }
    chunks.push_back({m.start, m.end, head, m.type});
    next = m.end + 1;
  }
  gap(sentence.size());
  return chunks;
}

}  // namespace kblstm
