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


#include "kblstm/validate.h"

#include <fstream>
#include <set>
#include <sstream>

#include "kblstm/text.h"

namespace kblstm {
namespace {

class Checker {
 public:
  Checker(const std::string& path, ValidationReport& report)
      : path_(path), report_(report), in_(path) {
    if (!in_) add(0, "cannot open file");
  }

  bool open() const { return static_cast<bool>(in_); }

  bool next(std::string& line) {
    if (!std::getline(in_, line)) return false;
    ++line_no_;
    strip_cr(line);
    return true;
  }

  size_t line_no() const { return line_no_; }
  void add(size_t line, std::string reason) {
    report_.violations.push_back({path_, line, std::move(reason)});
  }
  void add(std::string reason) { add(line_no_, std::move(reason)); }

 private:
  std::string path_;
  ValidationReport& report_;
  std::ifstream in_;
  size_t line_no_ = 0;
};

bool is_bio_tag(const std::string& tag) {
  return tag.size() > 2 && (tag[0] == 'B' || tag[0] == 'I') && tag[1] == '-';
}

void check_corpus(const std::string& path, ValidationReport& report) {
  // First pass decides whether BIO rules apply.
  bool bio = false;
  {
    std::ifstream in(path);
    std::string line;
    while (!bio && std::getline(in, line)) {
      const auto f = split(line, '\t');
      if (f.size() >= 2) bio = is_bio_tag(trim(f[1]));
    }
  }
  Checker c(path, report);
  if (!c.open()) return;
  std::string line, prev = "O";
  while (c.next(line)) {
    if (trim(line).empty() || line.rfind("-DOCSTART-", 0) == 0) {
      prev = "O";
      continue;
    }
    const auto f = split(line, '\t');
    if (f.size() < 2 || f.size() > 3) {
      c.add("expected 2 or 3 tab-separated fields, got " +
            std::to_string(f.size()));
      continue;
    }
    if (f[0].empty()) c.add("empty surface");
    const std::string& tag = f[1];
    if (f.size() == 3 && f[2] != "0" && f[2] != "1") {
      c.add("head flag must be 0 or 1, got '" + f[2] + "'");
    }
    if (tag.empty()) {
      c.add("empty tag");
      continue;
    }
    if (!bio) continue;
    if (tag != "O" && !is_bio_tag(tag)) {
      c.add("tag '" + tag + "' is not O, B-TYPE or I-TYPE");
    } else if (tag[0] == 'I') {
      const std::string type = tag.substr(2);
      if (prev == "O" || prev.substr(2) != type) {
        c.add("BIO violation: '" + tag + "' follows '" + prev + "'");
      }
    }
    prev = tag;
  }
}

// Ids, or empty when the file is unusable.
std::set<std::string> check_embeddings(const std::string& path,
                                       ValidationReport& report) {
  std::set<std::string> ids;
  Checker c(path, report);
  if (!c.open()) return ids;
  std::string line;
  size_t count = 0, dim = 0, rows = 0;
  if (!c.next(line)) {
    c.add(1, "empty embedding file");
    return ids;
  }
  std::istringstream header(line);
  if (!(header >> count >> dim) || dim == 0) {
    c.add("header must be '<count> <dim>'");
    return ids;
  }
  while (c.next(line)) {
    if (line.empty()) continue;
    const auto f = split(line, ' ');
    if (f.size() < dim + 1) {
      c.add("expected an id and " + std::to_string(dim) + " values");
      continue;
    }
    std::string id = f[0];
    const size_t id_fields = f.size() - dim;
    for (size_t i = 1; i < id_fields; ++i) id += ' ' + f[i];
    for (size_t i = id_fields; i < f.size(); ++i) {
      double v = 0.0;
      if (!parse_double(f[i], v)) {
        c.add("bad value '" + f[i] + "'");
        break;
      }
    }
    if (!ids.insert(id).second) c.add("duplicate id '" + id + "'");
    ++rows;
  }
  if (rows != count) {
    c.add(1, "header declares " + std::to_string(count) + " rows, found " +
                 std::to_string(rows));
  }
  return ids;
}

std::set<std::string> check_triples(const std::string& path,
                                    ValidationReport& report) {
  std::set<std::string> entities;
  Checker c(path, report);
  if (!c.open()) return entities;
  std::string line;
  while (c.next(line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto f = split(line, '\t');
    if (f.size() != 3 && f.size() != 4) {
      c.add("expected 3 or 4 tab-separated fields, got " +
            std::to_string(f.size()));
      continue;
    }
    if (f[0].empty() || f[1].empty() || f[2].empty()) c.add("empty field");
    double conf = 0.0;
    if (f.size() == 4 && !parse_double(f[3], conf)) {
      c.add("bad confidence '" + f[3] + "'");
    }
    entities.insert(f[0]);
    entities.insert(f[2]);
  }
  return entities;
}

void check_lexicon(const std::string& path, const std::set<std::string>* known,
                   const char* source, ValidationReport& report) {
  Checker c(path, report);
  if (!c.open()) return;
  std::string line;
  while (c.next(line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto f = split(line, '\t');
    if (f.size() != 2 || f[0].empty() || f[1].empty()) {
      c.add("expected 'surface<TAB>concept[,concept...]'");
      continue;
    }
    for (const auto& raw : split(f[1], ',')) {
      const std::string id = trim(raw);
      if (id.empty()) {
        c.add("empty concept id");
      } else if (known && !known->count(id)) {
        c.add("closure violation: concept '" + id + "' has no " + source);
      }
    }
  }
}

}  // namespace

ValidationReport validate_files(const FileSet& files) {
  ValidationReport report;
  for (const auto& path : files.corpora) check_corpus(path, report);
  std::set<std::string> embedded, entities;
  if (!files.embeddings.empty()) embedded = check_embeddings(files.embeddings, report);
  for (const auto& path : files.triples) {
    entities.merge(check_triples(path, report));
  }
  if (!files.lexicon.empty()) {
    if (!files.embeddings.empty()) {
      check_lexicon(files.lexicon, &embedded, "embedding", report);
    } else if (!files.triples.empty()) {
      check_lexicon(files.lexicon, &entities, "triple", report);
    } else {
      check_lexicon(files.lexicon, nullptr, "", report);
    }
  }
  return report;
}

std::string format_report(const ValidationReport& report) {
  std::string out;
  for (const auto& v : report.violations) {
    out += v.file + ':' + std::to_string(v.line) + ": " + v.reason + '\n';
  }
  return out;
}

}  // namespace kblstm
