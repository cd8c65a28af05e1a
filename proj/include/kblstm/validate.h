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


// Structural checks over the input files a run consumes.

#ifndef KBLSTM_VALIDATE_H_
#define KBLSTM_VALIDATE_H_

#include <string>
#include <vector>

namespace kblstm {

struct Violation {
  std::string file;
  size_t line = 0;  // 0 when the problem is not tied to one line
  std::string reason;
};

struct FileSet {
  std::vector<std::string> corpora;
  std::string lexicon;
  std::string embeddings;
  std::vector<std::string> triples;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
};

// Corpora: field counts, head flags, and BIO well-formedness when the file
// uses B-/I- tags. Lexicon: `surface<TAB>id[,id...]`, and every id must have
// an embedding (or, without an embedding file, appear in a triple file).
// Embeddings: `<count> <dim>` header and row widths. Triples: 3 or 4 fields.
// Never throws for bad content; unreadable files become violations.
ValidationReport validate_files(const FileSet& files);

// `file:line: reason` per violation.
std::string format_report(const ValidationReport& report);

}  // namespace kblstm

#endif  // KBLSTM_VALIDATE_H_
