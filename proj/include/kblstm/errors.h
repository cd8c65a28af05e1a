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

#ifndef KBLSTM_ERRORS_H_
#define KBLSTM_ERRORS_H_

#include <stdexcept>
#include <string>

namespace kblstm {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shape disagreement between operands.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Malformed or empty input data.
class InputError : public Error {
 public:
  using Error::Error;
};

// An identifier that does not resolve in its vocabulary.
class VocabularyError : public Error {
 public:
  using Error::Error;
};

class SamplingError : public Error {
 public:
  using Error::Error;
};

// Non-finite values where finite ones are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Operation invoked on an object in the wrong state (e.g. untrained model).
class StateError : public Error {
 public:
  using Error::Error;
};

// Bad command-line usage: unknown flag, missing path, out-of-range value.
class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace kblstm

#endif  // KBLSTM_ERRORS_H_
