// Copyright 2026 The kgdial Authors.
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

#ifndef KGDIAL_ERRORS_H_
#define KGDIAL_ERRORS_H_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace kgdial {

enum class ErrorCode {
  kMalformedLine,
  kEmptyKB,
  kEmptyCorpus,
  kBadId,
  kShapeMismatch,
  kNotScalar,
  kEmptyGraph,
  kLayerOrderViolation,
  kTooLong,
  kEmptyBatch,
  kDivergedLoss,
  kCorruptCheckpoint,
  kNoNgrams,
  kSpecInfeasible,
  kInvalidArgument,
  kIo,
};

const char *ErrorCodeName(ErrorCode code);

// Base class for every error raised by the library. The code lets callers
// (the CLI in particular) map failures onto exit statuses without string
// matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string &what)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const { return code_; }

  // True for errors caused by bad input data rather than a failed computation.
  bool is_data_error() const;

 private:
  ErrorCode code_;
};

class MalformedLine : public Error {
 public:
  MalformedLine(std::size_t line_no, const std::string &detail)
      : Error(ErrorCode::kMalformedLine,
              "line " + std::to_string(line_no) + ": " + detail),
        line_no_(line_no) {}

  std::size_t line_no() const { return line_no_; }

 private:
  std::size_t line_no_;
};

class BadId : public Error {
 public:
  BadId(std::size_t id, std::size_t size)
      : Error(ErrorCode::kBadId, "id " + std::to_string(id) +
                                     " out of range for vocabulary of size " +
                                     std::to_string(size)),
        id_(id) {}

  std::size_t id() const { return id_; }

 private:
  std::size_t id_;
};

}  // namespace kgdial

#endif  // KGDIAL_ERRORS_H_
