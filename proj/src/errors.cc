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

#include "kgdial/errors.h"

namespace kgdial {

const char *ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedLine: return "MalformedLine";
    case ErrorCode::kEmptyKB: return "EmptyKB";
    case ErrorCode::kEmptyCorpus: return "EmptyCorpus";
    case ErrorCode::kBadId: return "BadId";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kNotScalar: return "NotScalar";
    case ErrorCode::kEmptyGraph: return "EmptyGraph";
    case ErrorCode::kLayerOrderViolation: return "LayerOrderViolation";
    case ErrorCode::kTooLong: return "TooLong";
    case ErrorCode::kEmptyBatch: return "EmptyBatch";
    case ErrorCode::kDivergedLoss: return "DivergedLoss";
    case ErrorCode::kCorruptCheckpoint: return "CorruptCheckpoint";
    case ErrorCode::kNoNgrams: return "NoNgrams";
    case ErrorCode::kSpecInfeasible: return "SpecInfeasible";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kIo: return "Io";
  }
  return "Unknown";
}

bool Error::is_data_error() const {
  switch (code_) {
    case ErrorCode::kMalformedLine:
    case ErrorCode::kEmptyKB:
    case ErrorCode::kEmptyCorpus:
    case ErrorCode::kBadId:
    case ErrorCode::kCorruptCheckpoint:
    case ErrorCode::kNoNgrams:
    case ErrorCode::kSpecInfeasible:
    case ErrorCode::kIo:
      return true;
    default:
      return false;
  }
}

}  // namespace kgdial
