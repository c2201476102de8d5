// Copyright 2026 The kiwb Authors.
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

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace kiwb {

// Every failure the library reports carries one of these codes. The CLI
// prints the code name as the "error" field of its stderr JSON line.
enum class ErrorCode {
  kIoError,
  kInvalidEncoding,
  kMalformedLine,
  kDuplicateEntity,
  kDanglingHead,
  kEmptyGraph,
  kCycleDetected,
  kMissingType,
  kIndexMismatch,
  kNoiseNotTextual,
  kWrongVariantForGroup,
  kMissingTaskEntities,
  kEmptyInput,
  kNotFound,
  kMissingTaxonomy,
  kInconsistentMetric,
  kTooFewRuns,
  kUnknownExample,
  kIncomparableDumps,
  kUnknownPosition,
  kIdSetMismatch,
  kFormatError,
  kInvalidArgument,
};

constexpr std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIoError:
      return "IoError";
    case ErrorCode::kInvalidEncoding:
      return "InvalidEncoding";
    case ErrorCode::kMalformedLine:
      return "MalformedLine";
    case ErrorCode::kDuplicateEntity:
      return "DuplicateEntity";
    case ErrorCode::kDanglingHead:
      return "DanglingHead";
    case ErrorCode::kEmptyGraph:
      return "EmptyGraph";
    case ErrorCode::kCycleDetected:
      return "CycleDetected";
    case ErrorCode::kMissingType:
      return "MissingType";
    case ErrorCode::kIndexMismatch:
      return "IndexMismatch";
    case ErrorCode::kNoiseNotTextual:
      return "NoiseNotTextual";
    case ErrorCode::kWrongVariantForGroup:
      return "WrongVariantForGroup";
    case ErrorCode::kMissingTaskEntities:
      return "MissingTaskEntities";
    case ErrorCode::kEmptyInput:
      return "EmptyInput";
    case ErrorCode::kNotFound:
      return "NotFound";
    case ErrorCode::kMissingTaxonomy:
      return "MissingTaxonomy";
    case ErrorCode::kInconsistentMetric:
      return "InconsistentMetric";
    case ErrorCode::kTooFewRuns:
      return "TooFewRuns";
    case ErrorCode::kUnknownExample:
      return "UnknownExample";
    case ErrorCode::kIncomparableDumps:
      return "IncomparableDumps";
    case ErrorCode::kUnknownPosition:
      return "UnknownPosition";
    case ErrorCode::kIdSetMismatch:
      return "IdSetMismatch";
    case ErrorCode::kFormatError:
      return "FormatError";
    case ErrorCode::kInvalidArgument:
      return "InvalidArgument";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string detail)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + detail),
        code_(code),
        detail_(std::move(detail)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace kiwb
