// Copyright 2026 The qfuse Authors
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

#include "qfuse/error.hpp"

namespace qfuse {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kInvariantViolation: return "InvariantViolation";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kMissingField: return "MissingField";
    case ErrorCode::kEmptyQueries: return "EmptyQueries";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kMissingEmbedding: return "MissingEmbedding";
    case ErrorCode::kMissingFused: return "MissingFused";
    case ErrorCode::kZeroVector: return "ZeroVector";
    case ErrorCode::kNoRelevant: return "NoRelevant";
    case ErrorCode::kEmptyRun: return "EmptyRun";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kDuplicateId: return "DuplicateId";
    case ErrorCode::kTargetTooSmall: return "TargetTooSmall";
    case ErrorCode::kMissingArtifact: return "MissingArtifact";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kBackendUnavailable: return "BackendUnavailable";
    case ErrorCode::kBadResponse: return "BadResponse";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message,
             std::optional<std::size_t> line)
    : std::runtime_error(message), code_(code), line_(line) {}

void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

void fail_at_line(std::size_t line, const std::string& message) {
  throw Error(ErrorCode::kParseError,
              "line " + std::to_string(line) + ": " + message, line);
}

}  // namespace qfuse
