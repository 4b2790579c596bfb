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

#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace qfuse {

enum class ErrorCode {
  kInvalidArgument,
  kInvariantViolation,
  kEmptyInput,
  kMissingField,
  kEmptyQueries,
  kDimensionMismatch,
  kMissingEmbedding,
  kMissingFused,
  kZeroVector,
  kNoRelevant,
  kEmptyRun,
  kParseError,
  kDuplicateId,
  kTargetTooSmall,
  kMissingArtifact,
  kIoError,
  kBackendUnavailable,
  kBadResponse,
};

std::string_view error_code_name(ErrorCode code);

/// Every failure in the library surfaces as this exception type. The code
/// names which contract was broken; `line()` is set for parse failures.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<std::size_t> line = std::nullopt);

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::size_t> line() const noexcept { return line_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> line_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);
[[noreturn]] void fail_at_line(std::size_t line, const std::string& message);

}  // namespace qfuse
