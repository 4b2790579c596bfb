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

// Shared helpers for unit and acceptance tests.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "qfuse/datamodel.hpp"
#include "qfuse/error.hpp"
#include "qfuse/random.hpp"

namespace qfuse::testing {

/// Code of the qfuse::Error thrown by f(), or nullopt if none was thrown.
template <typename F>
std::optional<ErrorCode> error_code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

std::filesystem::path source_dir();
std::filesystem::path toy_dir();
std::filesystem::path cli_path();

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& contents);

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

/// Runs the CLI entry point in-process.
CliResult cli(const std::vector<std::string>& args);

/// Runs the CLI binary as a child process; returns its exit status.
int cli_process(const std::vector<std::string>& args, const std::filesystem::path& log);

/// The toy pipeline, ingest through eval, into `work`. Returns the first
/// non-zero exit code, or 0. Extra flags are appended to every stage.
int run_toy_pipeline(const std::filesystem::path& work, const std::vector<std::string>& extra = {},
                     bool in_process = true);

/// Random (run, qrels) instance with up to `max_queries` queries over up to
/// `max_passages` passages. Every query has at least one relevant judgment.
struct RunInstance {
  std::vector<RankedList> runs;
  QrelSet qrels;
};
RunInstance random_run_instance(Rng& rng, std::size_t max_queries, std::size_t max_passages);

std::vector<float> random_vector(Rng& rng, std::size_t dim);
std::vector<float> random_unit_vector(Rng& rng, std::size_t dim);

}  // namespace qfuse::testing
