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

#include "fixtures.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "qfuse/pipeline.hpp"

namespace qfuse::testing {

namespace fs = std::filesystem;

TempDir::TempDir() {
  std::string tmpl = (fs::temp_directory_path() / "qfuse-test-XXXXXX").string();
  if (mkdtemp(tmpl.data()) == nullptr) throw std::runtime_error("mkdtemp failed");
  path_ = tmpl;
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

fs::path source_dir() { return QFUSE_SOURCE_DIR; }
fs::path toy_dir() { return source_dir() / "data" / "toy"; }
fs::path cli_path() { return QFUSE_CLI_PATH; }

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << contents;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

CliResult cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"qfuse"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  CliResult r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

int cli_process(const std::vector<std::string>& args, const fs::path& log) {
  const pid_t pid = fork();
  if (pid < 0) throw std::runtime_error("fork failed");
  if (pid == 0) {
    std::FILE* f = std::freopen(log.c_str(), "a", stdout);
    if (f == nullptr) _exit(127);
    dup2(fileno(stdout), fileno(stderr));
    std::vector<char*> argv;
    const std::string exe = cli_path().string();
    argv.push_back(const_cast<char*>(exe.c_str()));
    for (const auto& a : args) argv.push_back(const_cast<char*>(a.c_str()));
    argv.push_back(nullptr);
    execv(exe.c_str(), argv.data());
    _exit(127);
  }
  int status = 0;
  waitpid(pid, &status, 0);
  return WIFEXITED(status) ? WEXITSTATUS(status) : 128;
}

int run_toy_pipeline(const fs::path& work, const std::vector<std::string>& extra,
                     bool in_process) {
  const fs::path toy = toy_dir();
  const std::vector<std::vector<std::string>> stages = {
      {"ingest", "--corpus", (toy / "corpus.jsonl").string(), "--queries",
       (toy / "queries.jsonl").string(), "--qrels", (toy / "qrels.tsv").string()},
      {"segment"},
      {"generate", "--fixture", (toy / "synthetic_fixture.jsonl").string()},
      {"filter"},
      {"embed"},
      {"fuse"},
      {"index"},
      {"search"},
      {"eval"},
  };
  for (auto args : stages) {
    args.insert(args.end(), {"--work", work.string(), "--config", (toy / "config.json").string()});
    args.insert(args.end(), extra.begin(), extra.end());
    const int code = in_process ? cli(args).code : cli_process(args, work.parent_path() / (work.filename().string() + ".log"));
    if (code != 0) return code;
  }
  return 0;
}

RunInstance random_run_instance(Rng& rng, std::size_t max_queries, std::size_t max_passages) {
  RunInstance inst;
  const std::size_t n_passages = 1 + rng.below(max_passages);
  const std::size_t n_queries = 1 + rng.below(max_queries);
  std::vector<std::string> pids;
  for (std::size_t p = 0; p < n_passages; ++p) pids.push_back("p" + std::to_string(p));

  for (std::size_t q = 0; q < n_queries; ++q) {
    const std::string qid = "q" + std::to_string(q);
    // Judgments: a random subset with grades 0..3, at least one relevant.
    const std::size_t n_judged = 1 + rng.below(std::min<std::size_t>(n_passages, 30));
    std::vector<std::string> judged = pids;
    rng.shuffle(judged);
    judged.resize(n_judged);
    for (std::size_t j = 0; j < n_judged; ++j) {
      const int grade = j == 0 ? 1 + static_cast<int>(rng.below(3)) : static_cast<int>(rng.below(4));
      inst.qrels.add(qid, judged[j], grade);
    }
    // Ranking: random subset, random scores with occasional ties.
    std::vector<std::string> ranked = pids;
    rng.shuffle(ranked);
    ranked.resize(1 + rng.below(n_passages));
    std::vector<Hit> hits;
    double score = 1.0;
    for (const auto& pid : ranked) {
      hits.push_back({pid, score});
      if (rng.below(4) != 0) score -= rng.uniform01() * 0.01;
    }
    inst.runs.emplace_back(qid, std::move(hits));
  }
  return inst;
}

std::vector<float> random_vector(Rng& rng, std::size_t dim) {
  std::vector<float> v(dim);
  for (auto& x : v) x = static_cast<float>(rng.normal());
  return v;
}

std::vector<float> random_unit_vector(Rng& rng, std::size_t dim) {
  std::vector<float> v = random_vector(rng, dim);
  double s = 0.0;
  for (float x : v) s += static_cast<double>(x) * x;
  const double n = std::sqrt(s);
  for (auto& x : v) x = static_cast<float>(x / n);
  return v;
}

}  // namespace qfuse::testing
