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

// Stage orchestration over a working directory. Every stage reads its
// upstream artifacts by fixed name, writes its own, and leaves a manifest
// in manifests/<stage>.json. Artifact layout:
//
//   ingest      corpus.jsonl queries.jsonl qrels.tsv
//   downsample  corpus.sampled.jsonl (used instead of corpus.jsonl when present)
//   segment     sentences.jsonl
//   generate    synthetic.raw.jsonl
//   filter      synthetic.jsonl
//   embed       passages.emb sentences.emb synthetic.emb queries.emb
//   fuse        fused.emb weights.jsonl
//   index       index.bin
//   search      run.trec
//   eval        report.txt report.jsonl
//   ablate      ablation.tsv ablation.jsonl ablation/run.<strategy>.trec
//   simulate-rb rbsim.csv rbsim_summary.csv

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "qfuse/datamodel.hpp"
#include "qfuse/provider.hpp"

namespace qfuse {

inline constexpr std::string_view kVersion = "0.1.0";

namespace artifacts {
inline constexpr std::string_view kCorpus = "corpus.jsonl";
inline constexpr std::string_view kSampledCorpus = "corpus.sampled.jsonl";
inline constexpr std::string_view kQueries = "queries.jsonl";
inline constexpr std::string_view kQrels = "qrels.tsv";
inline constexpr std::string_view kSentences = "sentences.jsonl";
inline constexpr std::string_view kSyntheticRaw = "synthetic.raw.jsonl";
inline constexpr std::string_view kSynthetic = "synthetic.jsonl";
inline constexpr std::string_view kPassageEmb = "passages.emb";
inline constexpr std::string_view kSentenceEmb = "sentences.emb";
inline constexpr std::string_view kSyntheticEmb = "synthetic.emb";
inline constexpr std::string_view kQueryEmb = "queries.emb";
inline constexpr std::string_view kFused = "fused.emb";
inline constexpr std::string_view kWeights = "weights.jsonl";
inline constexpr std::string_view kIndex = "index.bin";
inline constexpr std::string_view kRun = "run.trec";
inline constexpr std::string_view kReportTable = "report.txt";
inline constexpr std::string_view kReportJsonl = "report.jsonl";
inline constexpr std::string_view kAblationTable = "ablation.tsv";
inline constexpr std::string_view kAblationJsonl = "ablation.jsonl";
inline constexpr std::string_view kRbsimCsv = "rbsim.csv";
inline constexpr std::string_view kRbsimSummary = "rbsim_summary.csv";
}  // namespace artifacts

/// Effective configuration. JSON keys equal the field names; CLI flags are
/// the same names with '-' for '_'.
struct PipelineConfig {
  // inputs (ingest)
  std::string corpus;
  std::string queries;
  std::string qrels;

  // provider
  std::string provider = "hash";  // hash | http
  std::string endpoint = "http://127.0.0.1:8080";
  std::size_t dim = 64;  // hash provider only
  std::string fixture;   // synthetic-query JSONL echoed by the hash provider
  std::size_t batch_size = 32;
  std::size_t max_in_flight = 4;
  std::size_t max_attempts = 4;
  std::size_t timeout_s = 120;
  std::string decoding = "greedy";

  // generation
  std::vector<InstructionTemplate> instructions = InstructionSet::defaults().templates();
  bool allow_instruction_override = false;
  std::size_t num_sequences = 1;
  std::size_t max_new_tokens = 64;

  // text processing
  std::string abbreviations;  // file; empty means built-in list
  std::size_t min_sentence_chars = 2;
  std::string half_rule = "real";  // real | floor

  // sampling, fusion, retrieval, evaluation
  std::size_t target_size = 0;
  bool sentence_level = true;
  std::string strategy = "manual";
  double w0 = 0.6;
  std::size_t k = 100;
  std::size_t ndcg_k = 10;
  std::size_t mrr_k = 100;
  std::size_t recall_k = 100;
  std::string run_tag = "qfuse";
  std::vector<std::string> ablate_strategies = {"corpus_only", "equal", "manual", "bertscore",
                                                "bertscore_softmax"};

  // simulation
  std::size_t rb_groups = 200;
  std::size_t rb_dim = 16;
  std::size_t rb_m = 4;
  double rb_sigma = 0.8;
  double rb_center_scale = 1.0;
  std::size_t rb_seeds = 20;
  std::vector<double> rb_w0_grid = {0.0, 0.25, 0.5, 0.75, 1.0};

  std::uint64_t seed = 42;
  std::size_t threads = 0;  // 0 = hardware concurrency

  nlohmann::ordered_json to_json() const;
  /// Overwrites fields named in `j`; unknown keys raise InvalidArgument.
  void merge_json(const nlohmann::json& j);
  /// Checks enumerations and ranges; raises InvalidArgument.
  void validate() const;
  std::size_t effective_threads() const;
};

PipelineConfig load_config_file(const std::filesystem::path& path, PipelineConfig base = {});

class Workspace {
 public:
  explicit Workspace(std::filesystem::path root);

  const std::filesystem::path& root() const noexcept { return root_; }
  std::filesystem::path path(std::string_view name) const { return root_ / name; }
  /// Path of an upstream artifact; raises MissingArtifact naming it and the
  /// stage that produces it.
  std::filesystem::path require(std::string_view name, std::string_view producer) const;
  /// corpus.sampled.jsonl if present, else corpus.jsonl.
  std::filesystem::path active_corpus() const;

 private:
  std::filesystem::path root_;
};

std::unique_ptr<Provider> make_provider(const PipelineConfig& config);

enum class Stage {
  kIngest,
  kDownsample,
  kSegment,
  kGenerate,
  kFilter,
  kEmbed,
  kFuse,
  kIndex,
  kSearch,
  kEval,
  kAblate,
  kSimulateRb,
};

std::string_view stage_name(Stage stage);
Stage parse_stage(std::string_view name);
const std::vector<Stage>& all_stages();

/// Runs one stage. Progress lines go to `log`. Returns the manifest that was
/// written to manifests/<stage>.json.
nlohmann::ordered_json run_stage(Stage stage, const PipelineConfig& config,
                                 const Workspace& workspace, std::ostream& log);

/// Passages of the active corpus with the requested upstream artifacts
/// attached. Used by fuse, index and ablate.
struct AssemblyNeeds {
  bool sentences = false;
  bool synthetic = false;
  bool embeddings = false;
  bool fused = false;
};
std::vector<PassageRecord> assemble_passages(const Workspace& workspace,
                                             const AssemblyNeeds& needs);

/// Process entry point: parses argv, runs the stage, maps errors to exit
/// codes (0 ok, 2 usage, 3 input/parse, 4 backend) and prints a one-line
/// JSON error record to `err` on failure.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace qfuse
