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

#include <CLI11.hpp>

#include <functional>
#include <map>
#include <ostream>

#include "config_fields.hpp"
#include "qfuse/pipeline.hpp"

namespace qfuse {

namespace {

using nlohmann::ordered_json;

constexpr std::pair<std::string_view, std::string_view> kStageHelp[] = {
    {"ingest", "Load corpus, queries and qrels into the work directory"},
    {"downsample", "Sample the corpus to --target-size, keeping judged passages"},
    {"segment", "Split passages into sentences"},
    {"generate", "Generate synthetic queries per passage"},
    {"filter", "Apply the question and keyword filters"},
    {"embed", "Embed passages, sentences, synthetic queries and test queries"},
    {"fuse", "Combine corpus and synthetic-query embeddings"},
    {"index", "Build the exact cosine index"},
    {"search", "Retrieve the top --k passages per query"},
    {"eval", "Score the run against qrels"},
    {"ablate", "Compare fusion strategies end to end"},
    {"simulate-rb", "Monte-Carlo simulation of query-mean fusion"},
};

constexpr std::pair<std::string_view, std::string_view> kFieldHelp[] = {
    {"corpus", "corpus JSONL (ingest)"},
    {"queries", "queries JSONL (ingest)"},
    {"qrels", "qrels TSV (ingest)"},
    {"provider", "embedding/generation backend: hash|http"},
    {"endpoint", "sidecar base URL"},
    {"dim", "hash provider vector size"},
    {"fixture", "synthetic-query JSONL echoed by the hash provider"},
    {"batch_size", "texts per /v1/embed request"},
    {"max_in_flight", "concurrent sidecar requests"},
    {"max_attempts", "attempts per sidecar request"},
    {"timeout_s", "sidecar request timeout in seconds"},
    {"decoding", "generation strategy sent to the sidecar"},
    {"allow_instruction_override", "accept instructions outside the configured templates"},
    {"num_sequences", "synthetic queries per instruction"},
    {"max_new_tokens", "generation length limit"},
    {"abbreviations", "abbreviation list file (default: built-in)"},
    {"min_sentence_chars", "shorter fragments merge into the previous sentence"},
    {"half_rule", "keyword filter threshold: real (k < n/2) or floor"},
    {"target_size", "downsample target passage count"},
    {"sentence_level", "index sentences (on) or whole passages (off)"},
    {"strategy", "fusion weighting: corpus_only|equal|manual|gen_prob|bertscore|bertscore_softmax"},
    {"w0", "corpus weight for manual and gen_prob"},
    {"k", "hits per query"},
    {"ndcg_k", "NDCG cutoff"},
    {"mrr_k", "MRR cutoff"},
    {"recall_k", "recall cutoff"},
    {"run_tag", "tag column of the TREC run"},
    {"ablate_strategies", "strategies compared by ablate"},
    {"rb_groups", "simulation: groups"},
    {"rb_dim", "simulation: dimension"},
    {"rb_m", "simulation: queries per group"},
    {"rb_sigma", "simulation: query noise"},
    {"rb_center_scale", "simulation: center spread"},
    {"rb_seeds", "simulation: repetitions"},
    {"rb_w0_grid", "simulation: corpus weights to evaluate"},
    {"seed", "master seed"},
    {"threads", "worker threads (0 = all cores)"},
};

std::string field_help(std::string_view name) {
  for (const auto& [n, h] : kFieldHelp) {
    if (n == name) return std::string(h);
  }
  return {};
}

std::string flag_name(std::string_view field) {
  std::string out = "--";
  for (char c : field) out.push_back(c == '_' ? '-' : c);
  return out;
}

bool parse_switch(const std::string& v) { return v == "on" || v == "true" || v == "1"; }

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
      return 2;
    case ErrorCode::kBackendUnavailable:
    case ErrorCode::kBadResponse:
      return 4;
    default:
      return 3;
  }
}

void error_line(std::ostream& err, std::string_view kind, int exit_code, const std::string& message,
                std::string_view stage) {
  ordered_json j;
  j["error"] = std::string(kind);
  j["exit_code"] = exit_code;
  if (!stage.empty()) j["stage"] = std::string(stage);
  j["message"] = message;
  err << j.dump() << '\n';
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"qfuse: query-augmented corpus fusion for dense retrieval", "qfuse"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(kVersion));

  std::string work = ".";
  std::string config_path;
  app.add_option("--work", work, "Working directory holding pipeline artifacts")
      ->capture_default_str();
  app.add_option("--config", config_path, "JSON config file (CLI flags take precedence)");

  // Flags bind to a scratch config; only the ones given on the command line
  // are copied over the file/default values afterwards.
  const PipelineConfig defaults;
  PipelineConfig given;
  std::map<std::string, CLI::Option*> options;
  std::map<std::string, std::string> switches;
  visit_config_fields(
      [&](const char* name, auto& field, const auto& def) {
        using T = std::decay_t<decltype(field)>;
        const std::string flag = flag_name(name);
        if constexpr (std::is_same_v<T, std::vector<InstructionTemplate>>) {
          return;  // config file only
        } else if constexpr (std::is_same_v<T, bool>) {
          auto& slot = switches[name];
          options[name] = app.add_option(flag, slot, field_help(name))
                              ->check(CLI::IsMember({"on", "off", "true", "false", "1", "0"}))
                              ->default_str(def ? "on" : "off");
        } else if constexpr (std::is_same_v<T, std::vector<std::string>> ||
                             std::is_same_v<T, std::vector<double>>) {
          options[name] = app.add_option(flag, field, field_help(name))->delimiter(',');
        } else {
          options[name] = app.add_option(flag, field, field_help(name))->default_val(def);
        }
      },
      given, defaults);

  for (const auto& [name, help] : kStageHelp) {
    app.add_subcommand(std::string(name), std::string(help));
  }

  std::string stage_str;
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    app.exit(e, out, err);
    error_line(err, "UsageError", 2, e.what(), "");
    return 2;
  }
  stage_str = app.get_subcommands().front()->get_name();

  try {
    PipelineConfig config;
    if (!config_path.empty()) config = load_config_file(config_path, config);
    visit_config_fields(
        [&](const char* name, auto& dst, const auto& src) {
          using T = std::decay_t<decltype(dst)>;
          auto it = options.find(name);
          if (it == options.end() || it->second->count() == 0) return;
          if constexpr (std::is_same_v<T, bool>) {
            dst = parse_switch(switches[name]);
          } else {
            dst = src;
          }
        },
        config, given);

    const Stage stage = parse_stage(stage_str);
    run_stage(stage, config, Workspace(work), out);
    return 0;
  } catch (const Error& e) {
    const int code = exit_code_for(e.code());
    error_line(err, error_code_name(e.code()), code, e.what(), stage_str);
    return code;
  } catch (const std::filesystem::filesystem_error& e) {
    error_line(err, "IoError", 3, e.what(), stage_str);
    return 3;
  } catch (const std::exception& e) {
    error_line(err, "Internal", 1, e.what(), stage_str);
    return 1;
  }
}

}  // namespace qfuse
