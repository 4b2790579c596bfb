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

#include <gtest/gtest.h>

#include <json.hpp>

#include "fixtures.hpp"
#include "qfuse/pipeline.hpp"

namespace qfuse {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using testing::cli;
using testing::TempDir;

json error_record(const std::string& err) {
  // The JSON record is the last non-empty line.
  std::string last;
  std::size_t start = 0;
  while (start < err.size()) {
    const std::size_t end = err.find('\n', start);
    const std::string line = err.substr(start, end == std::string::npos ? end : end - start);
    if (!line.empty()) last = line;
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return json::parse(last);
}

std::vector<std::string> ingest_args(const fs::path& work) {
  const fs::path toy = testing::toy_dir();
  return {"ingest",  "--work",    work.string(),
          "--corpus", (toy / "corpus.jsonl").string(),
          "--queries", (toy / "queries.jsonl").string(),
          "--qrels",  (toy / "qrels.tsv").string()};
}

TEST(CliTest, VersionAndHelp) {
  const auto v = cli({"--version"});
  EXPECT_EQ(v.code, 0);
  EXPECT_NE(v.out.find(std::string(kVersion)), std::string::npos);
  const auto h = cli({"--help"});
  EXPECT_EQ(h.code, 0);
  EXPECT_NE(h.out.find("simulate-rb"), std::string::npos);
  EXPECT_NE(h.out.find("--w0"), std::string::npos);
}

TEST(CliTest, UsageErrorsExitTwo) {
  for (const auto& args : std::vector<std::vector<std::string>>{
           {},
           {"train"},
           {"fuse", "--strategy"},
           {"fuse", "--sentence-level", "maybe"},
           {"fuse", "--k", "many"},
       }) {
    const auto r = cli(args);
    EXPECT_EQ(r.code, 2) << (args.empty() ? "" : args[0]);
    EXPECT_EQ(error_record(r.err)["exit_code"], 2);
  }
}

TEST(CliTest, InvalidConfigValueExitsTwo) {
  TempDir dir;
  const auto r = cli({"simulate-rb", "--work", dir.path().string(), "--strategy", "bogus"});
  EXPECT_EQ(r.code, 2);
  const json e = error_record(r.err);
  EXPECT_EQ(e["error"], "InvalidArgument");
  EXPECT_EQ(e["stage"], "simulate-rb");
  EXPECT_TRUE(e["message"].get<std::string>().find("bogus") != std::string::npos);
}

TEST(CliTest, MissingEmbeddingsExitThreeNamingArtifact) {
  TempDir dir;
  const auto work = dir / "w";
  ASSERT_EQ(cli(ingest_args(work)).code, 0);
  ASSERT_EQ(cli({"segment", "--work", work.string()}).code, 0);
  ASSERT_EQ(cli({"generate", "--work", work.string(), "--fixture",
                 (testing::toy_dir() / "synthetic_fixture.jsonl").string()})
                .code,
            0);
  ASSERT_EQ(cli({"filter", "--work", work.string()}).code, 0);
  const auto r = cli({"fuse", "--work", work.string()});
  EXPECT_EQ(r.code, 3);
  const json e = error_record(r.err);
  EXPECT_EQ(e["error"], "MissingArtifact");
  EXPECT_EQ(e["stage"], "fuse");
  EXPECT_NE(e["message"].get<std::string>().find("passages.emb"), std::string::npos);
  EXPECT_NE(e["message"].get<std::string>().find("qfuse embed"), std::string::npos);
}

TEST(CliTest, ConfigPrecedence) {
  TempDir dir;
  testing::write_file(dir / "c.json", R"({"w0": 0.3, "rb_groups": 20, "rb_seeds": 1})");
  auto manifest_config = [&](const std::vector<std::string>& extra) {
    std::vector<std::string> args{"simulate-rb", "--work", dir.path().string()};
    args.insert(args.end(), extra.begin(), extra.end());
    const auto r = cli(args);
    EXPECT_EQ(r.code, 0) << r.err;
    return json::parse(testing::read_file(dir / "manifests/simulate-rb.json"))["config"];
  };
  EXPECT_EQ(manifest_config({"--rb-groups", "20", "--rb-seeds", "1"})["w0"], 0.6);
  const json file = manifest_config({"--config", (dir / "c.json").string()});
  EXPECT_EQ(file["w0"], 0.3);
  EXPECT_EQ(file["rb_groups"], 20);
  const json both = manifest_config({"--config", (dir / "c.json").string(), "--w0", "0.5",
                                     "--rb-w0-grid", "0.1,0.9", "--sentence-level", "off"});
  EXPECT_EQ(both["w0"], 0.5);
  EXPECT_EQ(both["rb_groups"], 20);
  EXPECT_EQ(both["rb_w0_grid"], json::array({0.1, 0.9}));
  EXPECT_EQ(both["sentence_level"], false);
}

TEST(CliTest, UnreachableSidecarExitsFour) {
  TempDir dir;
  const auto work = dir / "w";
  ASSERT_EQ(cli(ingest_args(work)).code, 0);
  const auto r = cli({"generate", "--work", work.string(), "--provider", "http", "--endpoint",
                      "http://127.0.0.1:1", "--max-attempts", "1", "--timeout-s", "2"});
  EXPECT_EQ(r.code, 4);
  EXPECT_EQ(error_record(r.err)["error"], "BackendUnavailable");
}

TEST(CliTest, EvalReportsMacroTable) {
  TempDir dir;
  const auto work = dir / "w";
  ASSERT_EQ(testing::run_toy_pipeline(work), 0);
  const std::string table = testing::read_file(work / "report.txt");
  EXPECT_NE(table.find("NDCG@10"), std::string::npos);
  EXPECT_NE(table.find("evaluated 20 queries, skipped 1"), std::string::npos);
}

TEST(CliTest, RerunsAreByteIdenticalAcrossThreadCounts) {
  TempDir dir;
  ASSERT_EQ(testing::run_toy_pipeline(dir / "a", {"--threads", "1"}), 0);
  ASSERT_EQ(testing::run_toy_pipeline(dir / "b", {"--threads", "4"}), 0);
  for (const char* name : {"sentences.jsonl", "synthetic.jsonl", "passages.emb", "fused.emb",
                           "weights.jsonl", "index.bin", "run.trec", "report.jsonl"}) {
    EXPECT_EQ(testing::read_file(dir / "a" / name), testing::read_file(dir / "b" / name)) << name;
  }
}

}  // namespace
}  // namespace qfuse
