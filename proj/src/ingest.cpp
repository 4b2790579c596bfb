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

#include "qfuse/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "binary_io.hpp"
#include "qfuse/random.hpp"
#include "qfuse/textproc.hpp"

namespace qfuse {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr char kEmbeddingMagic[8] = {'Q', 'F', 'U', 'S', 'E', 'E', 'M', 'B'};
constexpr std::uint32_t kEmbeddingVersion = 1;

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kMissingArtifact, "file not found: " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path,
                          std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode | std::ios::trunc);
  if (!out) fail(ErrorCode::kIoError, "cannot write " + path.string());
  return out;
}

// Calls fn(object, line_no) for every non-blank line.
template <typename Fn>
void for_each_json_line(const std::filesystem::path& path, Fn&& fn) {
  std::ifstream in = open_input(path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      fail_at_line(line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!obj.is_object()) fail_at_line(line_no, "expected a JSON object");
    try {
      fn(obj, line_no);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kParseError || e.code() == ErrorCode::kDuplicateId) throw;
      fail_at_line(line_no, e.what());
    }
  }
}

std::string required_string(const json& obj, const char* key, std::size_t line_no) {
  auto it = obj.find(key);
  if (it == obj.end()) fail_at_line(line_no, std::string("missing '") + key + "'");
  if (!it->is_string()) fail_at_line(line_no, std::string("'") + key + "' must be a string");
  return it->get<std::string>();
}

std::string optional_string(const json& obj, const char* key, std::size_t line_no) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return {};
  if (!it->is_string()) fail_at_line(line_no, std::string("'") + key + "' must be a string");
  return it->get<std::string>();
}

double required_number(const json& obj, const char* key, std::size_t line_no) {
  auto it = obj.find(key);
  if (it == obj.end()) fail_at_line(line_no, std::string("missing '") + key + "'");
  if (!it->is_number()) fail_at_line(line_no, std::string("'") + key + "' must be a number");
  return it->get<double>();
}

int parse_grade(const std::string& s, std::size_t line_no) {
  if (s.empty()) fail_at_line(line_no, "empty relevance grade");
  std::size_t i = 0;
  const bool negative = s[0] == '-';
  if (negative || s[0] == '+') i = 1;
  if (i == s.size()) fail_at_line(line_no, "bad relevance grade '" + s + "'");
  long long v = 0;
  for (; i < s.size(); ++i) {
    if (s[i] < '0' || s[i] > '9') fail_at_line(line_no, "bad relevance grade '" + s + "'");
    v = v * 10 + (s[i] - '0');
    if (v > 1'000'000) fail_at_line(line_no, "relevance grade out of range");
  }
  if (negative && v != 0) fail_at_line(line_no, "negative relevance grade '" + s + "'");
  return static_cast<int>(v);
}

bool is_integer(const std::string& s) {
  if (s.empty()) return false;
  std::size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
  if (i == s.size()) return false;
  return std::all_of(s.begin() + static_cast<std::ptrdiff_t>(i), s.end(),
                     [](char c) { return c >= '0' && c <= '9'; });
}

}  // namespace

// ---------------------------------------------------------------------------
// corpus / queries / qrels

std::vector<PassageRecord> load_corpus(const std::filesystem::path& path) {
  std::vector<PassageRecord> out;
  std::set<std::string> ids;
  for_each_json_line(path, [&](const json& obj, std::size_t line_no) {
    std::string id = required_string(obj, "_id", line_no);
    std::string text = required_string(obj, "text", line_no);
    std::string title = optional_string(obj, "title", line_no);
    if (id.empty()) fail_at_line(line_no, "'_id' is empty");
    if (!ids.insert(id).second) {
      throw Error(ErrorCode::kDuplicateId,
                  "line " + std::to_string(line_no) + ": duplicate _id '" + id + "'", line_no);
    }
    out.emplace_back(std::move(id), std::move(title), std::move(text));
  });
  return out;
}

void save_corpus(const std::filesystem::path& path, std::span<const PassageRecord> passages) {
  std::ofstream out = open_output(path);
  for (const auto& p : passages) {
    ordered_json j;
    j["_id"] = p.passage_id();
    j["title"] = p.title();
    j["text"] = p.text();
    out << j.dump() << '\n';
  }
}

std::vector<QueryRecord> load_queries(const std::filesystem::path& path) {
  std::vector<QueryRecord> out;
  std::set<std::string> ids;
  for_each_json_line(path, [&](const json& obj, std::size_t line_no) {
    std::string id = required_string(obj, "_id", line_no);
    std::string text = required_string(obj, "text", line_no);
    if (id.empty()) fail_at_line(line_no, "'_id' is empty");
    if (!ids.insert(id).second) {
      throw Error(ErrorCode::kDuplicateId,
                  "line " + std::to_string(line_no) + ": duplicate _id '" + id + "'", line_no);
    }
    out.emplace_back(std::move(id), std::move(text));
  });
  return out;
}

void save_queries(const std::filesystem::path& path, std::span<const QueryRecord> queries) {
  std::ofstream out = open_output(path);
  for (const auto& q : queries) {
    ordered_json j;
    j["_id"] = q.query_id();
    j["text"] = q.text();
    out << j.dump() << '\n';
  }
}

QrelSet load_qrels(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  QrelSet qrels;
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::istringstream fields(line);
    std::string qid, pid, grade, extra;
    if (!(fields >> qid >> pid >> grade) || (fields >> extra)) {
      fail_at_line(line_no, "expected 3 columns: query-id corpus-id score");
    }
    if (first && !is_integer(grade)) {
      first = false;
      continue;  // header
    }
    first = false;
    const int g = parse_grade(grade, line_no);
    try {
      qrels.add(qid, pid, g);
    } catch (const Error& e) {
      fail_at_line(line_no, e.what());
    }
  }
  return qrels;
}

void save_qrels(const std::filesystem::path& path, const QrelSet& qrels) {
  std::ofstream out = open_output(path);
  out << "query-id\tcorpus-id\tscore\n";
  for (const auto& [qid, judgments] : qrels.by_query()) {
    for (const auto& [pid, g] : judgments) out << qid << '\t' << pid << '\t' << g << '\n';
  }
}

std::vector<std::string> validate_qrels(const QrelSet& qrels,
                                        std::span<const PassageRecord> corpus,
                                        std::span<const QueryRecord> queries) {
  std::set<std::string_view> passage_ids;
  for (const auto& p : corpus) passage_ids.insert(p.passage_id());
  std::set<std::string_view> query_ids;
  for (const auto& q : queries) query_ids.insert(q.query_id());

  std::vector<std::string> warnings;
  for (const auto& [qid, judgments] : qrels.by_query()) {
    if (!queries.empty() && !query_ids.contains(qid)) {
      warnings.push_back("qrels reference unknown query id '" + qid + "'");
    }
    for (const auto& [pid, _] : judgments) {
      if (!passage_ids.contains(pid)) {
        warnings.push_back("qrels (" + qid + ", " + pid + ") reference unknown corpus id '" +
                           pid + "'");
      }
    }
  }
  return warnings;
}

std::vector<PassageRecord> downsample_corpus(std::span<const PassageRecord> passages,
                                             const QrelSet& qrels, std::size_t target_size,
                                             std::uint64_t seed) {
  if (target_size == 0) fail(ErrorCode::kInvalidArgument, "downsample: target size must be positive");
  if (target_size > passages.size()) {
    fail(ErrorCode::kInvalidArgument, "downsample: target size " + std::to_string(target_size) +
                                          " exceeds corpus size " +
                                          std::to_string(passages.size()));
  }
  std::set<std::string> judged;
  for (const auto& [_, judgments] : qrels.by_query()) {
    for (const auto& [pid, _g] : judgments) judged.insert(pid);
  }

  std::vector<std::string> keep;
  std::vector<std::string> rest;
  for (const auto& p : passages) {
    (judged.contains(p.passage_id()) ? keep : rest).push_back(p.passage_id());
  }
  if (keep.size() > target_size) {
    fail(ErrorCode::kTargetTooSmall, "downsample: " + std::to_string(keep.size()) +
                                         " judged passages do not fit in target size " +
                                         std::to_string(target_size));
  }
  std::sort(rest.begin(), rest.end());
  Rng rng(seed);
  rng.shuffle(rest);
  rest.resize(target_size - keep.size());

  std::set<std::string> chosen(keep.begin(), keep.end());
  chosen.insert(rest.begin(), rest.end());

  std::vector<PassageRecord> out;
  out.reserve(chosen.size());
  for (const auto& p : passages) {
    if (chosen.contains(p.passage_id())) out.push_back(p);
  }
  std::sort(out.begin(), out.end(), [](const PassageRecord& a, const PassageRecord& b) {
    return a.passage_id() < b.passage_id();
  });
  return out;
}

// ---------------------------------------------------------------------------
// embeddings

void save_embeddings(std::span<const EmbeddingRecord> records, const std::filesystem::path& path) {
  const std::uint32_t dim = records.empty() ? 0 : static_cast<std::uint32_t>(records[0].vector.dim());
  for (const auto& r : records) {
    if (r.vector.dim() != dim) {
      fail(ErrorCode::kDimensionMismatch, "save_embeddings: record '" + r.id + "' has dim " +
                                              std::to_string(r.vector.dim()) + ", expected " +
                                              std::to_string(dim));
    }
  }
  std::ofstream out = open_output(path, std::ios::binary);
  out.write(kEmbeddingMagic, sizeof(kEmbeddingMagic));
  detail::put(out, kEmbeddingVersion);
  detail::put(out, dim);
  detail::put(out, static_cast<std::uint64_t>(records.size()));
  for (const auto& r : records) {
    detail::put_string(out, r.id);
    detail::put(out, r.ordinal);
    detail::put(out, static_cast<std::uint32_t>(r.vector.dim()));
    for (float f : r.vector.values()) detail::put_f32(out, f);
  }
  if (!out) fail(ErrorCode::kIoError, "failed writing " + path.string());
}

std::vector<EmbeddingRecord> load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kMissingArtifact, "embedding file not found: " + path.string());
  detail::Reader r(in, "embeddings " + path.string());

  char magic[sizeof(kEmbeddingMagic)];
  r.read(magic, sizeof(magic));
  if (!std::equal(std::begin(magic), std::end(magic), std::begin(kEmbeddingMagic))) {
    r.corrupt("bad magic");
  }
  if (r.get<std::uint32_t>() != kEmbeddingVersion) r.corrupt("unsupported version");
  const auto dim = r.get<std::uint32_t>();
  const auto count = r.get<std::uint64_t>();
  if (count > 0 && dim == 0) r.corrupt("dim is zero");
  if (count > (std::uint64_t{1} << 32)) r.corrupt("record count out of range");

  std::vector<EmbeddingRecord> out;
  out.reserve(static_cast<std::size_t>(count));
  for (std::uint64_t i = 0; i < count; ++i) {
    std::string id = r.get_string();
    const auto ordinal = r.get<std::int32_t>();
    const auto record_dim = r.get<std::uint32_t>();
    if (record_dim != dim) {
      fail(ErrorCode::kDimensionMismatch, "embeddings " + path.string() + ": record '" + id +
                                              "' has dim " + std::to_string(record_dim) +
                                              ", header says " + std::to_string(dim));
    }
    std::vector<float> values(dim);
    for (float& f : values) f = r.get_f32();
    try {
      out.push_back({std::move(id), ordinal, EmbeddingVector(std::move(values))});
    } catch (const Error& e) {
      r.corrupt(e.what());
    }
  }
  if (!r.at_end()) r.corrupt("trailing bytes");
  return out;
}

// ---------------------------------------------------------------------------
// synthetic queries

void save_synthetic(const SyntheticSet& queries, const std::filesystem::path& path) {
  std::ofstream out = open_output(path);
  for (const auto& [pid, list] : queries) {
    for (const auto& q : list) {
      ordered_json j;
      j["passage_id"] = pid;
      j["kind"] = query_kind_name(q.kind());
      j["text"] = q.text();
      j["gen_prob"] = q.gen_prob();
      j["passed_filter"] = q.passed_filter();
      if (q.bertscore_f1()) j["bertscore_f1"] = *q.bertscore_f1();
      out << j.dump() << '\n';
    }
  }
}

SyntheticSet load_synthetic(const std::filesystem::path& path) {
  SyntheticSet out;
  for_each_json_line(path, [&](const json& obj, std::size_t line_no) {
    std::string pid = required_string(obj, "passage_id", line_no);
    const std::string kind = required_string(obj, "kind", line_no);
    std::string text = required_string(obj, "text", line_no);
    const double gen_prob = required_number(obj, "gen_prob", line_no);
    bool passed = false;
    if (auto it = obj.find("passed_filter"); it != obj.end()) {
      if (!it->is_boolean()) fail_at_line(line_no, "'passed_filter' must be a boolean");
      passed = it->get<bool>();
    }
    std::optional<double> f1;
    if (auto it = obj.find("bertscore_f1"); it != obj.end() && !it->is_null()) {
      if (!it->is_number()) fail_at_line(line_no, "'bertscore_f1' must be a number");
      f1 = it->get<double>();
    }
    if (pid.empty()) fail_at_line(line_no, "'passage_id' is empty");
    out[pid].emplace_back(parse_query_kind(kind), std::move(text), gen_prob, passed, f1);
  });
  return out;
}

// ---------------------------------------------------------------------------
// sentences

void save_sentences(const std::filesystem::path& path, std::span<const PassageRecord> passages) {
  std::ofstream out = open_output(path);
  for (const auto& p : passages) {
    for (const auto& s : p.sentences()) {
      ordered_json j;
      j["passage_id"] = p.passage_id();
      j["ordinal"] = s.ordinal();
      j["text"] = s.text();
      out << j.dump() << '\n';
    }
  }
}

std::map<std::string, std::vector<std::string>> load_sentences(const std::filesystem::path& path) {
  std::map<std::string, std::vector<std::string>> out;
  for_each_json_line(path, [&](const json& obj, std::size_t line_no) {
    std::string pid = required_string(obj, "passage_id", line_no);
    auto it = obj.find("ordinal");
    if (it == obj.end() || !it->is_number_unsigned()) {
      fail_at_line(line_no, "'ordinal' must be a non-negative integer");
    }
    auto& list = out[pid];
    if (it->get<std::size_t>() != list.size()) {
      fail_at_line(line_no, "sentence ordinals for '" + pid + "' must be consecutive from 0");
    }
    list.push_back(required_string(obj, "text", line_no));
  });
  return out;
}

}  // namespace qfuse
