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

#include "qfuse/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace qfuse {

namespace {

const QrelSet::Judgments& relevant_judgments(const RankedList& ranked, const QrelSet& qrels) {
  const QrelSet::Judgments* j = qrels.judgments(ranked.query_id());
  if (j == nullptr || qrels.relevant_count(ranked.query_id()) == 0) {
    fail(ErrorCode::kNoRelevant, "query " + ranked.query_id() + " has no relevant passages");
  }
  return *j;
}

void require_k(std::size_t k) {
  if (k == 0) fail(ErrorCode::kInvalidArgument, "metric cutoff must be positive");
}

int grade_of(const QrelSet::Judgments& j, const std::string& passage_id) {
  auto it = j.find(passage_id);
  return it == j.end() ? 0 : it->second;
}

double gain(int grade) { return std::exp2(static_cast<double>(grade)) - 1.0; }

std::string format_score(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

double ndcg_at_k(const RankedList& ranked, const QrelSet& qrels, std::size_t k) {
  require_k(k);
  const auto& j = relevant_judgments(ranked, qrels);
  const std::size_t depth = std::min(k, ranked.size());
  double dcg = 0.0;
  for (std::size_t i = 0; i < depth; ++i) {
    dcg += gain(grade_of(j, ranked.hits()[i].passage_id)) / std::log2(static_cast<double>(i) + 2.0);
  }
  std::vector<int> ideal;
  for (const auto& [_, g] : j) {
    if (g >= 1) ideal.push_back(g);
  }
  std::sort(ideal.begin(), ideal.end(), std::greater<>());
  double idcg = 0.0;
  for (std::size_t i = 0; i < std::min(k, ideal.size()); ++i) {
    idcg += gain(ideal[i]) / std::log2(static_cast<double>(i) + 2.0);
  }
  return dcg / idcg;
}

double mrr_at_k(const RankedList& ranked, const QrelSet& qrels, std::size_t k) {
  require_k(k);
  const auto& j = relevant_judgments(ranked, qrels);
  const std::size_t depth = std::min(k, ranked.size());
  for (std::size_t i = 0; i < depth; ++i) {
    if (grade_of(j, ranked.hits()[i].passage_id) >= 1) return 1.0 / static_cast<double>(i + 1);
  }
  return 0.0;
}

double recall_at_k(const RankedList& ranked, const QrelSet& qrels, std::size_t k) {
  require_k(k);
  const auto& j = relevant_judgments(ranked, qrels);
  const std::size_t depth = std::min(k, ranked.size());
  std::size_t found = 0;
  for (std::size_t i = 0; i < depth; ++i) {
    if (grade_of(j, ranked.hits()[i].passage_id) >= 1) ++found;
  }
  return static_cast<double>(found) / static_cast<double>(qrels.relevant_count(ranked.query_id()));
}

EvalReport evaluate_run(std::span<const RankedList> runs, const QrelSet& qrels,
                        const MetricCutoffs& cutoffs) {
  if (runs.empty()) fail(ErrorCode::kEmptyRun, "evaluate_run: no ranked lists");
  EvalReport report;
  report.cutoffs = cutoffs;
  std::set<std::string> seen;
  for (const auto& r : runs) {
    if (!seen.insert(r.query_id()).second) {
      fail(ErrorCode::kInvalidArgument, "evaluate_run: query " + r.query_id() + " appears twice");
    }
    if (qrels.relevant_count(r.query_id()) == 0) {
      report.skipped.push_back(r.query_id());
      continue;
    }
    report.per_query.push_back({r.query_id(), ndcg_at_k(r, qrels, cutoffs.ndcg),
                                mrr_at_k(r, qrels, cutoffs.mrr),
                                recall_at_k(r, qrels, cutoffs.recall)});
  }
  if (!report.per_query.empty()) {
    for (const auto& s : report.per_query) {
      report.ndcg += s.ndcg;
      report.mrr += s.mrr;
      report.recall += s.recall;
    }
    const auto n = static_cast<double>(report.per_query.size());
    report.ndcg /= n;
    report.mrr /= n;
    report.recall /= n;
  }
  return report;
}

void write_report_table(std::ostream& out, const EvalReport& report) {
  const std::string ndcg = "NDCG@" + std::to_string(report.cutoffs.ndcg);
  const std::string mrr = "MRR@" + std::to_string(report.cutoffs.mrr);
  const std::string recall = "Recall@" + std::to_string(report.cutoffs.recall);
  char line[256];
  std::snprintf(line, sizeof(line), "%-12s %10s %10s %10s\n", "metric", ndcg.c_str(), mrr.c_str(),
                recall.c_str());
  out << line;
  std::snprintf(line, sizeof(line), "%-12s %10.4f %10.4f %10.4f\n", "macro", report.ndcg,
                report.mrr, report.recall);
  out << line;
  out << "evaluated " << report.per_query.size() << " queries, skipped "
      << report.skipped.size() << " without relevant judgments\n";
}

void write_report_jsonl(std::ostream& out, const EvalReport& report) {
  const std::string ndcg = "ndcg@" + std::to_string(report.cutoffs.ndcg);
  const std::string mrr = "mrr@" + std::to_string(report.cutoffs.mrr);
  const std::string recall = "recall@" + std::to_string(report.cutoffs.recall);
  for (const auto& s : report.per_query) {
    nlohmann::ordered_json j;
    j["query_id"] = s.query_id;
    j[ndcg] = s.ndcg;
    j[mrr] = s.mrr;
    j[recall] = s.recall;
    out << j.dump() << '\n';
  }
  nlohmann::ordered_json summary;
  summary["summary"] = true;
  summary["evaluated"] = report.per_query.size();
  summary["skipped"] = report.skipped;
  summary[ndcg] = report.ndcg;
  summary[mrr] = report.mrr;
  summary[recall] = report.recall;
  out << summary.dump() << '\n';
}

void write_trec_run(std::ostream& out, std::span<const RankedList> runs, const std::string& tag) {
  for (const auto& r : runs) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      const Hit& h = r.hits()[i];
      out << r.query_id() << " Q0 " << h.passage_id << ' ' << (i + 1) << ' '
          << format_score(h.score) << ' ' << tag << '\n';
    }
  }
}

std::vector<RankedList> read_trec_run(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kMissingArtifact, "run file not found: " + path.string());

  struct Row {
    long rank;
    std::string passage_id;
    double score;
  };
  std::map<std::string, std::vector<Row>> by_query;
  std::vector<std::string> order;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string qid, q0, pid, rank_s, score_s, tag, extra;
    if (!(fields >> qid)) continue;
    if (!(fields >> q0 >> pid >> rank_s >> score_s >> tag) || (fields >> extra)) {
      fail_at_line(line_no, "expected 6 columns");
    }
    Row row{};
    try {
      std::size_t used = 0;
      row.rank = std::stol(rank_s, &used);
      if (used != rank_s.size() || row.rank < 1) throw std::invalid_argument(rank_s);
      row.score = std::stod(score_s, &used);
      if (used != score_s.size()) throw std::invalid_argument(score_s);
    } catch (const std::exception&) {
      fail_at_line(line_no, "bad rank or score");
    }
    row.passage_id = pid;
    auto [it, inserted] = by_query.try_emplace(qid);
    if (inserted) order.push_back(qid);
    it->second.push_back(std::move(row));
  }

  std::vector<RankedList> runs;
  runs.reserve(order.size());
  for (const auto& qid : order) {
    auto& rows = by_query[qid];
    std::stable_sort(rows.begin(), rows.end(),
                     [](const Row& a, const Row& b) { return a.rank < b.rank; });
    std::vector<Hit> hits;
    hits.reserve(rows.size());
    for (auto& r : rows) hits.push_back({std::move(r.passage_id), r.score});
    try {
      runs.emplace_back(qid, std::move(hits));
    } catch (const Error& e) {
      fail(ErrorCode::kParseError, "run " + path.string() + ": " + e.what());
    }
  }
  return runs;
}

}  // namespace qfuse
