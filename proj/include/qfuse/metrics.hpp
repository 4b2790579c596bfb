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

// trec_eval-compatible ranking metrics. NDCG uses exponential gain
// 2^grade - 1 with a log2(rank + 1) discount; MRR and recall treat
// grade >= 1 as relevant. Queries without any relevant judgment raise
// NoRelevant and are reported as skipped by evaluate_run.

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "qfuse/datamodel.hpp"

namespace qfuse {

double ndcg_at_k(const RankedList& ranked, const QrelSet& qrels, std::size_t k);
double mrr_at_k(const RankedList& ranked, const QrelSet& qrels, std::size_t k);
double recall_at_k(const RankedList& ranked, const QrelSet& qrels, std::size_t k);

struct MetricCutoffs {
  std::size_t ndcg = 10;
  std::size_t mrr = 100;
  std::size_t recall = 100;
};

struct QueryScores {
  std::string query_id;
  double ndcg = 0.0;
  double mrr = 0.0;
  double recall = 0.0;
};

struct EvalReport {
  MetricCutoffs cutoffs;
  std::vector<QueryScores> per_query;  // run order
  std::vector<std::string> skipped;    // no relevant judgments
  // Unweighted means over per_query; zero when nothing was evaluated.
  double ndcg = 0.0;
  double mrr = 0.0;
  double recall = 0.0;
};

EvalReport evaluate_run(std::span<const RankedList> runs, const QrelSet& qrels,
                        const MetricCutoffs& cutoffs = {});

void write_report_table(std::ostream& out, const EvalReport& report);
/// One JSON object per evaluated query, then one summary object.
void write_report_jsonl(std::ostream& out, const EvalReport& report);

/// Six-column TREC run format: "qid Q0 docid rank score tag", rank from 1,
/// score printed with six decimals.
void write_trec_run(std::ostream& out, std::span<const RankedList> runs, const std::string& tag);
std::vector<RankedList> read_trec_run(const std::filesystem::path& path);

}  // namespace qfuse
