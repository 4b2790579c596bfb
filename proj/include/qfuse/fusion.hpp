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

// Corpus representation fusion: a passage (or sentence) vector is replaced
// by a convex combination of itself and the vectors of the synthetic queries
// generated from the passage.
//
//   R = w_corpus * E(passage) + sum_j w_j * E(query_j)
//
// The strategies differ only in how the weights are chosen:
//
//   corpus_only        w_corpus = 1
//   equal              every source gets 1 / (n + 1)
//   manual             w_corpus = w0, the rest split evenly
//   gen_prob           w_corpus = w0, the rest split by normalized gen_prob
//   bertscore          [1, f1_1 .. f1_n] / (1 + sum f1)
//   bertscore_softmax  softmax([1, f1_1 .. f1_n])
//
// With two queries (a question and a keyword list) and w0 = 0.6, manual
// gives 0.6 / 0.2 / 0.2.

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "qfuse/datamodel.hpp"

namespace qfuse {

constexpr double kWeightSumTolerance = 1e-9;

class ResolvedWeights {
 public:
  /// Checks non-negativity and that all weights sum to 1 within 1e-9.
  ResolvedWeights(double w_corpus, std::vector<std::pair<std::size_t, double>> per_query);

  double w_corpus() const noexcept { return w_corpus_; }
  /// (index into the query list the weights were resolved from, weight)
  const std::vector<std::pair<std::size_t, double>>& per_query() const noexcept {
    return per_query_;
  }
  double total() const;

 private:
  double w_corpus_;
  std::vector<std::pair<std::size_t, double>> per_query_;
};

ResolvedWeights resolve_weights(const FusionSpec& spec, std::span<const SyntheticQuery> queries);

/// Weighted sum of the corpus vector and the query vectors. Accumulates in
/// double and rounds once to float.
EmbeddingVector fuse(const EmbeddingVector& corpus_embedding,
                     std::span<const SyntheticQuery> queries, const ResolvedWeights& weights);

/// Fuses one passage. Only queries with passed_filter participate; if none
/// survive, corpus_only weights are used. With sentence_level every sentence
/// is fused against the passage's queries, otherwise the passage vector is.
PassageRecord fuse_passage(const PassageRecord& passage, const FusionSpec& spec,
                           bool sentence_level);

/// The queries fuse_passage would use, in their original order.
std::vector<SyntheticQuery> surviving_queries(const PassageRecord& passage);

/// The weights fuse_passage would use, including the empty-survivor fallback.
ResolvedWeights passage_weights(const PassageRecord& passage, const FusionSpec& spec);

}  // namespace qfuse
