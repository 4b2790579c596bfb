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

#include "qfuse/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace qfuse {

namespace {

std::vector<std::pair<std::size_t, double>> indexed(const std::vector<double>& w) {
  std::vector<std::pair<std::size_t, double>> out;
  out.reserve(w.size());
  for (std::size_t j = 0; j < w.size(); ++j) out.emplace_back(j, w[j]);
  return out;
}

std::vector<double> bertscores(std::span<const SyntheticQuery> queries) {
  std::vector<double> scores;
  scores.reserve(queries.size());
  for (std::size_t j = 0; j < queries.size(); ++j) {
    if (!queries[j].bertscore_f1()) {
      fail(ErrorCode::kMissingField,
           "bertscore_f1 missing on synthetic query " + std::to_string(j));
    }
    scores.push_back(*queries[j].bertscore_f1());
  }
  return scores;
}

}  // namespace

ResolvedWeights::ResolvedWeights(double w_corpus,
                                 std::vector<std::pair<std::size_t, double>> per_query)
    : w_corpus_(w_corpus), per_query_(std::move(per_query)) {
  if (!(w_corpus_ >= 0.0)) fail(ErrorCode::kInvariantViolation, "weights: negative corpus weight");
  for (const auto& [_, w] : per_query_) {
    if (!(w >= 0.0)) fail(ErrorCode::kInvariantViolation, "weights: negative query weight");
  }
  if (std::abs(total() - 1.0) > kWeightSumTolerance) {
    fail(ErrorCode::kInvariantViolation, "weights: sum deviates from 1");
  }
}

double ResolvedWeights::total() const {
  double sum = w_corpus_;
  for (const auto& [_, w] : per_query_) sum += w;
  return sum;
}

ResolvedWeights resolve_weights(const FusionSpec& spec, std::span<const SyntheticQuery> queries) {
  const std::size_t n = queries.size();
  if (spec.strategy() == FusionStrategy::kCorpusOnly) return ResolvedWeights(1.0, {});
  if (n == 0) {
    fail(ErrorCode::kEmptyQueries,
         std::string("strategy ") + std::string(fusion_strategy_name(spec.strategy())) +
             " needs at least one synthetic query");
  }

  switch (spec.strategy()) {
    case FusionStrategy::kEqual: {
      const double w = 1.0 / static_cast<double>(n + 1);
      return ResolvedWeights(w, indexed(std::vector<double>(n, w)));
    }
    case FusionStrategy::kManual: {
      const double w = (1.0 - spec.w0()) / static_cast<double>(n);
      return ResolvedWeights(spec.w0(), indexed(std::vector<double>(n, w)));
    }
    case FusionStrategy::kGenProb: {
      double mass = 0.0;
      for (const auto& q : queries) mass += q.gen_prob();
      std::vector<double> w(n);
      for (std::size_t j = 0; j < n; ++j) {
        w[j] = (1.0 - spec.w0()) * (queries[j].gen_prob() / mass);
      }
      return ResolvedWeights(spec.w0(), indexed(w));
    }
    case FusionStrategy::kBertScore: {
      const std::vector<double> f1 = bertscores(queries);
      double denominator = 1.0;
      for (double s : f1) denominator += s;
      std::vector<double> w(n);
      for (std::size_t j = 0; j < n; ++j) w[j] = f1[j] / denominator;
      return ResolvedWeights(1.0 / denominator, indexed(w));
    }
    case FusionStrategy::kBertScoreSoftmax: {
      const std::vector<double> f1 = bertscores(queries);
      // The corpus slot carries the pseudo-score 1.
      double top = 1.0;
      for (double s : f1) top = std::max(top, s);
      double z = std::exp(1.0 - top);
      std::vector<double> e(n);
      for (std::size_t j = 0; j < n; ++j) {
        e[j] = std::exp(f1[j] - top);
        z += e[j];
      }
      for (double& x : e) x /= z;
      return ResolvedWeights(std::exp(1.0 - top) / z, indexed(e));
    }
    case FusionStrategy::kCorpusOnly:
      break;
  }
  return ResolvedWeights(1.0, {});
}

EmbeddingVector fuse(const EmbeddingVector& corpus_embedding,
                     std::span<const SyntheticQuery> queries, const ResolvedWeights& weights) {
  const std::size_t dim = corpus_embedding.dim();
  std::vector<double> acc(dim);
  const auto c = corpus_embedding.values();
  for (std::size_t d = 0; d < dim; ++d) acc[d] = weights.w_corpus() * c[d];

  for (const auto& [index, w] : weights.per_query()) {
    if (index >= queries.size()) {
      fail(ErrorCode::kInvalidArgument, "fuse: weight refers to query " + std::to_string(index) +
                                            " of " + std::to_string(queries.size()));
    }
    const auto& e = queries[index].embedding();
    if (!e) {
      fail(ErrorCode::kMissingEmbedding,
           "fuse: synthetic query " + std::to_string(index) + " has no embedding");
    }
    if (e->dim() != dim) {
      fail(ErrorCode::kDimensionMismatch, "fuse: query dim " + std::to_string(e->dim()) +
                                              " vs corpus dim " + std::to_string(dim));
    }
    const auto v = e->values();
    for (std::size_t d = 0; d < dim; ++d) acc[d] += w * v[d];
  }

  std::vector<float> out(dim);
  for (std::size_t d = 0; d < dim; ++d) out[d] = static_cast<float>(acc[d]);
  return EmbeddingVector(std::move(out));
}

std::vector<SyntheticQuery> surviving_queries(const PassageRecord& passage) {
  std::vector<SyntheticQuery> out;
  for (const auto& q : passage.synthetic_queries()) {
    if (q.passed_filter()) out.push_back(q);
  }
  return out;
}

ResolvedWeights passage_weights(const PassageRecord& passage, const FusionSpec& spec) {
  const std::vector<SyntheticQuery> survivors = surviving_queries(passage);
  if (survivors.empty()) return ResolvedWeights(1.0, {});
  return resolve_weights(spec, survivors);
}

PassageRecord fuse_passage(const PassageRecord& passage, const FusionSpec& spec,
                           bool sentence_level) {
  const std::vector<SyntheticQuery> survivors = surviving_queries(passage);
  const ResolvedWeights weights =
      survivors.empty() ? ResolvedWeights(1.0, {}) : resolve_weights(spec, survivors);

  if (!sentence_level) {
    if (!passage.embedding()) {
      fail(ErrorCode::kMissingEmbedding, "passage " + passage.passage_id() + " has no embedding");
    }
    return passage.with_fused(fuse(*passage.embedding(), survivors, weights));
  }

  if (passage.sentences().empty()) {
    fail(ErrorCode::kMissingEmbedding, "passage " + passage.passage_id() + " has no sentences");
  }
  std::vector<SentenceUnit> fused;
  fused.reserve(passage.sentences().size());
  for (const auto& s : passage.sentences()) {
    if (!s.embedding()) {
      fail(ErrorCode::kMissingEmbedding, "sentence " + std::to_string(s.ordinal()) +
                                             " of passage " + passage.passage_id() +
                                             " has no embedding");
    }
    fused.push_back(s.with_fused(fuse(*s.embedding(), survivors, weights)));
  }
  return passage.with_sentences(std::move(fused));
}

}  // namespace qfuse
