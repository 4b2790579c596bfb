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

// Core value types shared by every stage of the pipeline. All of them check
// their invariants on construction and are immutable afterwards; "with_"
// members return modified copies.

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qfuse/error.hpp"

namespace qfuse {

class EmbeddingVector {
 public:
  /// Rejects empty input and non-finite entries.
  explicit EmbeddingVector(std::vector<float> values);

  std::size_t dim() const noexcept { return values_.size(); }
  std::span<const float> values() const noexcept { return values_; }
  float operator[](std::size_t i) const { return values_[i]; }

  double norm() const;

  friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;

 private:
  std::vector<float> values_;
};

class SentenceUnit {
 public:
  SentenceUnit(std::string parent_id, std::size_t ordinal, std::string text,
               std::optional<EmbeddingVector> embedding = std::nullopt,
               std::optional<EmbeddingVector> fused = std::nullopt);

  const std::string& parent_id() const noexcept { return parent_id_; }
  std::size_t ordinal() const noexcept { return ordinal_; }
  const std::string& text() const noexcept { return text_; }
  const std::optional<EmbeddingVector>& embedding() const noexcept { return embedding_; }
  const std::optional<EmbeddingVector>& fused() const noexcept { return fused_; }

  SentenceUnit with_embedding(EmbeddingVector embedding) const;
  SentenceUnit with_fused(EmbeddingVector fused) const;

  friend bool operator==(const SentenceUnit&, const SentenceUnit&) = default;

 private:
  std::string parent_id_;
  std::size_t ordinal_;
  std::string text_;
  std::optional<EmbeddingVector> embedding_;
  std::optional<EmbeddingVector> fused_;
};

enum class QueryKind { kQuestion, kKeywords };

std::string_view query_kind_name(QueryKind kind);
QueryKind parse_query_kind(std::string_view name);

class SyntheticQuery {
 public:
  SyntheticQuery(QueryKind kind, std::string text, double gen_prob,
                 bool passed_filter = false,
                 std::optional<double> bertscore_f1 = std::nullopt,
                 std::optional<EmbeddingVector> embedding = std::nullopt);

  QueryKind kind() const noexcept { return kind_; }
  const std::string& text() const noexcept { return text_; }
  double gen_prob() const noexcept { return gen_prob_; }
  bool passed_filter() const noexcept { return passed_filter_; }
  const std::optional<double>& bertscore_f1() const noexcept { return bertscore_f1_; }
  const std::optional<EmbeddingVector>& embedding() const noexcept { return embedding_; }

  SyntheticQuery with_filter_verdict(bool passed) const;
  SyntheticQuery with_embedding(EmbeddingVector embedding) const;
  SyntheticQuery with_bertscore(double f1) const;

  friend bool operator==(const SyntheticQuery&, const SyntheticQuery&) = default;

 private:
  QueryKind kind_;
  std::string text_;
  double gen_prob_;
  bool passed_filter_;
  std::optional<double> bertscore_f1_;
  std::optional<EmbeddingVector> embedding_;
};

class PassageRecord {
 public:
  PassageRecord(std::string passage_id, std::string title, std::string text);

  const std::string& passage_id() const noexcept { return passage_id_; }
  const std::string& title() const noexcept { return title_; }
  const std::string& text() const noexcept { return text_; }
  const std::vector<SentenceUnit>& sentences() const noexcept { return sentences_; }
  const std::vector<SyntheticQuery>& synthetic_queries() const noexcept {
    return synthetic_queries_;
  }
  /// Passage-level vectors, used when indexing without sentence splitting.
  const std::optional<EmbeddingVector>& embedding() const noexcept { return embedding_; }
  const std::optional<EmbeddingVector>& fused() const noexcept { return fused_; }

  /// Title and body joined the way they are segmented and embedded.
  std::string full_text() const;

  /// Ordinals must run 0..n-1, parents must match, and the sentences must
  /// cover full_text() modulo whitespace.
  PassageRecord with_sentences(std::vector<SentenceUnit> sentences) const;
  PassageRecord with_synthetic_queries(std::vector<SyntheticQuery> queries) const;
  PassageRecord with_embedding(EmbeddingVector embedding) const;
  PassageRecord with_fused(EmbeddingVector fused) const;

  friend bool operator==(const PassageRecord&, const PassageRecord&) = default;

 private:
  std::string passage_id_;
  std::string title_;
  std::string text_;
  std::vector<SentenceUnit> sentences_;
  std::vector<SyntheticQuery> synthetic_queries_;
  std::optional<EmbeddingVector> embedding_;
  std::optional<EmbeddingVector> fused_;
};

/// Joins a title and body: "title. body", or "title body" when the title
/// already ends in sentence punctuation. An empty title yields the body.
std::string compose_passage_text(std::string_view title, std::string_view text);

class QueryRecord {
 public:
  QueryRecord(std::string query_id, std::string text,
              std::optional<EmbeddingVector> embedding = std::nullopt);

  const std::string& query_id() const noexcept { return query_id_; }
  const std::string& text() const noexcept { return text_; }
  const std::optional<EmbeddingVector>& embedding() const noexcept { return embedding_; }

  QueryRecord with_embedding(EmbeddingVector embedding) const;

  friend bool operator==(const QueryRecord&, const QueryRecord&) = default;

 private:
  std::string query_id_;
  std::string text_;
  std::optional<EmbeddingVector> embedding_;
};

/// Graded judgments. Binary relevance everywhere downstream means grade >= 1.
class QrelSet {
 public:
  using Judgments = std::map<std::string, int>;

  /// Rejects negative grades and repeated (query, passage) keys.
  void add(const std::string& query_id, const std::string& passage_id, int grade);

  int grade(const std::string& query_id, const std::string& passage_id) const;
  const Judgments* judgments(const std::string& query_id) const;
  std::size_t relevant_count(const std::string& query_id) const;
  std::vector<std::string> query_ids() const;
  std::size_t size() const noexcept { return size_; }
  bool empty() const noexcept { return size_ == 0; }

  const std::map<std::string, Judgments>& by_query() const noexcept { return by_query_; }

 private:
  std::map<std::string, Judgments> by_query_;
  std::size_t size_ = 0;
};

struct Hit {
  std::string passage_id;
  double score;

  friend bool operator==(const Hit&, const Hit&) = default;
};

class RankedList {
 public:
  /// Hits must be score-descending with distinct passage ids.
  RankedList(std::string query_id, std::vector<Hit> hits);

  const std::string& query_id() const noexcept { return query_id_; }
  const std::vector<Hit>& hits() const noexcept { return hits_; }
  std::size_t size() const noexcept { return hits_.size(); }

  friend bool operator==(const RankedList&, const RankedList&) = default;

 private:
  std::string query_id_;
  std::vector<Hit> hits_;
};

enum class FusionStrategy {
  kCorpusOnly,
  kEqual,
  kManual,
  kGenProb,
  kBertScore,
  kBertScoreSoftmax,
};

std::string_view fusion_strategy_name(FusionStrategy strategy);
FusionStrategy parse_fusion_strategy(std::string_view name);

class FusionSpec {
 public:
  explicit FusionSpec(FusionStrategy strategy, double w0 = 0.6);

  FusionStrategy strategy() const noexcept { return strategy_; }
  /// Corpus weight for the manual and gen_prob strategies.
  double w0() const noexcept { return w0_; }

  friend bool operator==(const FusionSpec&, const FusionSpec&) = default;

 private:
  FusionStrategy strategy_;
  double w0_;
};

}  // namespace qfuse
