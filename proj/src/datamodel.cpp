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

#include "qfuse/datamodel.hpp"

#include <cctype>
#include <cmath>
#include <set>
#include <utility>

namespace qfuse {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) fail(ErrorCode::kInvariantViolation, what);
}

std::string strip_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    if (!std::isspace(static_cast<unsigned char>(c))) out.push_back(c);
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// EmbeddingVector

EmbeddingVector::EmbeddingVector(std::vector<float> values) : values_(std::move(values)) {
  require(!values_.empty(), "embedding: dim must be positive");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    require(std::isfinite(values_[i]),
            "embedding: non-finite entry at index " + std::to_string(i));
  }
}

double EmbeddingVector::norm() const {
  double sum = 0.0;
  for (float v : values_) sum += static_cast<double>(v) * v;
  return std::sqrt(sum);
}

// ---------------------------------------------------------------------------
// SentenceUnit

SentenceUnit::SentenceUnit(std::string parent_id, std::size_t ordinal, std::string text,
                           std::optional<EmbeddingVector> embedding,
                           std::optional<EmbeddingVector> fused)
    : parent_id_(std::move(parent_id)),
      ordinal_(ordinal),
      text_(std::move(text)),
      embedding_(std::move(embedding)),
      fused_(std::move(fused)) {
  require(!parent_id_.empty(), "sentence: parent_id is empty");
  require(!fused_ || embedding_, "sentence: fused set without embedding");
}

SentenceUnit SentenceUnit::with_embedding(EmbeddingVector embedding) const {
  return SentenceUnit(parent_id_, ordinal_, text_, std::move(embedding), std::nullopt);
}

SentenceUnit SentenceUnit::with_fused(EmbeddingVector fused) const {
  return SentenceUnit(parent_id_, ordinal_, text_, embedding_, std::move(fused));
}

// ---------------------------------------------------------------------------
// SyntheticQuery

std::string_view query_kind_name(QueryKind kind) {
  return kind == QueryKind::kQuestion ? "question" : "keywords";
}

QueryKind parse_query_kind(std::string_view name) {
  if (name == "question") return QueryKind::kQuestion;
  if (name == "keywords") return QueryKind::kKeywords;
  fail(ErrorCode::kInvalidArgument, "unknown query kind '" + std::string(name) + "'");
}

SyntheticQuery::SyntheticQuery(QueryKind kind, std::string text, double gen_prob,
                               bool passed_filter, std::optional<double> bertscore_f1,
                               std::optional<EmbeddingVector> embedding)
    : kind_(kind),
      text_(std::move(text)),
      gen_prob_(gen_prob),
      passed_filter_(passed_filter),
      bertscore_f1_(bertscore_f1),
      embedding_(std::move(embedding)) {
  require(std::isfinite(gen_prob_) && gen_prob_ > 0.0 && gen_prob_ <= 1.0,
          "synthetic query: gen_prob must lie in (0, 1]");
  if (bertscore_f1_) {
    require(std::isfinite(*bertscore_f1_) && *bertscore_f1_ >= 0.0 && *bertscore_f1_ <= 1.0,
            "synthetic query: bertscore_f1 must lie in [0, 1]");
  }
}

SyntheticQuery SyntheticQuery::with_filter_verdict(bool passed) const {
  SyntheticQuery copy = *this;
  copy.passed_filter_ = passed;
  return copy;
}

SyntheticQuery SyntheticQuery::with_embedding(EmbeddingVector embedding) const {
  SyntheticQuery copy = *this;
  copy.embedding_ = std::move(embedding);
  return copy;
}

SyntheticQuery SyntheticQuery::with_bertscore(double f1) const {
  return SyntheticQuery(kind_, text_, gen_prob_, passed_filter_, f1, embedding_);
}

// ---------------------------------------------------------------------------
// PassageRecord

std::string compose_passage_text(std::string_view title, std::string_view text) {
  if (title.empty()) return std::string(text);
  const char last = title.back();
  const bool terminated = last == '.' || last == '!' || last == '?';
  std::string out(title);
  out += terminated ? " " : ". ";
  out += text;
  return out;
}

PassageRecord::PassageRecord(std::string passage_id, std::string title, std::string text)
    : passage_id_(std::move(passage_id)), title_(std::move(title)), text_(std::move(text)) {
  require(!passage_id_.empty(), "passage: passage_id is empty");
}

std::string PassageRecord::full_text() const { return compose_passage_text(title_, text_); }

PassageRecord PassageRecord::with_sentences(std::vector<SentenceUnit> sentences) const {
  std::string joined;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    require(sentences[i].parent_id() == passage_id_,
            "passage " + passage_id_ + ": sentence parent mismatch");
    require(sentences[i].ordinal() == i,
            "passage " + passage_id_ + ": sentence ordinals must run 0..n-1");
    joined += sentences[i].text();
  }
  if (!sentences.empty()) {
    require(strip_whitespace(joined) == strip_whitespace(full_text()),
            "passage " + passage_id_ + ": sentences do not cover the passage text");
  }
  PassageRecord copy = *this;
  copy.sentences_ = std::move(sentences);
  return copy;
}

PassageRecord PassageRecord::with_synthetic_queries(std::vector<SyntheticQuery> queries) const {
  PassageRecord copy = *this;
  copy.synthetic_queries_ = std::move(queries);
  return copy;
}

PassageRecord PassageRecord::with_embedding(EmbeddingVector embedding) const {
  PassageRecord copy = *this;
  copy.embedding_ = std::move(embedding);
  copy.fused_.reset();
  return copy;
}

PassageRecord PassageRecord::with_fused(EmbeddingVector fused) const {
  require(embedding_.has_value(), "passage " + passage_id_ + ": fused set without embedding");
  PassageRecord copy = *this;
  copy.fused_ = std::move(fused);
  return copy;
}

// ---------------------------------------------------------------------------
// QueryRecord

QueryRecord::QueryRecord(std::string query_id, std::string text,
                         std::optional<EmbeddingVector> embedding)
    : query_id_(std::move(query_id)), text_(std::move(text)), embedding_(std::move(embedding)) {
  require(!query_id_.empty(), "query: query_id is empty");
}

QueryRecord QueryRecord::with_embedding(EmbeddingVector embedding) const {
  return QueryRecord(query_id_, text_, std::move(embedding));
}

// ---------------------------------------------------------------------------
// QrelSet

void QrelSet::add(const std::string& query_id, const std::string& passage_id, int grade) {
  require(!query_id.empty() && !passage_id.empty(), "qrels: empty id");
  require(grade >= 0, "qrels: negative grade for (" + query_id + ", " + passage_id + ")");
  auto [it, inserted] = by_query_[query_id].emplace(passage_id, grade);
  if (!inserted) {
    fail(ErrorCode::kDuplicateId,
         "qrels: repeated judgment for (" + query_id + ", " + passage_id + ")");
  }
  ++size_;
}

int QrelSet::grade(const std::string& query_id, const std::string& passage_id) const {
  const Judgments* j = judgments(query_id);
  if (j == nullptr) return 0;
  auto it = j->find(passage_id);
  return it == j->end() ? 0 : it->second;
}

const QrelSet::Judgments* QrelSet::judgments(const std::string& query_id) const {
  auto it = by_query_.find(query_id);
  return it == by_query_.end() ? nullptr : &it->second;
}

std::size_t QrelSet::relevant_count(const std::string& query_id) const {
  const Judgments* j = judgments(query_id);
  if (j == nullptr) return 0;
  std::size_t n = 0;
  for (const auto& [_, g] : *j) n += g >= 1 ? 1 : 0;
  return n;
}

std::vector<std::string> QrelSet::query_ids() const {
  std::vector<std::string> ids;
  ids.reserve(by_query_.size());
  for (const auto& [q, _] : by_query_) ids.push_back(q);
  return ids;
}

// ---------------------------------------------------------------------------
// RankedList

RankedList::RankedList(std::string query_id, std::vector<Hit> hits)
    : query_id_(std::move(query_id)), hits_(std::move(hits)) {
  require(!query_id_.empty(), "ranked list: query_id is empty");
  std::set<std::string_view> seen;
  for (std::size_t i = 0; i < hits_.size(); ++i) {
    require(std::isfinite(hits_[i].score), "ranked list " + query_id_ + ": non-finite score");
    require(i == 0 || hits_[i].score <= hits_[i - 1].score,
            "ranked list " + query_id_ + ": scores must be non-increasing");
    require(seen.insert(hits_[i].passage_id).second,
            "ranked list " + query_id_ + ": duplicate passage " + hits_[i].passage_id);
  }
}

// ---------------------------------------------------------------------------
// FusionSpec

std::string_view fusion_strategy_name(FusionStrategy strategy) {
  switch (strategy) {
    case FusionStrategy::kCorpusOnly: return "corpus_only";
    case FusionStrategy::kEqual: return "equal";
    case FusionStrategy::kManual: return "manual";
    case FusionStrategy::kGenProb: return "gen_prob";
    case FusionStrategy::kBertScore: return "bertscore";
    case FusionStrategy::kBertScoreSoftmax: return "bertscore_softmax";
  }
  return "unknown";
}

FusionStrategy parse_fusion_strategy(std::string_view name) {
  for (auto s : {FusionStrategy::kCorpusOnly, FusionStrategy::kEqual, FusionStrategy::kManual,
                 FusionStrategy::kGenProb, FusionStrategy::kBertScore,
                 FusionStrategy::kBertScoreSoftmax}) {
    if (fusion_strategy_name(s) == name) return s;
  }
  fail(ErrorCode::kInvalidArgument, "unknown fusion strategy '" + std::string(name) + "'");
}

FusionSpec::FusionSpec(FusionStrategy strategy, double w0) : strategy_(strategy), w0_(w0) {
  if (!(std::isfinite(w0_) && w0_ >= 0.0 && w0_ <= 1.0)) {
    fail(ErrorCode::kInvalidArgument, "fusion: w0 must lie in [0, 1]");
  }
}

}  // namespace qfuse
