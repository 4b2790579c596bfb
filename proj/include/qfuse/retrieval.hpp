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

// Exact cosine retrieval over fused vectors.
//
// Rows are L2-normalized at build time, so scoring is a single dot product
// against the normalized query. With sentence-level indexing a passage owns
// several rows and its score is the maximum over them; a passage is
// retrieved as soon as any of its sentences is.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "qfuse/datamodel.hpp"

namespace qfuse {

/// Ordinal value marking a passage-level row.
constexpr std::int32_t kPassageLevel = -1;

struct RowMeta {
  std::string passage_id;
  std::int32_t ordinal = kPassageLevel;

  friend bool operator==(const RowMeta&, const RowMeta&) = default;
};

class VectorIndex {
 public:
  /// `rows` is row-major, rows.size() == meta.size() * dim. Every row must
  /// already have unit norm within 1e-6.
  VectorIndex(std::size_t dim, std::vector<float> rows, std::vector<RowMeta> meta);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t row_count() const noexcept { return meta_.size(); }
  std::span<const float> row(std::size_t i) const {
    return std::span<const float>(rows_).subspan(i * dim_, dim_);
  }
  std::span<const float> data() const noexcept { return rows_; }
  const std::vector<RowMeta>& meta() const noexcept { return meta_; }

  /// Distinct passage ids in ascending order.
  const std::vector<std::string>& passage_ids() const noexcept { return passage_ids_; }
  /// Position in passage_ids() of the passage owning row i.
  std::uint32_t row_passage(std::size_t i) const { return row_passage_[i]; }

  /// Binary layout described in docs/formats.md.
  void save(const std::filesystem::path& path) const;
  static VectorIndex load(const std::filesystem::path& path);

  friend bool operator==(const VectorIndex& a, const VectorIndex& b) {
    return a.dim_ == b.dim_ && a.rows_ == b.rows_ && a.meta_ == b.meta_;
  }

 private:
  std::size_t dim_;
  std::vector<float> rows_;
  std::vector<RowMeta> meta_;
  std::vector<std::string> passage_ids_;
  std::vector<std::uint32_t> row_passage_;
};

/// One row per passage, or one per sentence with `sentence_level`, taken
/// from the fused vectors and normalized.
VectorIndex build_index(std::span<const PassageRecord> passages, bool sentence_level);

double cosine(const EmbeddingVector& u, const EmbeddingVector& v);

/// Top-k distinct passages by max row cosine, score-descending, ties by
/// ascending passage id. `threads` shards the row scan.
RankedList search(const VectorIndex& index, const std::string& query_id,
                  const EmbeddingVector& query, std::size_t k, std::size_t threads = 1);

/// search() for every query, in input order; parallel across queries.
std::vector<RankedList> batch_search(const VectorIndex& index,
                                     std::span<const QueryRecord> queries, std::size_t k,
                                     std::size_t threads = 1);

}  // namespace qfuse
