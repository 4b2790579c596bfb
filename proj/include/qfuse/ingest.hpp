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

// Readers and writers for the BEIR layout (corpus/queries JSONL, qrels TSV)
// and for the pipeline's own artifacts. Loaders reject malformed input with
// the offending line number; nothing is repaired silently. Byte-level
// layouts are in docs/formats.md.

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "qfuse/datamodel.hpp"

namespace qfuse {

std::vector<PassageRecord> load_corpus(const std::filesystem::path& path);
void save_corpus(const std::filesystem::path& path, std::span<const PassageRecord> passages);

std::vector<QueryRecord> load_queries(const std::filesystem::path& path);
void save_queries(const std::filesystem::path& path, std::span<const QueryRecord> queries);

/// Tab- or space-separated "query-id corpus-id score"; an optional header
/// line is recognized by a non-numeric third column.
QrelSet load_qrels(const std::filesystem::path& path);
void save_qrels(const std::filesystem::path& path, const QrelSet& qrels);

/// Cross-checks judgments against loaded ids. Dangling references are
/// reported, not dropped.
std::vector<std::string> validate_qrels(const QrelSet& qrels,
                                        std::span<const PassageRecord> corpus,
                                        std::span<const QueryRecord> queries);

/// Keeps every judged passage and fills up to `target_size` with a seeded
/// sample of the rest. Sampling runs over ids sorted lexicographically, so
/// the result does not depend on input order. Output is sorted by id.
std::vector<PassageRecord> downsample_corpus(std::span<const PassageRecord> passages,
                                             const QrelSet& qrels, std::size_t target_size,
                                             std::uint64_t seed);

struct EmbeddingRecord {
  std::string id;
  std::int32_t ordinal = -1;  // sentence or synthetic query position, -1 if none
  EmbeddingVector vector;

  friend bool operator==(const EmbeddingRecord&, const EmbeddingRecord&) = default;
};

void save_embeddings(std::span<const EmbeddingRecord> records, const std::filesystem::path& path);
std::vector<EmbeddingRecord> load_embeddings(const std::filesystem::path& path);

/// Synthetic queries keyed by passage id, generation order preserved.
using SyntheticSet = std::map<std::string, std::vector<SyntheticQuery>>;

void save_synthetic(const SyntheticSet& queries, const std::filesystem::path& path);
SyntheticSet load_synthetic(const std::filesystem::path& path);

/// Segmented sentences as JSONL {passage_id, ordinal, text}.
void save_sentences(const std::filesystem::path& path, std::span<const PassageRecord> passages);
std::map<std::string, std::vector<std::string>> load_sentences(const std::filesystem::path& path);

}  // namespace qfuse
