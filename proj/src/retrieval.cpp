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

#include "qfuse/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>

#include "binary_io.hpp"
#include "qfuse/parallel.hpp"

namespace qfuse {

namespace {

constexpr char kIndexMagic[8] = {'Q', 'F', 'U', 'S', 'E', 'I', 'D', 'X'};
constexpr std::uint32_t kIndexVersion = 1;
constexpr double kNormTolerance = 1e-6;
constexpr std::size_t kLoadNormSamples = 64;

double row_norm(std::span<const float> row) {
  double s = 0.0;
  for (float v : row) s += static_cast<double>(v) * v;
  return std::sqrt(s);
}

void append_normalized(std::vector<float>& rows, const EmbeddingVector& v, const RowMeta& meta) {
  const double n = v.norm();
  if (n == 0.0) {
    fail(ErrorCode::kZeroVector, "passage " + meta.passage_id +
                                     (meta.ordinal == kPassageLevel
                                          ? std::string()
                                          : " sentence " + std::to_string(meta.ordinal)) +
                                     " has a zero fused vector");
  }
  for (float x : v.values()) rows.push_back(static_cast<float>(x / n));
}

std::vector<double> normalized_query(const VectorIndex& index, const EmbeddingVector& query) {
  if (query.dim() != index.dim()) {
    fail(ErrorCode::kDimensionMismatch, "query dim " + std::to_string(query.dim()) +
                                            " vs index dim " + std::to_string(index.dim()));
  }
  const double n = query.norm();
  if (n == 0.0) fail(ErrorCode::kZeroVector, "query vector is zero");
  std::vector<double> q(query.dim());
  for (std::size_t d = 0; d < q.size(); ++d) q[d] = query[d] / n;
  return q;
}

}  // namespace

VectorIndex::VectorIndex(std::size_t dim, std::vector<float> rows, std::vector<RowMeta> meta)
    : dim_(dim), rows_(std::move(rows)), meta_(std::move(meta)) {
  if (dim_ == 0) fail(ErrorCode::kInvalidArgument, "index: dim must be positive");
  if (rows_.size() != meta_.size() * dim_) {
    fail(ErrorCode::kInvariantViolation, "index: row data does not match row_meta length");
  }
  std::map<std::string, std::uint32_t> ids;
  for (std::size_t i = 0; i < meta_.size(); ++i) {
    if (meta_[i].passage_id.empty()) {
      fail(ErrorCode::kInvariantViolation, "index: empty passage id in row meta");
    }
    const double n = row_norm(row(i));
    if (std::abs(n - 1.0) > kNormTolerance) {
      fail(ErrorCode::kInvariantViolation, "index: row " + std::to_string(i) + " has norm " +
                                               std::to_string(n));
    }
    ids.emplace(meta_[i].passage_id, 0);
  }
  passage_ids_.reserve(ids.size());
  for (auto& [id, pos] : ids) {
    pos = static_cast<std::uint32_t>(passage_ids_.size());
    passage_ids_.push_back(id);
  }
  row_passage_.reserve(meta_.size());
  for (const auto& m : meta_) row_passage_.push_back(ids.at(m.passage_id));
}

void VectorIndex::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIoError, "cannot write index " + path.string());
  out.write(kIndexMagic, sizeof(kIndexMagic));
  detail::put(out, kIndexVersion);
  detail::put(out, static_cast<std::uint32_t>(dim_));
  detail::put(out, static_cast<std::uint64_t>(meta_.size()));
  for (float f : rows_) detail::put_f32(out, f);
  for (const auto& m : meta_) {
    detail::put_string(out, m.passage_id);
    detail::put(out, m.ordinal);
  }
  if (!out) fail(ErrorCode::kIoError, "failed writing index " + path.string());
}

VectorIndex VectorIndex::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kMissingArtifact, "index file not found: " + path.string());
  detail::Reader r(in, "index " + path.string());

  char magic[sizeof(kIndexMagic)];
  r.read(magic, sizeof(magic));
  if (!std::equal(std::begin(magic), std::end(magic), std::begin(kIndexMagic))) {
    r.corrupt("bad magic");
  }
  if (r.get<std::uint32_t>() != kIndexVersion) r.corrupt("unsupported version");
  const auto dim = r.get<std::uint32_t>();
  const auto count = r.get<std::uint64_t>();
  if (dim == 0) r.corrupt("dim is zero");
  if (count > (std::uint64_t{1} << 40) / dim) r.corrupt("row count out of range");

  std::vector<float> rows(static_cast<std::size_t>(count) * dim);
  for (float& f : rows) f = r.get_f32();
  std::vector<RowMeta> meta(static_cast<std::size_t>(count));
  for (auto& m : meta) {
    m.passage_id = r.get_string();
    m.ordinal = r.get<std::int32_t>();
  }
  if (!r.at_end()) r.corrupt("trailing bytes");

  // Sample rows evenly before handing off to the constructor, which then
  // checks every row.
  const std::size_t n = meta.size();
  const std::size_t samples = std::min(n, kLoadNormSamples);
  for (std::size_t s = 0; s < samples; ++s) {
    const std::size_t i = s * n / samples;
    const double norm = row_norm(std::span<const float>(rows).subspan(i * dim, dim));
    if (std::abs(norm - 1.0) > kNormTolerance) r.corrupt("row " + std::to_string(i) + " not unit norm");
  }
  return VectorIndex(dim, std::move(rows), std::move(meta));
}

VectorIndex build_index(std::span<const PassageRecord> passages, bool sentence_level) {
  std::vector<float> rows;
  std::vector<RowMeta> meta;
  std::size_t dim = 0;
  auto check_dim = [&](const EmbeddingVector& v, const std::string& id) {
    if (dim == 0) {
      dim = v.dim();
    } else if (v.dim() != dim) {
      fail(ErrorCode::kDimensionMismatch, "passage " + id + " has dim " +
                                              std::to_string(v.dim()) + ", expected " +
                                              std::to_string(dim));
    }
  };

  for (const auto& p : passages) {
    if (!sentence_level) {
      if (!p.fused()) fail(ErrorCode::kMissingFused, "passage " + p.passage_id() + " has no fused vector");
      check_dim(*p.fused(), p.passage_id());
      meta.push_back({p.passage_id(), kPassageLevel});
      append_normalized(rows, *p.fused(), meta.back());
      continue;
    }
    if (p.sentences().empty()) {
      fail(ErrorCode::kMissingFused, "passage " + p.passage_id() + " has no sentences");
    }
    for (const auto& s : p.sentences()) {
      if (!s.fused()) {
        fail(ErrorCode::kMissingFused, "passage " + p.passage_id() + " sentence " +
                                           std::to_string(s.ordinal()) + " has no fused vector");
      }
      check_dim(*s.fused(), p.passage_id());
      meta.push_back({p.passage_id(), static_cast<std::int32_t>(s.ordinal())});
      append_normalized(rows, *s.fused(), meta.back());
    }
  }
  if (meta.empty()) fail(ErrorCode::kEmptyInput, "build_index: no passages");
  return VectorIndex(dim, std::move(rows), std::move(meta));
}

double cosine(const EmbeddingVector& u, const EmbeddingVector& v) {
  if (u.dim() != v.dim()) {
    fail(ErrorCode::kDimensionMismatch,
         "cosine: dims " + std::to_string(u.dim()) + " and " + std::to_string(v.dim()));
  }
  double dot = 0.0;
  double uu = 0.0;
  double vv = 0.0;
  for (std::size_t d = 0; d < u.dim(); ++d) {
    dot += static_cast<double>(u[d]) * v[d];
    uu += static_cast<double>(u[d]) * u[d];
    vv += static_cast<double>(v[d]) * v[d];
  }
  if (uu == 0.0 || vv == 0.0) fail(ErrorCode::kZeroVector, "cosine: zero vector");
  return std::clamp(dot / (std::sqrt(uu) * std::sqrt(vv)), -1.0, 1.0);
}

RankedList search(const VectorIndex& index, const std::string& query_id,
                  const EmbeddingVector& query, std::size_t k, std::size_t threads) {
  if (k == 0) fail(ErrorCode::kInvalidArgument, "search: k must be positive");
  const std::vector<double> q = normalized_query(index, query);
  const std::size_t dim = index.dim();
  const std::size_t rows = index.row_count();
  const float* data = index.data().data();

  std::vector<double> scores(rows);
  parallel_for(rows, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const float* r = data + i * dim;
      double dot = 0.0;
      for (std::size_t d = 0; d < dim; ++d) dot += static_cast<double>(r[d]) * q[d];
      scores[i] = dot;
    }
  });

  const std::size_t passages = index.passage_ids().size();
  std::vector<double> best(passages, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < rows; ++i) {
    double& b = best[index.row_passage(i)];
    b = std::max(b, scores[i]);
  }

  std::vector<std::uint32_t> order(passages);
  for (std::uint32_t p = 0; p < passages; ++p) order[p] = p;
  const std::size_t top = std::min(k, passages);
  // passage_ids() is sorted, so a smaller position is a smaller id.
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(top), order.end(),
                    [&](std::uint32_t a, std::uint32_t b) {
                      if (best[a] != best[b]) return best[a] > best[b];
                      return a < b;
                    });

  std::vector<Hit> hits;
  hits.reserve(top);
  for (std::size_t r = 0; r < top; ++r) {
    hits.push_back({index.passage_ids()[order[r]], best[order[r]]});
  }
  return RankedList(query_id, std::move(hits));
}

std::vector<RankedList> batch_search(const VectorIndex& index,
                                     std::span<const QueryRecord> queries, std::size_t k,
                                     std::size_t threads) {
  for (const auto& q : queries) {
    if (!q.embedding()) {
      fail(ErrorCode::kMissingEmbedding, "query " + q.query_id() + " has no embedding");
    }
  }
  std::vector<std::optional<RankedList>> slots(queries.size());
  parallel_for(queries.size(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      slots[i] = search(index, queries[i].query_id(), *queries[i].embedding(), k, 1);
    }
  });
  std::vector<RankedList> out;
  out.reserve(slots.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

}  // namespace qfuse
