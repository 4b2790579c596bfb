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

#include "qfuse/provider.hpp"

#include <cmath>

#include "qfuse/random.hpp"

namespace qfuse {

InstructionSet::InstructionSet(std::vector<InstructionTemplate> templates)
    : templates_(std::move(templates)) {
  if (templates_.empty()) fail(ErrorCode::kInvalidArgument, "instruction set is empty");
  for (const auto& t : templates_) {
    if (t.text.empty()) fail(ErrorCode::kInvalidArgument, "instruction template is empty");
  }
}

InstructionSet InstructionSet::defaults() {
  return InstructionSet({
      {QueryKind::kKeywords, "Read the passage and summarize keywords."},
      {QueryKind::kQuestion, "Read the passage and generate a question."},
  });
}

std::optional<QueryKind> InstructionSet::kind_of(std::string_view instruction) const {
  for (const auto& t : templates_) {
    if (t.text == instruction) return t.kind;
  }
  return std::nullopt;
}

GenerationRequest::GenerationRequest(std::string instruction, std::string passage_text,
                                     std::size_t num_sequences, std::size_t max_new_tokens,
                                     const InstructionSet& allowed, bool allow_override,
                                     std::string passage_id)
    : instruction_(std::move(instruction)),
      passage_text_(std::move(passage_text)),
      num_sequences_(num_sequences),
      max_new_tokens_(max_new_tokens),
      passage_id_(std::move(passage_id)) {
  if (num_sequences_ == 0 || max_new_tokens_ == 0) {
    fail(ErrorCode::kInvalidArgument, "generation request: counts must be positive");
  }
  if (!allow_override && !allowed.kind_of(instruction_)) {
    fail(ErrorCode::kInvalidArgument,
         "generation request: instruction is not a configured template: " + instruction_);
  }
}

GenerationResult::GenerationResult(std::string text, double gen_prob,
                                   std::optional<double> bertscore_f1)
    : text_(std::move(text)), gen_prob_(gen_prob), bertscore_f1_(bertscore_f1) {
  if (!(std::isfinite(gen_prob_) && gen_prob_ > 0.0 && gen_prob_ <= 1.0)) {
    fail(ErrorCode::kBadResponse, "generation result: gen_prob outside (0, 1]");
  }
  if (bertscore_f1_ && !(*bertscore_f1_ >= 0.0 && *bertscore_f1_ <= 1.0)) {
    fail(ErrorCode::kBadResponse, "generation result: bertscore_f1 outside [0, 1]");
  }
}

// ---------------------------------------------------------------------------
// HashProvider

HashProvider::HashProvider(std::size_t dim, std::uint64_t seed,
                           std::optional<SyntheticSet> fixture, InstructionSet instructions)
    : dim_(dim), seed_(seed), fixture_(std::move(fixture)), instructions_(std::move(instructions)) {
  if (dim_ == 0) fail(ErrorCode::kInvalidArgument, "hash provider: dim must be positive");
}

EmbeddingVector HashProvider::hash_embedding(std::string_view text, std::size_t dim,
                                             std::uint64_t seed) {
  Rng rng(splitmix64(fnv1a64(text) ^ splitmix64(seed)));
  std::vector<double> raw(dim);
  double sq = 0.0;
  for (double& x : raw) {
    x = 2.0 * rng.uniform01() - 1.0;
    sq += x * x;
  }
  const double norm = std::sqrt(sq);
  std::vector<float> out(dim);
  for (std::size_t d = 0; d < dim; ++d) out[d] = static_cast<float>(raw[d] / norm);
  return EmbeddingVector(std::move(out));
}

std::vector<EmbeddingVector> HashProvider::embed_batch(std::span<const std::string> texts) {
  if (texts.empty()) fail(ErrorCode::kInvalidArgument, "embed_batch: no texts");
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) {
    if (t.empty()) fail(ErrorCode::kInvalidArgument, "embed_batch: empty text");
    out.push_back(hash_embedding(t, dim_, seed_));
  }
  return out;
}

std::vector<GenerationResult> HashProvider::generate(const GenerationRequest& request) {
  if (!fixture_) {
    fail(ErrorCode::kBackendUnavailable, "hash provider has no generation fixture");
  }
  std::vector<GenerationResult> out;
  const auto kind = instructions_.kind_of(request.instruction());
  auto it = fixture_->find(request.passage_id());
  if (!kind || it == fixture_->end()) return out;
  for (const auto& q : it->second) {
    if (out.size() == request.num_sequences()) break;
    if (q.kind() == *kind) out.emplace_back(q.text(), q.gen_prob(), q.bertscore_f1());
  }
  return out;
}

std::string HashProvider::describe() const {
  return "hash(dim=" + std::to_string(dim_) + ",seed=" + std::to_string(seed_) +
         (fixture_ ? ",fixture)" : ")");
}

}  // namespace qfuse
