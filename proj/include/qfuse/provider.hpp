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

// Embedding and generation backends. Two implementations ship:
//
//  - HashProvider: deterministic, dependency-free. Embeddings are seeded
//    pseudo-random unit vectors keyed by the text; generation echoes a
//    synthetic-query fixture. Used by tests and offline runs.
//  - HttpProvider: JSON client for the model sidecar (/v1/embed,
//    /v1/generate, /healthz).
//
// Provider handles may be shared across threads.

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qfuse/datamodel.hpp"
#include "qfuse/ingest.hpp"

namespace qfuse {

struct InstructionTemplate {
  QueryKind kind;
  std::string text;
};

class InstructionSet {
 public:
  explicit InstructionSet(std::vector<InstructionTemplate> templates);

  /// "Read the passage and summarize keywords." and
  /// "Read the passage and generate a question."
  static InstructionSet defaults();

  const std::vector<InstructionTemplate>& templates() const noexcept { return templates_; }
  std::optional<QueryKind> kind_of(std::string_view instruction) const;

 private:
  std::vector<InstructionTemplate> templates_;
};

class GenerationRequest {
 public:
  /// `instruction` must be one of `allowed` unless `allow_override`.
  /// `passage_id` is a routing hint for fixture-backed providers.
  GenerationRequest(std::string instruction, std::string passage_text, std::size_t num_sequences,
                    std::size_t max_new_tokens, const InstructionSet& allowed,
                    bool allow_override = false, std::string passage_id = {});

  const std::string& instruction() const noexcept { return instruction_; }
  const std::string& passage_text() const noexcept { return passage_text_; }
  std::size_t num_sequences() const noexcept { return num_sequences_; }
  std::size_t max_new_tokens() const noexcept { return max_new_tokens_; }
  const std::string& passage_id() const noexcept { return passage_id_; }

 private:
  std::string instruction_;
  std::string passage_text_;
  std::size_t num_sequences_;
  std::size_t max_new_tokens_;
  std::string passage_id_;
};

class GenerationResult {
 public:
  /// gen_prob is the length-normalized sequence probability,
  /// exp(mean token log-probability); it must lie in (0, 1].
  GenerationResult(std::string text, double gen_prob,
                   std::optional<double> bertscore_f1 = std::nullopt);

  const std::string& text() const noexcept { return text_; }
  double gen_prob() const noexcept { return gen_prob_; }
  const std::optional<double>& bertscore_f1() const noexcept { return bertscore_f1_; }

 private:
  std::string text_;
  double gen_prob_;
  std::optional<double> bertscore_f1_;
};

class Provider {
 public:
  virtual ~Provider() = default;

  /// One vector per text, in input order, uniform dim.
  virtual std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) = 0;
  /// At most request.num_sequences() results.
  virtual std::vector<GenerationResult> generate(const GenerationRequest& request) = 0;
  /// Short identity string recorded in run manifests.
  virtual std::string describe() const = 0;
};

class HashProvider final : public Provider {
 public:
  HashProvider(std::size_t dim, std::uint64_t seed,
               std::optional<SyntheticSet> fixture = std::nullopt,
               InstructionSet instructions = InstructionSet::defaults());

  /// The vector embed_batch returns for `text`.
  static EmbeddingVector hash_embedding(std::string_view text, std::size_t dim,
                                        std::uint64_t seed);

  std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) override;
  /// Echoes the fixture entries of the request's passage whose kind matches
  /// the instruction. Without a fixture this raises BackendUnavailable.
  std::vector<GenerationResult> generate(const GenerationRequest& request) override;
  std::string describe() const override;

 private:
  std::size_t dim_;
  std::uint64_t seed_;
  std::optional<SyntheticSet> fixture_;
  InstructionSet instructions_;
};

struct HttpProviderOptions {
  std::string endpoint = "http://127.0.0.1:8080";
  std::size_t batch_size = 32;
  std::size_t max_in_flight = 4;
  std::size_t max_attempts = 4;
  std::chrono::milliseconds initial_backoff{100};
  std::chrono::seconds timeout{120};
  std::string decoding = "greedy";
};

class HttpProvider final : public Provider {
 public:
  explicit HttpProvider(HttpProviderOptions options);

  std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) override;
  std::vector<GenerationResult> generate(const GenerationRequest& request) override;
  std::string describe() const override;

  const HttpProviderOptions& options() const noexcept { return options_; }

 private:
  std::vector<EmbeddingVector> embed_chunk(std::span<const std::string> texts);

  HttpProviderOptions options_;
};

}  // namespace qfuse
