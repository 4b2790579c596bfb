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

#include <cmath>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "qfuse/parallel.hpp"
#include "qfuse/provider.hpp"

namespace qfuse {

namespace {

using nlohmann::json;

// POSTs `body` to `path`, retrying transport failures and 5xx answers with
// exponential backoff. Both endpoints are idempotent, so a retry can only
// repeat work, never duplicate an effect.
json post_json(const HttpProviderOptions& options, const std::string& path, const json& body) {
  auto delay = options.initial_backoff;
  std::string last_error = "no attempt made";
  for (std::size_t attempt = 0; attempt < options.max_attempts; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(delay);
      delay *= 2;
    }
    // httplib::Client is not safe to share, so each call gets its own.
    httplib::Client client(options.endpoint);
    client.set_connection_timeout(options.timeout);
    client.set_read_timeout(options.timeout);
    client.set_write_timeout(options.timeout);
    auto res = client.Post(path, body.dump(), "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      fail(ErrorCode::kBadResponse, path + " answered HTTP " + std::to_string(res->status) +
                                        ": " + res->body);
    }
    try {
      return json::parse(res->body);
    } catch (const json::parse_error& e) {
      fail(ErrorCode::kBadResponse, path + " returned invalid JSON: " + e.what());
    }
  }
  fail(ErrorCode::kBackendUnavailable, "sidecar at " + options.endpoint + path + " unavailable after " +
                                           std::to_string(options.max_attempts) +
                                           " attempts (" + last_error + ")");
}

}  // namespace

HttpProvider::HttpProvider(HttpProviderOptions options) : options_(std::move(options)) {
  if (options_.batch_size == 0 || options_.max_in_flight == 0 || options_.max_attempts == 0) {
    fail(ErrorCode::kInvalidArgument, "http provider: batch size, concurrency and attempts must be positive");
  }
}

std::vector<EmbeddingVector> HttpProvider::embed_chunk(std::span<const std::string> texts) {
  json body;
  body["texts"] = std::vector<std::string>(texts.begin(), texts.end());
  const json res = post_json(options_, "/v1/embed", body);
  if (!res.is_object() || !res.contains("dim") || !res.contains("vectors") ||
      !res["dim"].is_number_unsigned() || !res["vectors"].is_array()) {
    fail(ErrorCode::kBadResponse, "/v1/embed: expected {dim, vectors}");
  }
  const auto dim = res["dim"].get<std::size_t>();
  const auto& vectors = res["vectors"];
  if (vectors.size() != texts.size()) {
    fail(ErrorCode::kBadResponse, "/v1/embed: sent " + std::to_string(texts.size()) +
                                      " texts, received " + std::to_string(vectors.size()) +
                                      " vectors");
  }
  std::vector<EmbeddingVector> out;
  out.reserve(vectors.size());
  for (const auto& v : vectors) {
    if (!v.is_array() || v.size() != dim) {
      fail(ErrorCode::kBadResponse, "/v1/embed: vector length differs from dim");
    }
    std::vector<float> values;
    values.reserve(dim);
    for (const auto& x : v) {
      if (!x.is_number()) fail(ErrorCode::kBadResponse, "/v1/embed: non-numeric component");
      values.push_back(x.get<float>());
    }
    try {
      out.emplace_back(std::move(values));
    } catch (const Error& e) {
      fail(ErrorCode::kBadResponse, std::string("/v1/embed: ") + e.what());
    }
  }
  return out;
}

std::vector<EmbeddingVector> HttpProvider::embed_batch(std::span<const std::string> texts) {
  if (texts.empty()) fail(ErrorCode::kInvalidArgument, "embed_batch: no texts");
  for (const auto& t : texts) {
    if (t.empty()) fail(ErrorCode::kInvalidArgument, "embed_batch: empty text");
  }
  const std::size_t batches = (texts.size() + options_.batch_size - 1) / options_.batch_size;
  std::vector<std::vector<EmbeddingVector>> parts(batches);
  parallel_for(batches, options_.max_in_flight, [&](std::size_t begin, std::size_t end) {
    for (std::size_t b = begin; b < end; ++b) {
      const std::size_t first = b * options_.batch_size;
      const std::size_t count = std::min(options_.batch_size, texts.size() - first);
      parts[b] = embed_chunk(texts.subspan(first, count));
    }
  });

  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (auto& part : parts) {
    for (auto& v : part) {
      if (!out.empty() && v.dim() != out.front().dim()) {
        fail(ErrorCode::kBadResponse, "/v1/embed: dim changed between batches");
      }
      out.push_back(std::move(v));
    }
  }
  return out;
}

std::vector<GenerationResult> HttpProvider::generate(const GenerationRequest& request) {
  json body;
  body["instruction"] = request.instruction();
  body["passage"] = request.passage_text();
  body["num_sequences"] = request.num_sequences();
  body["max_new_tokens"] = request.max_new_tokens();
  body["strategy"] = options_.decoding;
  const json res = post_json(options_, "/v1/generate", body);
  if (!res.is_array()) fail(ErrorCode::kBadResponse, "/v1/generate: expected an array");
  if (res.size() > request.num_sequences()) {
    fail(ErrorCode::kBadResponse, "/v1/generate: more sequences than requested");
  }
  std::vector<GenerationResult> out;
  out.reserve(res.size());
  for (const auto& item : res) {
    if (!item.is_object() || !item.contains("text") || !item["text"].is_string() ||
        !item.contains("gen_prob") || !item["gen_prob"].is_number()) {
      fail(ErrorCode::kBadResponse, "/v1/generate: expected {text, gen_prob}");
    }
    std::optional<double> f1;
    if (item.contains("bertscore_f1") && item["bertscore_f1"].is_number()) {
      f1 = item["bertscore_f1"].get<double>();
    }
    out.emplace_back(item["text"].get<std::string>(), item["gen_prob"].get<double>(), f1);
  }
  return out;
}

std::string HttpProvider::describe() const {
  return "http(" + options_.endpoint + ",decoding=" + options_.decoding + ")";
}

}  // namespace qfuse
