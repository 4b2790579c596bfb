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

#include <cstddef>
#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "qfuse/datamodel.hpp"

namespace qfuse {

/// Rule-based sentence splitter settings. Abbreviations are stored lowercase
/// without the trailing period ("dr", "z.b").
class SegmenterConfig {
 public:
  SegmenterConfig() = default;
  SegmenterConfig(std::set<std::string> abbreviations, std::size_t min_sentence_chars = 2);

  /// English and German abbreviations shipped with the library.
  static SegmenterConfig defaults();
  /// One entry per line; blank lines and lines starting with '#' are skipped.
  static SegmenterConfig from_file(const std::filesystem::path& path,
                                   std::size_t min_sentence_chars = 2);

  const std::set<std::string>& abbreviations() const noexcept { return abbreviations_; }
  std::size_t min_sentence_chars() const noexcept { return min_sentence_chars_; }
  bool is_abbreviation(std::string_view lowered) const;

 private:
  std::set<std::string> abbreviations_;
  std::size_t min_sentence_chars_ = 2;
};

/// Splits `text` at '.', '!' or '?' runs followed by whitespace or end of
/// text, except after a listed abbreviation. Fragments shorter than
/// min_sentence_chars (in code points) are merged into the previous
/// sentence. Each output is a trimmed slice of the input.
std::vector<std::string> segment_sentences(std::string_view text, const SegmenterConfig& config);

/// Number of non-empty comma-separated segments.
std::size_t count_keywords(std::string_view text);

enum class HalfRule {
  kReal,   // k < n / 2.0
  kFloor,  // k < floor(n / 2)
};

struct FilterConfig {
  HalfRule half_rule = HalfRule::kReal;
};

/// Questions must end with '?'; keyword lists must have fewer keywords than
/// half the passage's sentence count.
bool filter_synthetic(const SyntheticQuery& query, std::size_t passage_sentence_count,
                      const FilterConfig& config = {});

/// filter_synthetic with the verdict written into passed_filter.
SyntheticQuery apply_filter(const SyntheticQuery& query, std::size_t passage_sentence_count,
                            const FilterConfig& config = {});

std::size_t utf8_length(std::string_view text);
std::string_view trim(std::string_view text);

}  // namespace qfuse
