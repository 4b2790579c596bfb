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

#include "qfuse/textproc.hpp"

#include <cctype>
#include <fstream>
#include <utility>

namespace qfuse {

namespace {

constexpr const char* kDefaultAbbreviations[] = {
    // English
    "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "vs", "etc", "e.g", "i.e", "cf",
    "al", "fig", "figs", "eq", "eqs", "vol", "approx", "inc", "ltd", "corp", "dept",
    "jan", "feb", "mar", "apr", "jun", "jul", "aug", "sep", "sept", "oct", "nov", "dec",
    "u.s", "u.k", "ph.d", "resp", "ref", "refs",
    // German
    "z.b", "bzw", "usw", "ca", "nr", "vgl", "d.h", "u.a", "evtl", "ggf", "inkl", "bspw",
    "sog", "str", "dipl", "hr", "fr", "abs", "jh", "jhd", "geb", "gest", "u.v.m", "o.g",
    "z.t", "s.o", "s.u", "mio", "mrd",
};

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

bool is_terminator(char c) { return c == '.' || c == '!' || c == '?'; }

// Length in bytes of a closing quote or bracket at `pos`, 0 if none.
std::size_t closer_length(std::string_view s, std::size_t pos) {
  const char c = s[pos];
  if (c == '"' || c == '\'' || c == ')' || c == ']') return 1;
  // U+201D, U+2019 and U+00BB in UTF-8
  if (s.substr(pos, 3) == "\xE2\x80\x9D" || s.substr(pos, 3) == "\xE2\x80\x99") return 3;
  if (s.substr(pos, 2) == "\xC2\xBB") return 2;
  return 0;
}

std::string lower_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

void check_entry(const std::string& entry) {
  if (entry.empty() || entry.back() == '.' || lower_ascii(entry) != entry) {
    fail(ErrorCode::kInvalidArgument,
         "abbreviation '" + entry + "' must be non-empty, lowercase, without trailing period");
  }
}

struct Span {
  std::size_t begin;
  std::size_t end;
};

}  // namespace

std::string_view trim(std::string_view text) {
  std::size_t b = 0;
  std::size_t e = text.size();
  while (b < e && is_space(text[b])) ++b;
  while (e > b && is_space(text[e - 1])) --e;
  return text.substr(b, e - b);
}

std::size_t utf8_length(std::string_view text) {
  std::size_t n = 0;
  for (unsigned char c : text) n += (c & 0xC0) != 0x80 ? 1 : 0;
  return n;
}

SegmenterConfig::SegmenterConfig(std::set<std::string> abbreviations,
                                 std::size_t min_sentence_chars)
    : abbreviations_(std::move(abbreviations)), min_sentence_chars_(min_sentence_chars) {
  if (min_sentence_chars_ == 0) {
    fail(ErrorCode::kInvalidArgument, "min_sentence_chars must be positive");
  }
  for (const auto& a : abbreviations_) check_entry(a);
}

SegmenterConfig SegmenterConfig::defaults() {
  return SegmenterConfig(
      std::set<std::string>(std::begin(kDefaultAbbreviations), std::end(kDefaultAbbreviations)));
}

SegmenterConfig SegmenterConfig::from_file(const std::filesystem::path& path,
                                           std::size_t min_sentence_chars) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kMissingArtifact, "cannot open abbreviation list " + path.string());
  std::set<std::string> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const std::string entry(t);
    if (entry.back() == '.' || lower_ascii(entry) != entry) {
      fail_at_line(line_no, "abbreviation '" + entry + "' must be lowercase without trailing period");
    }
    entries.insert(entry);
  }
  return SegmenterConfig(std::move(entries), min_sentence_chars);
}

bool SegmenterConfig::is_abbreviation(std::string_view lowered) const {
  return abbreviations_.find(std::string(lowered)) != abbreviations_.end();
}

std::vector<std::string> segment_sentences(std::string_view text, const SegmenterConfig& config) {
  const std::string_view s = trim(text);
  if (s.empty()) fail(ErrorCode::kEmptyInput, "segment_sentences: text is empty");

  std::vector<Span> spans;
  std::size_t start = 0;
  std::size_t i = 0;
  const std::size_t n = s.size();
  while (i < n) {
    if (!is_terminator(s[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < n && is_terminator(s[j])) ++j;
    while (j < n) {
      const std::size_t len = closer_length(s, j);
      if (len == 0) break;
      j += len;
    }
    bool boundary = j == n || is_space(s[j]);
    if (boundary && s[i] == '.') {
      std::size_t tok = i;
      while (tok > start && !is_space(s[tok - 1])) --tok;
      while (tok < i && (s[tok] == '(' || s[tok] == '[' || s[tok] == '"' || s[tok] == '\'')) ++tok;
      if (tok < i && config.is_abbreviation(lower_ascii(s.substr(tok, i - tok)))) {
        boundary = false;
      }
    }
    if (boundary) {
      spans.push_back({start, j});
      while (j < n && is_space(s[j])) ++j;
      start = j;
    }
    i = j;
  }
  if (start < n) spans.push_back({start, n});

  auto too_short = [&](const Span& sp) {
    return utf8_length(s.substr(sp.begin, sp.end - sp.begin)) < config.min_sentence_chars();
  };
  std::vector<Span> merged;
  for (const Span& sp : spans) {
    if (!merged.empty() && too_short(sp)) {
      merged.back().end = sp.end;
    } else {
      merged.push_back(sp);
    }
  }
  // A short leading fragment has no predecessor; fold it into its successor.
  if (merged.size() > 1 && too_short(merged.front())) {
    merged[1].begin = merged[0].begin;
    merged.erase(merged.begin());
  }

  std::vector<std::string> out;
  out.reserve(merged.size());
  for (const Span& sp : merged) out.emplace_back(s.substr(sp.begin, sp.end - sp.begin));
  return out;
}

std::size_t count_keywords(std::string_view text) {
  if (trim(text).empty()) fail(ErrorCode::kEmptyInput, "count_keywords: text is empty");
  std::size_t count = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = text.find(',', pos);
    const std::size_t end = comma == std::string_view::npos ? text.size() : comma;
    if (!trim(text.substr(pos, end - pos)).empty()) ++count;
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  if (count == 0) fail(ErrorCode::kEmptyInput, "count_keywords: no keywords");
  return count;
}

bool filter_synthetic(const SyntheticQuery& query, std::size_t passage_sentence_count,
                      const FilterConfig& config) {
  if (passage_sentence_count == 0) {
    fail(ErrorCode::kInvalidArgument, "filter_synthetic: passage_sentence_count must be >= 1");
  }
  const std::string_view t = trim(query.text());
  if (query.kind() == QueryKind::kQuestion) {
    return !t.empty() && t.back() == '?';
  }
  if (t.empty()) return false;
  std::size_t k = 0;
  try {
    k = count_keywords(t);
  } catch (const Error&) {
    return false;
  }
  if (config.half_rule == HalfRule::kFloor) {
    return k < passage_sentence_count / 2;
  }
  return static_cast<double>(k) < static_cast<double>(passage_sentence_count) / 2.0;
}

SyntheticQuery apply_filter(const SyntheticQuery& query, std::size_t passage_sentence_count,
                            const FilterConfig& config) {
  return query.with_filter_verdict(filter_synthetic(query, passage_sentence_count, config));
}

}  // namespace qfuse
