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

#include "qfuse/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>
#include <utility>

#include "config_fields.hpp"
#include "qfuse/fusion.hpp"
#include "qfuse/ingest.hpp"
#include "qfuse/manifest.hpp"
#include "qfuse/metrics.hpp"
#include "qfuse/parallel.hpp"
#include "qfuse/random.hpp"
#include "qfuse/rbsim.hpp"
#include "qfuse/retrieval.hpp"
#include "qfuse/textproc.hpp"

namespace qfuse {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// ---------------------------------------------------------------------------
// config <-> json

template <typename T>
ordered_json field_to_json(const T& value) {
  if constexpr (std::is_same_v<T, std::vector<InstructionTemplate>>) {
    ordered_json arr = ordered_json::array();
    for (const auto& t : value) {
      arr.push_back({{"kind", std::string(query_kind_name(t.kind))}, {"text", t.text}});
    }
    return arr;
  } else {
    return ordered_json(value);
  }
}

[[noreturn]] void bad_key(const std::string& key, const std::string& expected) {
  fail(ErrorCode::kInvalidArgument, "config key '" + key + "': expected " + expected);
}

template <typename T>
void field_from_json(const std::string& key, const json& j, T& out) {
  if constexpr (std::is_same_v<T, bool>) {
    if (!j.is_boolean()) bad_key(key, "a boolean");
    out = j.get<bool>();
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!j.is_string()) bad_key(key, "a string");
    out = j.get<std::string>();
  } else if constexpr (std::is_same_v<T, double>) {
    if (!j.is_number()) bad_key(key, "a number");
    out = j.get<double>();
  } else if constexpr (std::is_integral_v<T>) {
    if (!j.is_number_unsigned()) bad_key(key, "a non-negative integer");
    out = j.get<T>();
  } else if constexpr (std::is_same_v<T, std::vector<std::string>>) {
    if (!j.is_array()) bad_key(key, "an array of strings");
    T v;
    for (const auto& x : j) {
      if (!x.is_string()) bad_key(key, "an array of strings");
      v.push_back(x.get<std::string>());
    }
    out = std::move(v);
  } else if constexpr (std::is_same_v<T, std::vector<double>>) {
    if (!j.is_array()) bad_key(key, "an array of numbers");
    T v;
    for (const auto& x : j) {
      if (!x.is_number()) bad_key(key, "an array of numbers");
      v.push_back(x.get<double>());
    }
    out = std::move(v);
  } else if constexpr (std::is_same_v<T, std::vector<InstructionTemplate>>) {
    if (!j.is_array()) bad_key(key, "an array of {kind, text}");
    T v;
    for (const auto& x : j) {
      if (!x.is_object() || !x.contains("kind") || !x.contains("text") ||
          !x["kind"].is_string() || !x["text"].is_string()) {
        bad_key(key, "an array of {kind, text}");
      }
      v.push_back({parse_query_kind(x["kind"].get<std::string>()), x["text"].get<std::string>()});
    }
    out = std::move(v);
  }
}

// ---------------------------------------------------------------------------
// helpers

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::ofstream open_text(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIoError, "cannot write " + path.string());
  return out;
}

void close_checked(std::ofstream& out, const fs::path& path) {
  out.close();
  if (!out) fail(ErrorCode::kIoError, "failed writing " + path.string());
}

SegmenterConfig segmenter_config(const PipelineConfig& config) {
  if (config.abbreviations.empty()) {
    return SegmenterConfig(SegmenterConfig::defaults().abbreviations(), config.min_sentence_chars);
  }
  return SegmenterConfig::from_file(config.abbreviations, config.min_sentence_chars);
}

FilterConfig filter_config(const PipelineConfig& config) {
  return FilterConfig{config.half_rule == "floor" ? HalfRule::kFloor : HalfRule::kReal};
}

MetricCutoffs cutoffs(const PipelineConfig& config) {
  return MetricCutoffs{config.ndcg_k, config.mrr_k, config.recall_k};
}

using EmbeddingKey = std::pair<std::string, std::int32_t>;
using EmbeddingMap = std::map<EmbeddingKey, EmbeddingVector>;

EmbeddingMap embedding_map(const fs::path& path) {
  EmbeddingMap out;
  for (auto& r : load_embeddings(path)) {
    EmbeddingKey key{r.id, r.ordinal};
    if (!out.emplace(key, std::move(r.vector)).second) {
      fail(ErrorCode::kDuplicateId, path.filename().string() + ": duplicate record (" + key.first +
                                        ", " + std::to_string(key.second) + ")");
    }
  }
  return out;
}

const EmbeddingVector& lookup(const EmbeddingMap& map, const std::string& id, std::int32_t ordinal,
                              std::string_view file) {
  auto it = map.find({id, ordinal});
  if (it == map.end()) {
    fail(ErrorCode::kMissingEmbedding, std::string(file) + " has no vector for (" + id + ", " +
                                           std::to_string(ordinal) + ")");
  }
  return it->second;
}

std::vector<QueryRecord> queries_with_embeddings(const Workspace& ws) {
  auto queries = load_queries(ws.require(artifacts::kQueries, "ingest"));
  const EmbeddingMap emb = embedding_map(ws.require(artifacts::kQueryEmb, "embed"));
  for (auto& q : queries) {
    q = q.with_embedding(lookup(emb, q.query_id(), kPassageLevel, artifacts::kQueryEmb));
  }
  return queries;
}

FusionSpec fusion_spec(const std::string& strategy, double w0) {
  return FusionSpec(parse_fusion_strategy(strategy), w0);
}

std::vector<PassageRecord> fuse_all(const std::vector<PassageRecord>& passages,
                                    const FusionSpec& spec, bool sentence_level,
                                    std::size_t threads) {
  std::vector<std::optional<PassageRecord>> slots(passages.size());
  parallel_for(passages.size(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      slots[i] = fuse_passage(passages[i], spec, sentence_level);
    }
  });
  std::vector<PassageRecord> out;
  out.reserve(passages.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

std::vector<std::string> assembly_inputs(const Workspace& ws, const AssemblyNeeds& needs) {
  std::vector<std::string> out{ws.active_corpus().filename().string()};
  if (needs.sentences) out.emplace_back(artifacts::kSentences);
  if (needs.synthetic) out.emplace_back(artifacts::kSynthetic);
  if (needs.embeddings) {
    out.emplace_back(artifacts::kPassageEmb);
    if (needs.sentences) out.emplace_back(artifacts::kSentenceEmb);
    if (needs.synthetic) out.emplace_back(artifacts::kSyntheticEmb);
  }
  if (needs.fused) out.emplace_back(artifacts::kFused);
  return out;
}

// ---------------------------------------------------------------------------
// manifest

class StageRun {
 public:
  StageRun(Stage stage, const PipelineConfig& config, const Workspace& ws)
      : stage_(stage), config_(config), ws_(ws) {}

  void input(const fs::path& path) { inputs_.push_back(path); }
  void input(std::string_view name) { inputs_.push_back(ws_.path(name)); }
  void output(std::string_view name) { outputs_.push_back(ws_.path(name)); }
  void output(const fs::path& path) { outputs_.push_back(path); }
  ordered_json& details() { return details_; }
  void provider(std::string describe) { provider_ = std::move(describe); }

  ordered_json finish() const {
    ordered_json cfg = config_.to_json();
    ordered_json m;
    m["stage"] = std::string(stage_name(stage_));
    m["version"] = std::string(kVersion);
    m["config_hash"] = sha256_hex(cfg.dump());
    m["seeds"] = {{"seed", config_.seed}};
    if (!provider_.empty()) m["provider"] = provider_;
    m["config"] = std::move(cfg);
    m["inputs"] = digests(inputs_);
    m["outputs"] = digests(outputs_);
    m["details"] = details_.is_null() ? ordered_json::object() : details_;
    m["created_at"] = utc_timestamp();

    const fs::path dir = ws_.path("manifests");
    fs::create_directories(dir);
    const fs::path path = dir / (std::string(stage_name(stage_)) + ".json");
    std::ofstream out = open_text(path);
    out << m.dump(2) << '\n';
    close_checked(out, path);
    return m;
  }

 private:
  ordered_json digests(const std::vector<fs::path>& paths) const {
    ordered_json out = ordered_json::object();
    for (const auto& p : paths) {
      std::error_code ec;
      const fs::path rel = fs::relative(p, ws_.root(), ec);
      const std::string key =
          (!ec && !rel.empty() && *rel.begin() != "..") ? rel.generic_string() : p.generic_string();
      out[key] = sha256_file(p);
    }
    return out;
  }

  Stage stage_;
  const PipelineConfig& config_;
  const Workspace& ws_;
  std::vector<fs::path> inputs_;
  std::vector<fs::path> outputs_;
  ordered_json details_;
  std::string provider_;
};

// ---------------------------------------------------------------------------
// stages

void stage_ingest(const PipelineConfig& config, const Workspace& ws, StageRun& run,
                  std::ostream& log) {
  if (config.corpus.empty() || config.queries.empty() || config.qrels.empty()) {
    fail(ErrorCode::kInvalidArgument, "ingest needs --corpus, --queries and --qrels");
  }
  const auto corpus = load_corpus(config.corpus);
  const auto queries = load_queries(config.queries);
  const QrelSet qrels = load_qrels(config.qrels);
  run.input(fs::path(config.corpus));
  run.input(fs::path(config.queries));
  run.input(fs::path(config.qrels));

  const auto warnings = validate_qrels(qrels, corpus, queries);
  for (const auto& w : warnings) log << "warning: " << w << '\n';

  fs::create_directories(ws.root());
  save_corpus(ws.path(artifacts::kCorpus), corpus);
  save_queries(ws.path(artifacts::kQueries), queries);
  save_qrels(ws.path(artifacts::kQrels), qrels);
  run.output(artifacts::kCorpus);
  run.output(artifacts::kQueries);
  run.output(artifacts::kQrels);

  run.details() = {{"passages", corpus.size()},
                   {"queries", queries.size()},
                   {"judgments", qrels.size()},
                   {"warnings", warnings}};
  log << "ingested " << corpus.size() << " passages, " << queries.size() << " queries, "
      << qrels.size() << " judgments\n";
}

void stage_downsample(const PipelineConfig& config, const Workspace& ws, StageRun& run,
                      std::ostream& log) {
  if (config.target_size == 0) fail(ErrorCode::kInvalidArgument, "downsample needs --target-size");
  const auto corpus = load_corpus(ws.require(artifacts::kCorpus, "ingest"));
  const QrelSet qrels = load_qrels(ws.require(artifacts::kQrels, "ingest"));
  run.input(artifacts::kCorpus);
  run.input(artifacts::kQrels);
  const auto sampled = downsample_corpus(corpus, qrels, config.target_size, config.seed);
  save_corpus(ws.path(artifacts::kSampledCorpus), sampled);
  run.output(artifacts::kSampledCorpus);
  run.details() = {{"source_passages", corpus.size()}, {"sampled_passages", sampled.size()}};
  log << "sampled " << sampled.size() << " of " << corpus.size() << " passages\n";
}

void stage_segment(const PipelineConfig& config, const Workspace& ws, StageRun& run,
                   std::ostream& log) {
  const fs::path corpus_path = ws.active_corpus();
  const auto corpus = load_corpus(corpus_path);
  run.input(corpus_path);
  const SegmenterConfig seg = segmenter_config(config);
  if (!config.abbreviations.empty()) run.input(fs::path(config.abbreviations));

  std::vector<std::optional<PassageRecord>> slots(corpus.size());
  parallel_for(corpus.size(), config.effective_threads(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto& p = corpus[i];
      const auto texts = segment_sentences(p.full_text(), seg);
      std::vector<SentenceUnit> units;
      units.reserve(texts.size());
      for (std::size_t j = 0; j < texts.size(); ++j) units.emplace_back(p.passage_id(), j, texts[j]);
      slots[i] = p.with_sentences(std::move(units));
    }
  });
  std::vector<PassageRecord> segmented;
  std::size_t total = 0;
  for (auto& s : slots) {
    total += s->sentences().size();
    segmented.push_back(std::move(*s));
  }
  save_sentences(ws.path(artifacts::kSentences), segmented);
  run.output(artifacts::kSentences);
  run.details() = {{"passages", segmented.size()}, {"sentences", total}};
  log << "segmented " << segmented.size() << " passages into " << total << " sentences\n";
}

void stage_generate(const PipelineConfig& config, const Workspace& ws, StageRun& run,
                    std::ostream& log) {
  const fs::path corpus_path = ws.active_corpus();
  const auto corpus = load_corpus(corpus_path);
  run.input(corpus_path);
  if (!config.fixture.empty() && config.provider == "hash") run.input(fs::path(config.fixture));
  auto provider = make_provider(config);
  run.provider(provider->describe());
  const InstructionSet instructions(config.instructions);

  std::vector<std::vector<SyntheticQuery>> generated(corpus.size());
  parallel_for(corpus.size(), config.effective_threads(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto& p = corpus[i];
      const std::string text = p.full_text();
      for (const auto& t : instructions.templates()) {
        const GenerationRequest request(t.text, text, config.num_sequences, config.max_new_tokens,
                                        instructions, config.allow_instruction_override,
                                        p.passage_id());
        for (const auto& r : provider->generate(request)) {
          generated[i].emplace_back(t.kind, r.text(), r.gen_prob(), false, r.bertscore_f1());
        }
      }
    }
  });

  SyntheticSet set;
  std::size_t total = 0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (generated[i].empty()) continue;
    total += generated[i].size();
    set[corpus[i].passage_id()] = std::move(generated[i]);
  }
  save_synthetic(set, ws.path(artifacts::kSyntheticRaw));
  run.output(artifacts::kSyntheticRaw);
  run.details() = {{"passages_with_queries", set.size()}, {"synthetic_queries", total}};
  log << "generated " << total << " synthetic queries for " << set.size() << " passages\n";
}

void stage_filter(const PipelineConfig& config, const Workspace& ws, StageRun& run,
                  std::ostream& log) {
  SyntheticSet set = load_synthetic(ws.require(artifacts::kSyntheticRaw, "generate"));
  const auto sentences = load_sentences(ws.require(artifacts::kSentences, "segment"));
  run.input(artifacts::kSyntheticRaw);
  run.input(artifacts::kSentences);
  const FilterConfig fc = filter_config(config);

  std::map<std::string, std::pair<std::size_t, std::size_t>> stats;  // kind -> (passed, total)
  for (auto& [pid, queries] : set) {
    auto it = sentences.find(pid);
    if (it == sentences.end()) {
      fail(ErrorCode::kMissingArtifact,
           std::string(artifacts::kSentences) + " has no sentences for passage " + pid);
    }
    for (auto& q : queries) {
      q = apply_filter(q, it->second.size(), fc);
      auto& s = stats[std::string(query_kind_name(q.kind()))];
      s.first += q.passed_filter() ? 1 : 0;
      s.second += 1;
    }
  }
  save_synthetic(set, ws.path(artifacts::kSynthetic));
  run.output(artifacts::kSynthetic);
  ordered_json by_kind = ordered_json::object();
  for (const auto& [kind, s] : stats) {
    by_kind[kind] = {{"passed", s.first}, {"total", s.second}};
    log << kind << ": " << s.first << " of " << s.second << " passed\n";
  }
  run.details() = {{"half_rule", config.half_rule}, {"by_kind", by_kind}};
}

std::vector<EmbeddingRecord> embed_records(Provider& provider,
                                           std::vector<std::pair<std::string, std::int32_t>> keys,
                                           const std::vector<std::string>& texts) {
  std::vector<EmbeddingRecord> out;
  if (texts.empty()) return out;
  auto vectors = provider.embed_batch(texts);
  if (vectors.size() != texts.size()) {
    fail(ErrorCode::kBadResponse, "provider returned " + std::to_string(vectors.size()) +
                                      " vectors for " + std::to_string(texts.size()) + " texts");
  }
  out.reserve(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    out.push_back({std::move(keys[i].first), keys[i].second, std::move(vectors[i])});
  }
  return out;
}

void stage_embed(const PipelineConfig& config, const Workspace& ws, StageRun& run,
                 std::ostream& log) {
  const fs::path corpus_path = ws.active_corpus();
  const auto corpus = load_corpus(corpus_path);
  const auto sentences = load_sentences(ws.require(artifacts::kSentences, "segment"));
  const SyntheticSet synthetic = load_synthetic(ws.require(artifacts::kSynthetic, "filter"));
  const auto queries = load_queries(ws.require(artifacts::kQueries, "ingest"));
  run.input(corpus_path);
  run.input(artifacts::kSentences);
  run.input(artifacts::kSynthetic);
  run.input(artifacts::kQueries);
  auto provider = make_provider(config);
  run.provider(provider->describe());

  std::vector<std::pair<std::string, std::int32_t>> pkeys, skeys, qkeys, ukeys;
  std::vector<std::string> ptexts, stexts, qtexts, utexts;
  for (const auto& p : corpus) {
    pkeys.emplace_back(p.passage_id(), kPassageLevel);
    ptexts.push_back(p.full_text());
    auto it = sentences.find(p.passage_id());
    if (it == sentences.end()) {
      fail(ErrorCode::kMissingArtifact,
           std::string(artifacts::kSentences) + " has no sentences for passage " + p.passage_id());
    }
    for (std::size_t j = 0; j < it->second.size(); ++j) {
      skeys.emplace_back(p.passage_id(), static_cast<std::int32_t>(j));
      stexts.push_back(it->second[j]);
    }
    auto sq = synthetic.find(p.passage_id());
    if (sq == synthetic.end()) continue;
    for (std::size_t j = 0; j < sq->second.size(); ++j) {
      if (!sq->second[j].passed_filter()) continue;
      qkeys.emplace_back(p.passage_id(), static_cast<std::int32_t>(j));
      qtexts.push_back(sq->second[j].text());
    }
  }
  for (const auto& q : queries) {
    ukeys.emplace_back(q.query_id(), kPassageLevel);
    utexts.push_back(q.text());
  }

  const auto passages_emb = embed_records(*provider, std::move(pkeys), ptexts);
  const auto sentences_emb = embed_records(*provider, std::move(skeys), stexts);
  const auto synthetic_emb = embed_records(*provider, std::move(qkeys), qtexts);
  const auto queries_emb = embed_records(*provider, std::move(ukeys), utexts);

  const std::size_t dim = passages_emb.empty() ? 0 : passages_emb.front().vector.dim();
  for (const auto* group : {&sentences_emb, &synthetic_emb, &queries_emb}) {
    if (!group->empty() && group->front().vector.dim() != dim) {
      fail(ErrorCode::kDimensionMismatch, "provider returned vectors of different dims");
    }
  }

  save_embeddings(passages_emb, ws.path(artifacts::kPassageEmb));
  save_embeddings(sentences_emb, ws.path(artifacts::kSentenceEmb));
  save_embeddings(synthetic_emb, ws.path(artifacts::kSyntheticEmb));
  save_embeddings(queries_emb, ws.path(artifacts::kQueryEmb));
  for (auto name : {artifacts::kPassageEmb, artifacts::kSentenceEmb, artifacts::kSyntheticEmb,
                    artifacts::kQueryEmb}) {
    run.output(name);
  }
  run.details() = {{"dim", dim},
                   {"passages", passages_emb.size()},
                   {"sentences", sentences_emb.size()},
                   {"synthetic_queries", synthetic_emb.size()},
                   {"queries", queries_emb.size()}};
  log << "embedded " << passages_emb.size() << " passages, " << sentences_emb.size()
      << " sentences, " << synthetic_emb.size() << " synthetic queries, " << queries_emb.size()
      << " queries (dim " << dim << ")\n";
}

void stage_fuse(const PipelineConfig& config, const Workspace& ws, StageRun& run,
                std::ostream& log) {
  const AssemblyNeeds needs{config.sentence_level, true, true, false};
  const auto passages = assemble_passages(ws, needs);
  for (const auto& name : assembly_inputs(ws, needs)) run.input(std::string_view(name));
  const FusionSpec spec = fusion_spec(config.strategy, config.w0);
  const auto fused = fuse_all(passages, spec, config.sentence_level, config.effective_threads());

  std::vector<EmbeddingRecord> records;
  std::map<std::vector<double>, std::size_t> profiles;
  const fs::path weights_path = ws.path(artifacts::kWeights);
  std::ofstream weights_out = open_text(weights_path);
  for (const auto& p : fused) {
    if (config.sentence_level) {
      for (const auto& s : p.sentences()) {
        records.push_back({p.passage_id(), static_cast<std::int32_t>(s.ordinal()), *s.fused()});
      }
    } else {
      records.push_back({p.passage_id(), kPassageLevel, *p.fused()});
    }

    const ResolvedWeights w = passage_weights(p, spec);
    const auto survivors = surviving_queries(p);
    std::vector<double> profile{w.w_corpus()};
    ordered_json line;
    line["passage_id"] = p.passage_id();
    line["w_corpus"] = w.w_corpus();
    ordered_json qs = ordered_json::array();
    for (const auto& [index, weight] : w.per_query()) {
      qs.push_back({{"kind", std::string(query_kind_name(survivors[index].kind()))},
                    {"text", survivors[index].text()},
                    {"weight", weight}});
      profile.push_back(weight);
    }
    line["queries"] = std::move(qs);
    weights_out << line.dump() << '\n';
    ++profiles[profile];
  }
  close_checked(weights_out, weights_path);
  save_embeddings(records, ws.path(artifacts::kFused));
  run.output(artifacts::kFused);
  run.output(artifacts::kWeights);

  ordered_json prof = ordered_json::array();
  for (const auto& [weights, count] : profiles) {
    prof.push_back({{"weights", weights}, {"passages", count}});
  }
  run.details() = {{"strategy", config.strategy},
                   {"w0", config.w0},
                   {"sentence_level", config.sentence_level},
                   {"rows", records.size()},
                   {"weight_profiles", prof}};
  log << "fused " << fused.size() << " passages into " << records.size() << " rows ("
      << config.strategy << ", " << profiles.size() << " distinct weight profiles)\n";
}

void stage_index(const PipelineConfig& config, const Workspace& ws, StageRun& run,
                 std::ostream& log) {
  const AssemblyNeeds needs{config.sentence_level, false, true, true};
  const auto passages = assemble_passages(ws, needs);
  for (const auto& name : assembly_inputs(ws, needs)) run.input(std::string_view(name));
  const VectorIndex index = build_index(passages, config.sentence_level);
  index.save(ws.path(artifacts::kIndex));
  run.output(artifacts::kIndex);
  run.details() = {{"rows", index.row_count()},
                   {"passages", index.passage_ids().size()},
                   {"dim", index.dim()},
                   {"sentence_level", config.sentence_level}};
  log << "indexed " << index.row_count() << " rows for " << index.passage_ids().size()
      << " passages\n";
}

void write_run_file(const fs::path& path, std::span<const RankedList> runs, const std::string& tag) {
  std::ofstream out = open_text(path);
  write_trec_run(out, runs, tag);
  close_checked(out, path);
}

void stage_search(const PipelineConfig& config, const Workspace& ws, StageRun& run,
                  std::ostream& log) {
  const VectorIndex index = VectorIndex::load(ws.require(artifacts::kIndex, "index"));
  const auto queries = queries_with_embeddings(ws);
  run.input(artifacts::kIndex);
  run.input(artifacts::kQueries);
  run.input(artifacts::kQueryEmb);
  const auto runs = batch_search(index, queries, config.k, config.effective_threads());
  write_run_file(ws.path(artifacts::kRun), runs, config.run_tag);
  run.output(artifacts::kRun);
  run.details() = {{"queries", runs.size()}, {"k", config.k}};
  log << "searched " << runs.size() << " queries (k=" << config.k << ")\n";
}

ordered_json macro_json(const EvalReport& report) {
  const MetricCutoffs& c = report.cutoffs;
  return {{"ndcg@" + std::to_string(c.ndcg), report.ndcg},
          {"mrr@" + std::to_string(c.mrr), report.mrr},
          {"recall@" + std::to_string(c.recall), report.recall},
          {"evaluated", report.per_query.size()},
          {"skipped", report.skipped.size()}};
}

void stage_eval(const PipelineConfig& config, const Workspace& ws, StageRun& run,
                std::ostream& log) {
  const auto runs = read_trec_run(ws.require(artifacts::kRun, "search"));
  const QrelSet qrels = load_qrels(ws.require(artifacts::kQrels, "ingest"));
  run.input(artifacts::kRun);
  run.input(artifacts::kQrels);
  const EvalReport report = evaluate_run(runs, qrels, cutoffs(config));

  const fs::path table_path = ws.path(artifacts::kReportTable);
  std::ofstream table = open_text(table_path);
  write_report_table(table, report);
  close_checked(table, table_path);
  const fs::path jsonl_path = ws.path(artifacts::kReportJsonl);
  std::ofstream jsonl = open_text(jsonl_path);
  write_report_jsonl(jsonl, report);
  close_checked(jsonl, jsonl_path);
  run.output(artifacts::kReportTable);
  run.output(artifacts::kReportJsonl);
  run.details() = macro_json(report);
  write_report_table(log, report);
}

void stage_ablate(const PipelineConfig& config, const Workspace& ws, StageRun& run,
                  std::ostream& log) {
  const AssemblyNeeds needs{config.sentence_level, true, true, false};
  const auto passages = assemble_passages(ws, needs);
  for (const auto& name : assembly_inputs(ws, needs)) run.input(std::string_view(name));
  const auto queries = queries_with_embeddings(ws);
  const QrelSet qrels = load_qrels(ws.require(artifacts::kQrels, "ingest"));
  run.input(artifacts::kQueries);
  run.input(artifacts::kQueryEmb);
  run.input(artifacts::kQrels);
  const MetricCutoffs cut = cutoffs(config);
  const std::size_t threads = config.effective_threads();
  fs::create_directories(ws.path("ablation"));

  const std::string ndcg_col = "ndcg@" + std::to_string(cut.ndcg);
  const std::string mrr_col = "mrr@" + std::to_string(cut.mrr);
  const std::string recall_col = "recall@" + std::to_string(cut.recall);

  const fs::path table_path = ws.path(artifacts::kAblationTable);
  const fs::path jsonl_path = ws.path(artifacts::kAblationJsonl);
  std::ofstream table = open_text(table_path);
  std::ofstream jsonl = open_text(jsonl_path);
  std::ostringstream header;
  header << "strategy\tw0\t" << ndcg_col << '\t' << mrr_col << '\t' << recall_col << '\n';
  table << header.str();
  log << header.str();

  ordered_json rows = ordered_json::array();
  for (const auto& name : config.ablate_strategies) {
    const FusionSpec spec = fusion_spec(name, config.w0);
    const bool uses_w0 = spec.strategy() == FusionStrategy::kManual ||
                         spec.strategy() == FusionStrategy::kGenProb;
    const auto fused = fuse_all(passages, spec, config.sentence_level, threads);
    const VectorIndex index = build_index(fused, config.sentence_level);
    const auto runs = batch_search(index, queries, config.k, threads);
    const fs::path run_path = ws.path("ablation") / ("run." + name + ".trec");
    write_run_file(run_path, runs, config.run_tag);
    run.output(run_path);
    const EvalReport report = evaluate_run(runs, qrels, cut);

    std::ostringstream line;
    line << name << '\t' << (uses_w0 ? fixed6(config.w0) : "-") << '\t' << fixed6(report.ndcg)
         << '\t' << fixed6(report.mrr) << '\t' << fixed6(report.recall) << '\n';
    table << line.str();
    log << line.str();

    ordered_json row;
    row["strategy"] = name;
    row["w0"] = uses_w0 ? ordered_json(config.w0) : ordered_json(nullptr);
    row[ndcg_col] = report.ndcg;
    row[mrr_col] = report.mrr;
    row[recall_col] = report.recall;
    row["evaluated"] = report.per_query.size();
    row["skipped"] = report.skipped.size();
    jsonl << row.dump() << '\n';
    rows.push_back(std::move(row));
  }
  close_checked(table, table_path);
  close_checked(jsonl, jsonl_path);
  run.output(artifacts::kAblationTable);
  run.output(artifacts::kAblationJsonl);
  run.details() = {{"sentence_level", config.sentence_level}, {"rows", rows}};
}

void stage_simulate_rb(const PipelineConfig& config, const Workspace& ws, StageRun& run,
                       std::ostream& log) {
  const GroupModel base(config.rb_groups, config.rb_dim, config.rb_m, config.rb_sigma,
                        config.rb_center_scale, config.seed);
  const std::size_t threads = config.effective_threads();
  fs::create_directories(ws.root());

  const fs::path csv_path = ws.path(artifacts::kRbsimCsv);
  std::ofstream csv = open_text(csv_path);
  csv << "w0,seed,recall\n";
  std::vector<std::vector<double>> recalls(config.rb_w0_grid.size());
  double mse_single = 0.0;
  double mse_mean = 0.0;
  for (std::size_t s = 0; s < config.rb_seeds; ++s) {
    const std::uint64_t seed = derive_seed(config.seed, s);
    const GroupModel model = base.with_seed(seed);
    const auto points = simulate_retrieval(model, config.rb_w0_grid, threads);
    for (std::size_t g = 0; g < points.size(); ++g) {
      csv << format_double(points[g].w0) << ',' << seed << ',' << format_double(points[g].recall_at_1)
          << '\n';
      recalls[g].push_back(points[g].recall_at_1);
    }
    const EstimatorMse mse = simulate_estimators(model, threads);
    mse_single += mse.mse_single;
    mse_mean += mse.mse_mean;
  }
  close_checked(csv, csv_path);

  const fs::path summary_path = ws.path(artifacts::kRbsimSummary);
  std::ofstream summary = open_text(summary_path);
  summary << "w0,mean_recall,min_recall,max_recall,seeds\n";
  log << "w0\tmean_recall@1\n";
  ordered_json curve = ordered_json::array();
  for (std::size_t g = 0; g < recalls.size(); ++g) {
    const auto& r = recalls[g];
    double sum = 0.0;
    for (double x : r) sum += x;
    const double mean = r.empty() ? 0.0 : sum / static_cast<double>(r.size());
    const double lo = r.empty() ? 0.0 : *std::min_element(r.begin(), r.end());
    const double hi = r.empty() ? 0.0 : *std::max_element(r.begin(), r.end());
    summary << format_double(config.rb_w0_grid[g]) << ',' << format_double(mean) << ','
            << format_double(lo) << ',' << format_double(hi) << ',' << r.size() << '\n';
    log << fixed6(config.rb_w0_grid[g]) << '\t' << fixed6(mean) << '\n';
    curve.push_back({{"w0", config.rb_w0_grid[g]}, {"mean_recall", mean}});
  }
  close_checked(summary, summary_path);
  run.output(artifacts::kRbsimCsv);
  run.output(artifacts::kRbsimSummary);

  const double n = static_cast<double>(std::max<std::size_t>(config.rb_seeds, 1));
  mse_single /= n;
  mse_mean /= n;
  const double ratio = mse_single > 0.0 ? mse_mean / mse_single : 0.0;
  log << "mse_single " << fixed6(mse_single) << "  mse_mean " << fixed6(mse_mean) << "  ratio "
      << fixed6(ratio) << " (1/m = " << fixed6(1.0 / static_cast<double>(config.rb_m)) << ")\n";
  run.details() = {{"curve", curve},
                   {"mse_single", mse_single},
                   {"mse_mean", mse_mean},
                   {"ratio", ratio}};
}

}  // namespace

// ---------------------------------------------------------------------------
// PipelineConfig

ordered_json PipelineConfig::to_json() const {
  ordered_json j = ordered_json::object();
  visit_config_fields([&](const char* name, const auto& field) { j[name] = field_to_json(field); },
                      *this);
  return j;
}

void PipelineConfig::merge_json(const json& j) {
  if (!j.is_object()) fail(ErrorCode::kInvalidArgument, "config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    visit_config_fields(
        [&](const char* name, auto& field) {
          if (key == name) {
            known = true;
            field_from_json(key, value, field);
          }
        },
        *this);
    if (!known) fail(ErrorCode::kInvalidArgument, "unknown config key '" + key + "'");
  }
}

void PipelineConfig::validate() const {
  auto bad = [](const std::string& msg) { fail(ErrorCode::kInvalidArgument, msg); };
  if (provider != "hash" && provider != "http") bad("provider must be hash or http");
  if (half_rule != "real" && half_rule != "floor") bad("half_rule must be real or floor");
  parse_fusion_strategy(strategy);
  for (const auto& s : ablate_strategies) parse_fusion_strategy(s);
  if (!(w0 >= 0.0 && w0 <= 1.0)) bad("w0 must lie in [0, 1]");
  if (dim == 0) bad("dim must be positive");
  if (k == 0 || ndcg_k == 0 || mrr_k == 0 || recall_k == 0) bad("cutoffs must be positive");
  if (num_sequences == 0 || max_new_tokens == 0) bad("generation counts must be positive");
  if (batch_size == 0 || max_in_flight == 0 || max_attempts == 0 || timeout_s == 0) {
    bad("http settings must be positive");
  }
  if (instructions.empty()) bad("instructions must not be empty");
  if (run_tag.empty() || run_tag.find_first_of(" \t\n") != std::string::npos) {
    bad("run_tag must be a single non-empty token");
  }
  if (rb_m < 2) bad("rb_m must be at least 2");
  if (rb_groups == 0 || rb_dim == 0 || rb_seeds == 0) bad("rb sizes must be positive");
  for (double w : rb_w0_grid) {
    if (!(w >= 0.0 && w <= 1.0)) bad("rb_w0_grid values must lie in [0, 1]");
  }
}

std::size_t PipelineConfig::effective_threads() const {
  if (threads > 0) return threads;
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

PipelineConfig load_config_file(const fs::path& path, PipelineConfig base) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIoError, "cannot read config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::kParseError, "config " + path.string() + ": " + e.what());
  }
  base.merge_json(j);
  return base;
}

// ---------------------------------------------------------------------------
// Workspace

Workspace::Workspace(fs::path root) : root_(std::move(root)) {}

fs::path Workspace::require(std::string_view name, std::string_view producer) const {
  fs::path p = path(name);
  if (!fs::is_regular_file(p)) {
    fail(ErrorCode::kMissingArtifact, "missing artifact " + std::string(name) + " in " +
                                          root_.string() + " (produced by `qfuse " +
                                          std::string(producer) + "`)");
  }
  return p;
}

fs::path Workspace::active_corpus() const {
  const fs::path sampled = path(artifacts::kSampledCorpus);
  if (fs::is_regular_file(sampled)) return sampled;
  return require(artifacts::kCorpus, "ingest");
}

// ---------------------------------------------------------------------------
// providers and stages

std::unique_ptr<Provider> make_provider(const PipelineConfig& config) {
  InstructionSet instructions(config.instructions);
  if (config.provider == "http") {
    HttpProviderOptions options;
    options.endpoint = config.endpoint;
    options.batch_size = config.batch_size;
    options.max_in_flight = config.max_in_flight;
    options.max_attempts = config.max_attempts;
    options.timeout = std::chrono::seconds(config.timeout_s);
    options.decoding = config.decoding;
    return std::make_unique<HttpProvider>(options);
  }
  if (config.provider != "hash") {
    fail(ErrorCode::kInvalidArgument, "unknown provider '" + config.provider + "'");
  }
  std::optional<SyntheticSet> fixture;
  if (!config.fixture.empty()) fixture = load_synthetic(config.fixture);
  return std::make_unique<HashProvider>(config.dim, config.seed, std::move(fixture),
                                        std::move(instructions));
}

namespace {

constexpr std::pair<Stage, std::string_view> kStageNames[] = {
    {Stage::kIngest, "ingest"},     {Stage::kDownsample, "downsample"},
    {Stage::kSegment, "segment"},   {Stage::kGenerate, "generate"},
    {Stage::kFilter, "filter"},     {Stage::kEmbed, "embed"},
    {Stage::kFuse, "fuse"},         {Stage::kIndex, "index"},
    {Stage::kSearch, "search"},     {Stage::kEval, "eval"},
    {Stage::kAblate, "ablate"},     {Stage::kSimulateRb, "simulate-rb"},
};

}  // namespace

std::string_view stage_name(Stage stage) {
  for (const auto& [s, name] : kStageNames) {
    if (s == stage) return name;
  }
  return "unknown";
}

Stage parse_stage(std::string_view name) {
  for (const auto& [s, n] : kStageNames) {
    if (n == name) return s;
  }
  fail(ErrorCode::kInvalidArgument, "unknown stage '" + std::string(name) + "'");
}

const std::vector<Stage>& all_stages() {
  static const std::vector<Stage> stages = [] {
    std::vector<Stage> v;
    for (const auto& [s, name] : kStageNames) v.push_back(s);
    return v;
  }();
  return stages;
}

ordered_json run_stage(Stage stage, const PipelineConfig& config, const Workspace& workspace,
                       std::ostream& log) {
  config.validate();
  StageRun run(stage, config, workspace);
  switch (stage) {
    case Stage::kIngest: stage_ingest(config, workspace, run, log); break;
    case Stage::kDownsample: stage_downsample(config, workspace, run, log); break;
    case Stage::kSegment: stage_segment(config, workspace, run, log); break;
    case Stage::kGenerate: stage_generate(config, workspace, run, log); break;
    case Stage::kFilter: stage_filter(config, workspace, run, log); break;
    case Stage::kEmbed: stage_embed(config, workspace, run, log); break;
    case Stage::kFuse: stage_fuse(config, workspace, run, log); break;
    case Stage::kIndex: stage_index(config, workspace, run, log); break;
    case Stage::kSearch: stage_search(config, workspace, run, log); break;
    case Stage::kEval: stage_eval(config, workspace, run, log); break;
    case Stage::kAblate: stage_ablate(config, workspace, run, log); break;
    case Stage::kSimulateRb: stage_simulate_rb(config, workspace, run, log); break;
  }
  return run.finish();
}

// ---------------------------------------------------------------------------
// assembly

std::vector<PassageRecord> assemble_passages(const Workspace& ws, const AssemblyNeeds& needs) {
  auto passages = load_corpus(ws.active_corpus());

  std::map<std::string, std::vector<std::string>> sentences;
  if (needs.sentences) sentences = load_sentences(ws.require(artifacts::kSentences, "segment"));
  SyntheticSet synthetic;
  if (needs.synthetic) synthetic = load_synthetic(ws.require(artifacts::kSynthetic, "filter"));

  EmbeddingMap passage_emb, sentence_emb, synthetic_emb, fused;
  if (needs.embeddings || needs.fused) {
    passage_emb = embedding_map(ws.require(artifacts::kPassageEmb, "embed"));
    if (needs.sentences) sentence_emb = embedding_map(ws.require(artifacts::kSentenceEmb, "embed"));
    if (needs.synthetic) {
      synthetic_emb = embedding_map(ws.require(artifacts::kSyntheticEmb, "embed"));
    }
  }
  if (needs.fused) fused = embedding_map(ws.require(artifacts::kFused, "fuse"));

  const bool with_emb = needs.embeddings || needs.fused;
  for (auto& p : passages) {
    const std::string& pid = p.passage_id();
    if (needs.sentences) {
      auto it = sentences.find(pid);
      if (it == sentences.end()) {
        fail(ErrorCode::kMissingArtifact,
             std::string(artifacts::kSentences) + " has no sentences for passage " + pid);
      }
      std::vector<SentenceUnit> units;
      units.reserve(it->second.size());
      for (std::size_t j = 0; j < it->second.size(); ++j) {
        const auto ord = static_cast<std::int32_t>(j);
        std::optional<EmbeddingVector> e, f;
        if (with_emb) e = lookup(sentence_emb, pid, ord, artifacts::kSentenceEmb);
        if (needs.fused) {
          auto fi = fused.find({pid, ord});
          if (fi != fused.end()) f = fi->second;
        }
        units.emplace_back(pid, j, it->second[j], std::move(e), std::move(f));
      }
      p = p.with_sentences(std::move(units));
    }
    if (needs.synthetic) {
      auto it = synthetic.find(pid);
      if (it != synthetic.end()) {
        std::vector<SyntheticQuery> qs = it->second;
        if (with_emb) {
          for (std::size_t j = 0; j < qs.size(); ++j) {
            if (!qs[j].passed_filter()) continue;
            qs[j] = qs[j].with_embedding(
                lookup(synthetic_emb, pid, static_cast<std::int32_t>(j), artifacts::kSyntheticEmb));
          }
        }
        p = p.with_synthetic_queries(std::move(qs));
      }
    }
    if (with_emb) {
      p = p.with_embedding(lookup(passage_emb, pid, kPassageLevel, artifacts::kPassageEmb));
      if (needs.fused) {
        auto fi = fused.find({pid, kPassageLevel});
        if (fi != fused.end()) p = p.with_fused(fi->second);
      }
    }
  }
  return passages;
}

}  // namespace qfuse
