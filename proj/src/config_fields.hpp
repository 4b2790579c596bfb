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

#include "qfuse/pipeline.hpp"

// Single list of PipelineConfig fields, in serialization order.
#define QFUSE_CONFIG_FIELDS(X)                                                          \
  X(corpus) X(queries) X(qrels)                                                         \
  X(provider) X(endpoint) X(dim) X(fixture) X(batch_size) X(max_in_flight)              \
  X(max_attempts) X(timeout_s) X(decoding)                                              \
  X(instructions) X(allow_instruction_override) X(num_sequences) X(max_new_tokens)      \
  X(abbreviations) X(min_sentence_chars) X(half_rule)                                   \
  X(target_size) X(sentence_level) X(strategy) X(w0) X(k) X(ndcg_k) X(mrr_k)            \
  X(recall_k) X(run_tag) X(ablate_strategies)                                           \
  X(rb_groups) X(rb_dim) X(rb_m) X(rb_sigma) X(rb_center_scale) X(rb_seeds)             \
  X(rb_w0_grid)                                                                         \
  X(seed) X(threads)

namespace qfuse {

/// Calls f(name, configs.field...) for every field, over one or more configs
/// in lockstep.
template <typename F, typename... Configs>
void visit_config_fields(F&& f, Configs&... configs) {
#define QFUSE_VISIT_FIELD(name) f(#name, configs.name...);
  QFUSE_CONFIG_FIELDS(QFUSE_VISIT_FIELD)
#undef QFUSE_VISIT_FIELD
}

}  // namespace qfuse
