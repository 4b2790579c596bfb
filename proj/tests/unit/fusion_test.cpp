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

#include "qfuse/fusion.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"
#include "oracles.hpp"

namespace qfuse {
namespace {

using testing::error_code_of;

constexpr FusionStrategy kAll[] = {FusionStrategy::kCorpusOnly, FusionStrategy::kEqual,
                                   FusionStrategy::kManual,     FusionStrategy::kGenProb,
                                   FusionStrategy::kBertScore,  FusionStrategy::kBertScoreSoftmax};

std::vector<double> flatten(const ResolvedWeights& w, std::size_t n) {
  std::vector<double> out(n + 1, 0.0);
  out[0] = w.w_corpus();
  for (const auto& [j, x] : w.per_query()) out[j + 1] = x;
  return out;
}

SyntheticQuery sq(double gen_prob, double f1, std::vector<float> emb = {1.0f}) {
  return SyntheticQuery(QueryKind::kQuestion, "q?", gen_prob, true, f1,
                        EmbeddingVector(std::move(emb)));
}

TEST(ResolveWeightsTest, BertScoreHandValues) {
  const std::vector<SyntheticQuery> qs{sq(0.5, 0.6), sq(0.5, 0.4)};
  const auto w = flatten(resolve_weights(FusionSpec(FusionStrategy::kBertScore), qs), 2);
  EXPECT_NEAR(w[0], 0.5, 1e-12);
  EXPECT_NEAR(w[1], 0.3, 1e-12);
  EXPECT_NEAR(w[2], 0.2, 1e-12);
}

TEST(ResolveWeightsTest, ManualHandValues) {
  const std::vector<SyntheticQuery> qs{sq(0.5, 0.6), sq(0.5, 0.4)};
  const auto w = flatten(resolve_weights(FusionSpec(FusionStrategy::kManual, 0.6), qs), 2);
  EXPECT_NEAR(w[0], 0.6, 1e-12);
  EXPECT_NEAR(w[1], 0.2, 1e-12);
  EXPECT_NEAR(w[2], 0.2, 1e-12);
}

TEST(ResolveWeightsTest, EqualIncludesCorpus) {
  const std::vector<SyntheticQuery> qs{sq(0.1, 0.1), sq(0.2, 0.2), sq(0.3, 0.3)};
  for (double x : flatten(resolve_weights(FusionSpec(FusionStrategy::kEqual), qs), 3)) {
    EXPECT_NEAR(x, 0.25, 1e-15);
  }
}

TEST(ResolveWeightsTest, SoftmaxHandValues) {
  const std::vector<SyntheticQuery> qs{sq(0.5, 1.0), sq(0.5, 0.0)};
  const auto w = flatten(resolve_weights(FusionSpec(FusionStrategy::kBertScoreSoftmax), qs), 2);
  const double z = 2.0 * std::exp(1.0) + 1.0;
  EXPECT_NEAR(w[0], std::exp(1.0) / z, 1e-12);
  EXPECT_NEAR(w[1], std::exp(1.0) / z, 1e-12);
  EXPECT_NEAR(w[2], 1.0 / z, 1e-12);
}

TEST(ResolveWeightsTest, GenProbProportional) {
  const std::vector<SyntheticQuery> qs{sq(0.3, 0.5), sq(0.1, 0.5)};
  const auto w = flatten(resolve_weights(FusionSpec(FusionStrategy::kGenProb, 0.2), qs), 2);
  EXPECT_NEAR(w[0], 0.2, 1e-12);
  EXPECT_NEAR(w[1], 0.6, 1e-12);
  EXPECT_NEAR(w[2], 0.2, 1e-12);
}

TEST(ResolveWeightsTest, RandomInputsMatchOracleAndSumToOne) {
  Rng rng(2024);
  for (auto strategy : kAll) {
    for (int trial = 0; trial < 1000; ++trial) {
      const std::size_t n = 1 + rng.below(12);
      std::vector<SyntheticQuery> qs;
      std::vector<double> gp, f1;
      for (std::size_t j = 0; j < n; ++j) {
        gp.push_back(1.0 - rng.uniform01());  // (0, 1]
        f1.push_back(rng.uniform01());
        qs.push_back(sq(gp.back(), f1.back()));
      }
      const double w0 = rng.uniform01();
      const ResolvedWeights rw = resolve_weights(FusionSpec(strategy, w0), qs);
      ASSERT_NEAR(rw.total(), 1.0, kWeightSumTolerance);
      const auto got = flatten(rw, n);
      const auto want = oracle::weights(strategy, w0, gp, f1);
      for (std::size_t j = 0; j <= n; ++j) {
        ASSERT_GE(got[j], 0.0);
        ASSERT_NEAR(got[j], want[j], 1e-12) << fusion_strategy_name(strategy) << " j=" << j;
      }
    }
  }
}

TEST(ResolveWeightsTest, ManualW0OneEqualsCorpusOnly) {
  const std::vector<SyntheticQuery> qs{sq(0.5, 0.5, {0.0f, 1.0f}), sq(0.5, 0.5, {1.0f, 1.0f})};
  const EmbeddingVector c({0.3f, -0.7f});
  const auto manual = fuse(c, qs, resolve_weights(FusionSpec(FusionStrategy::kManual, 1.0), qs));
  const auto only = fuse(c, qs, resolve_weights(FusionSpec(FusionStrategy::kCorpusOnly), qs));
  EXPECT_EQ(manual, only);
  EXPECT_EQ(only, c);
}

TEST(ResolveWeightsTest, Errors) {
  EXPECT_EQ(error_code_of([] { resolve_weights(FusionSpec(FusionStrategy::kEqual), {}); }),
            ErrorCode::kEmptyQueries);
  EXPECT_NO_THROW(resolve_weights(FusionSpec(FusionStrategy::kCorpusOnly), {}));
  const std::vector<SyntheticQuery> no_f1{SyntheticQuery(QueryKind::kQuestion, "q?", 0.5)};
  EXPECT_EQ(error_code_of([&] { resolve_weights(FusionSpec(FusionStrategy::kBertScore), no_f1); }),
            ErrorCode::kMissingField);
  EXPECT_NO_THROW(resolve_weights(FusionSpec(FusionStrategy::kManual), no_f1));
  EXPECT_EQ(error_code_of([] { ResolvedWeights(0.5, {{0, 0.4}}); }),
            ErrorCode::kInvariantViolation);
  EXPECT_EQ(error_code_of([] { ResolvedWeights(1.2, {{0, -0.2}}); }),
            ErrorCode::kInvariantViolation);
}

TEST(FuseTest, WeightedSum) {
  const std::vector<SyntheticQuery> qs{sq(0.5, 0.6, {0.0f, 1.0f}), sq(0.5, 0.4, {1.0f, 0.0f})};
  const EmbeddingVector c({1.0f, 1.0f});
  const auto f = fuse(c, qs, resolve_weights(FusionSpec(FusionStrategy::kBertScore), qs));
  EXPECT_FLOAT_EQ(f[0], 0.5f + 0.2f);
  EXPECT_FLOAT_EQ(f[1], 0.5f + 0.3f);
}

TEST(FuseTest, IdenticalInputsGiveThatInput) {
  Rng rng(8);
  for (auto strategy : kAll) {
    for (int trial = 0; trial < 50; ++trial) {
      const auto v = testing::random_vector(rng, 16);
      std::vector<SyntheticQuery> qs;
      const std::size_t n = 1 + rng.below(6);
      for (std::size_t j = 0; j < n; ++j) qs.push_back(sq(1.0 - rng.uniform01(), rng.uniform01(), v));
      const EmbeddingVector c(v);
      const auto f = fuse(c, qs, resolve_weights(FusionSpec(strategy, rng.uniform01()), qs));
      for (std::size_t d = 0; d < v.size(); ++d) {
        ASSERT_NEAR(f[d], v[d], 1e-6 * (1.0 + std::abs(v[d])));
      }
    }
  }
}

TEST(FuseTest, Errors) {
  const EmbeddingVector c({1.0f, 0.0f});
  const std::vector<SyntheticQuery> missing{SyntheticQuery(QueryKind::kQuestion, "q?", 0.5, true)};
  const auto w = resolve_weights(FusionSpec(FusionStrategy::kEqual), missing);
  EXPECT_EQ(error_code_of([&] { fuse(c, missing, w); }), ErrorCode::kMissingEmbedding);
  const std::vector<SyntheticQuery> wrong{sq(0.5, 0.5, {1.0f, 0.0f, 0.0f})};
  EXPECT_EQ(error_code_of([&] { fuse(c, wrong, w); }), ErrorCode::kDimensionMismatch);
}

PassageRecord passage_with(std::vector<SyntheticQuery> qs) {
  const EmbeddingVector e({1.0f, 0.0f});
  PassageRecord p("p", "", "One. Two.");
  p = p.with_sentences({SentenceUnit("p", 0, "One.", EmbeddingVector({1.0f, 0.0f})),
                        SentenceUnit("p", 1, "Two.", EmbeddingVector({0.0f, 1.0f}))});
  return p.with_synthetic_queries(std::move(qs)).with_embedding(e);
}

TEST(FusePassageTest, OnlySurvivorsParticipate) {
  auto failed = sq(0.5, 0.9, {0.0f, 1.0f}).with_filter_verdict(false);
  const auto p = passage_with({sq(0.5, 0.5, {0.0f, 1.0f}), failed});
  EXPECT_EQ(surviving_queries(p).size(), 1u);
  const auto w = passage_weights(p, FusionSpec(FusionStrategy::kManual, 0.6));
  ASSERT_EQ(w.per_query().size(), 1u);
  EXPECT_NEAR(w.per_query()[0].second, 0.4, 1e-12);
}

TEST(FusePassageTest, NoSurvivorsFallsBackToCorpusOnly) {
  const auto p = passage_with({sq(0.5, 0.5).with_filter_verdict(false)});
  const auto w = passage_weights(p, FusionSpec(FusionStrategy::kBertScore));
  EXPECT_EQ(w.w_corpus(), 1.0);
  EXPECT_TRUE(w.per_query().empty());
  const auto fused = fuse_passage(p, FusionSpec(FusionStrategy::kEqual), false);
  EXPECT_EQ(*fused.fused(), *p.embedding());
}

TEST(FusePassageTest, SentenceLevelFusesEverySentence) {
  const auto p = passage_with({sq(0.5, 0.5, {0.0f, 1.0f})});
  const auto fused = fuse_passage(p, FusionSpec(FusionStrategy::kManual, 0.5), true);
  ASSERT_EQ(fused.sentences().size(), 2u);
  EXPECT_EQ(fused.sentences()[0].fused()->values()[0], 0.5f);
  EXPECT_EQ(fused.sentences()[0].fused()->values()[1], 0.5f);
  EXPECT_EQ(fused.sentences()[1].fused()->values()[1], 1.0f);
  EXPECT_FALSE(fused.fused().has_value());
}

TEST(FusePassageTest, MissingEmbeddingsReported) {
  const PassageRecord bare("p", "", "x");
  EXPECT_EQ(error_code_of([&] { fuse_passage(bare, FusionSpec(FusionStrategy::kEqual), false); }),
            ErrorCode::kMissingEmbedding);
  EXPECT_EQ(error_code_of([&] { fuse_passage(bare, FusionSpec(FusionStrategy::kEqual), true); }),
            ErrorCode::kMissingEmbedding);
}

}  // namespace
}  // namespace qfuse
