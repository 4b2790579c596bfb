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

// Monte-Carlo check of the query-mean argument behind corpus fusion.
//
// Each group i has a center theta_i ~ N(0, center_scale^2 I) and m query
// embeddings Q_ij = theta_i + N(0, sigma^2 I). The passage embedding is
// taken to be one of its own queries, C_i = Q_i1. Then
//
//   single estimator  g = C_i                      E|g - theta|^2 = sigma^2 d
//   mean estimator    T = (1/m) sum_j Q_ij         E|T - theta|^2 = sigma^2 d / m
//
// and the fused representation w0 * C_i + (1 - w0) * mean(Q_i2..Q_im)
// equals T at w0 = 1/m.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace qfuse {

class GroupModel {
 public:
  /// n_groups, dim, m >= 1; sigma >= 0; center_scale > 0.
  GroupModel(std::size_t n_groups, std::size_t dim, std::size_t m, double sigma,
             double center_scale, std::uint64_t seed);

  std::size_t n_groups() const noexcept { return n_groups_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t m() const noexcept { return m_; }
  double sigma() const noexcept { return sigma_; }
  double center_scale() const noexcept { return center_scale_; }
  std::uint64_t seed() const noexcept { return seed_; }

  GroupModel with_seed(std::uint64_t seed) const;

 private:
  std::size_t n_groups_;
  std::size_t dim_;
  std::size_t m_;
  double sigma_;
  double center_scale_;
  std::uint64_t seed_;
};

struct EstimatorMse {
  double mse_single = 0.0;  // mean over groups of |C_i - theta_i|^2
  double mse_mean = 0.0;    // mean over groups of |T_i - theta_i|^2

  double ratio() const { return mse_mean / mse_single; }
};

/// Groups draw from independent streams derived from the seed, so results
/// do not depend on `threads`.
EstimatorMse simulate_estimators(const GroupModel& model, std::size_t threads = 1);

struct RecallPoint {
  double w0;
  double recall_at_1;
};

/// For every w0, the fraction of held-out probes (one per group, drawn like
/// a query) whose cosine-nearest representation belongs to their own group.
/// Requires m >= 2.
std::vector<RecallPoint> simulate_retrieval(const GroupModel& model,
                                            std::span<const double> w0_grid,
                                            std::size_t threads = 1);

}  // namespace qfuse
