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

#include "qfuse/rbsim.hpp"

#include <cmath>
#include <string>

#include "qfuse/error.hpp"
#include "qfuse/parallel.hpp"
#include "qfuse/random.hpp"

namespace qfuse {

namespace {

struct GroupDraw {
  std::vector<double> center;
  std::vector<double> queries;  // m x dim, row 0 is the passage
  std::vector<double> probe;
};

GroupDraw draw_group(const GroupModel& model, std::size_t group, bool with_probe) {
  Rng rng(derive_seed(model.seed(), group));
  const std::size_t dim = model.dim();
  GroupDraw g;
  g.center.resize(dim);
  for (double& c : g.center) c = model.center_scale() * rng.normal();
  g.queries.resize(model.m() * dim);
  for (std::size_t j = 0; j < model.m(); ++j) {
    for (std::size_t d = 0; d < dim; ++d) {
      g.queries[j * dim + d] = g.center[d] + model.sigma() * rng.normal();
    }
  }
  if (with_probe) {
    g.probe.resize(dim);
    for (std::size_t d = 0; d < dim; ++d) g.probe[d] = g.center[d] + model.sigma() * rng.normal();
  }
  return g;
}

void normalize(std::span<double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  const double n = std::sqrt(s);
  if (n == 0.0) return;
  for (double& x : v) x /= n;
}

}  // namespace

GroupModel::GroupModel(std::size_t n_groups, std::size_t dim, std::size_t m, double sigma,
                       double center_scale, std::uint64_t seed)
    : n_groups_(n_groups),
      dim_(dim),
      m_(m),
      sigma_(sigma),
      center_scale_(center_scale),
      seed_(seed) {
  if (n_groups_ == 0 || dim_ == 0 || m_ == 0) {
    fail(ErrorCode::kInvalidArgument, "group model: n_groups, dim and m must be positive");
  }
  if (!(std::isfinite(sigma_) && sigma_ >= 0.0)) {
    fail(ErrorCode::kInvalidArgument, "group model: sigma must be finite and non-negative");
  }
  if (!(std::isfinite(center_scale_) && center_scale_ > 0.0)) {
    fail(ErrorCode::kInvalidArgument, "group model: center_scale must be positive");
  }
}

GroupModel GroupModel::with_seed(std::uint64_t seed) const {
  return GroupModel(n_groups_, dim_, m_, sigma_, center_scale_, seed);
}

EstimatorMse simulate_estimators(const GroupModel& model, std::size_t threads) {
  const std::size_t n = model.n_groups();
  const std::size_t dim = model.dim();
  const std::size_t m = model.m();
  std::vector<double> single(n);
  std::vector<double> mean(n);

  parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
    std::vector<double> avg(dim);
    for (std::size_t i = begin; i < end; ++i) {
      const GroupDraw g = draw_group(model, i, false);
      std::fill(avg.begin(), avg.end(), 0.0);
      for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t d = 0; d < dim; ++d) avg[d] += g.queries[j * dim + d];
      }
      double se_single = 0.0;
      double se_mean = 0.0;
      for (std::size_t d = 0; d < dim; ++d) {
        avg[d] /= static_cast<double>(m);
        const double a = g.queries[d] - g.center[d];
        const double b = avg[d] - g.center[d];
        se_single += a * a;
        se_mean += b * b;
      }
      single[i] = se_single;
      mean[i] = se_mean;
    }
  });

  EstimatorMse out;
  for (std::size_t i = 0; i < n; ++i) {
    out.mse_single += single[i];
    out.mse_mean += mean[i];
  }
  out.mse_single /= static_cast<double>(n);
  out.mse_mean /= static_cast<double>(n);
  return out;
}

std::vector<RecallPoint> simulate_retrieval(const GroupModel& model,
                                            std::span<const double> w0_grid,
                                            std::size_t threads) {
  if (model.m() < 2) fail(ErrorCode::kInvalidArgument, "simulate_retrieval needs m >= 2");
  for (double w0 : w0_grid) {
    if (!(w0 >= 0.0 && w0 <= 1.0)) {
      fail(ErrorCode::kInvalidArgument, "simulate_retrieval: w0 must lie in [0, 1]");
    }
  }
  const std::size_t n = model.n_groups();
  const std::size_t dim = model.dim();
  const std::size_t m = model.m();

  // Per group: passage C_i, mean of the other m - 1 queries, unit probe.
  std::vector<double> passage(n * dim);
  std::vector<double> others(n * dim);
  std::vector<double> probes(n * dim);
  parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const GroupDraw g = draw_group(model, i, true);
      for (std::size_t d = 0; d < dim; ++d) {
        passage[i * dim + d] = g.queries[d];
        double s = 0.0;
        for (std::size_t j = 1; j < m; ++j) s += g.queries[j * dim + d];
        others[i * dim + d] = s / static_cast<double>(m - 1);
        probes[i * dim + d] = g.probe[d];
      }
      normalize(std::span<double>(probes).subspan(i * dim, dim));
    }
  });

  std::vector<RecallPoint> out;
  out.reserve(w0_grid.size());
  std::vector<double> reps(n * dim);
  for (double w0 : w0_grid) {
    for (std::size_t i = 0; i < n * dim; ++i) reps[i] = w0 * passage[i] + (1.0 - w0) * others[i];
    for (std::size_t i = 0; i < n; ++i) normalize(std::span<double>(reps).subspan(i * dim, dim));

    std::vector<unsigned char> hit(n, 0);
    parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
      for (std::size_t p = begin; p < end; ++p) {
        std::size_t best = 0;
        double best_score = -2.0;
        for (std::size_t i = 0; i < n; ++i) {
          double dot = 0.0;
          for (std::size_t d = 0; d < dim; ++d) dot += probes[p * dim + d] * reps[i * dim + d];
          if (dot > best_score) {
            best_score = dot;
            best = i;
          }
        }
        hit[p] = best == p ? 1 : 0;
      }
    });
    std::size_t hits = 0;
    for (unsigned char h : hit) hits += h;
    out.push_back({w0, static_cast<double>(hits) / static_cast<double>(n)});
  }
  return out;
}

}  // namespace qfuse
