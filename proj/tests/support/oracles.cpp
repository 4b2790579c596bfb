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

#include "oracles.hpp"

#include <algorithm>
#include <cmath>

namespace qfuse::oracle {

double ndcg(const std::vector<std::string>& ranking, const Grades& grades, std::size_t k) {
  auto grade = [&](const std::string& id) {
    auto it = grades.find(id);
    return it == grades.end() ? 0 : it->second;
  };
  double dcg = 0.0;
  for (std::size_t i = 0; i < ranking.size() && i < k; ++i) {
    dcg += (std::pow(2.0, grade(ranking[i])) - 1.0) / (std::log(i + 2.0) / std::log(2.0));
  }
  std::vector<int> all;
  for (const auto& kv : grades) all.push_back(kv.second);
  std::sort(all.rbegin(), all.rend());
  double idcg = 0.0;
  for (std::size_t i = 0; i < all.size() && i < k; ++i) {
    idcg += (std::pow(2.0, all[i]) - 1.0) / (std::log(i + 2.0) / std::log(2.0));
  }
  return dcg / idcg;
}

double mrr(const std::vector<std::string>& ranking, const Grades& grades, std::size_t k) {
  for (std::size_t i = 0; i < ranking.size() && i < k; ++i) {
    auto it = grades.find(ranking[i]);
    if (it != grades.end() && it->second > 0) return 1.0 / (i + 1.0);
  }
  return 0.0;
}

double recall(const std::vector<std::string>& ranking, const Grades& grades, std::size_t k) {
  int total = 0;
  for (const auto& kv : grades) total += kv.second > 0;
  int found = 0;
  for (std::size_t i = 0; i < ranking.size() && i < k; ++i) {
    auto it = grades.find(ranking[i]);
    found += it != grades.end() && it->second > 0;
  }
  return static_cast<double>(found) / total;
}

std::vector<double> weights(FusionStrategy strategy, double w0, const std::vector<double>& gen_prob,
                            const std::vector<double>& f1) {
  const std::size_t n = std::max(gen_prob.size(), f1.size());
  std::vector<double> w(n + 1, 0.0);
  switch (strategy) {
    case FusionStrategy::kCorpusOnly:
      w[0] = 1.0;
      break;
    case FusionStrategy::kEqual:
      for (auto& x : w) x = 1.0 / (n + 1.0);
      break;
    case FusionStrategy::kManual:
      w[0] = w0;
      for (std::size_t j = 1; j <= n; ++j) w[j] = (1.0 - w0) / n;
      break;
    case FusionStrategy::kGenProb: {
      double s = 0.0;
      for (double p : gen_prob) s += p;
      w[0] = w0;
      for (std::size_t j = 1; j <= n; ++j) w[j] = (1.0 - w0) * gen_prob[j - 1] / s;
      break;
    }
    case FusionStrategy::kBertScore: {
      double s = 1.0;
      for (double f : f1) s += f;
      w[0] = 1.0 / s;
      for (std::size_t j = 1; j <= n; ++j) w[j] = f1[j - 1] / s;
      break;
    }
    case FusionStrategy::kBertScoreSoftmax: {
      double s = std::exp(1.0);
      for (double f : f1) s += std::exp(f);
      w[0] = std::exp(1.0) / s;
      for (std::size_t j = 1; j <= n; ++j) w[j] = std::exp(f1[j - 1]) / s;
      break;
    }
  }
  return w;
}

std::vector<std::pair<std::string, double>> rank(const std::vector<std::vector<double>>& rows,
                                                 const std::vector<std::string>& row_passage,
                                                 const std::vector<double>& query, std::size_t k) {
  long double qn = 0.0L;
  for (double x : query) qn += static_cast<long double>(x) * x;
  qn = std::sqrt(qn);
  std::map<std::string, double> best;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    long double dot = 0.0L, rn = 0.0L;
    for (std::size_t d = 0; d < query.size(); ++d) {
      dot += static_cast<long double>(rows[r][d]) * query[d];
      rn += static_cast<long double>(rows[r][d]) * rows[r][d];
    }
    const double s = static_cast<double>(dot / (qn * std::sqrt(rn)));
    auto it = best.find(row_passage[r]);
    if (it == best.end() || s > it->second) best[row_passage[r]] = s;
  }
  std::vector<std::pair<std::string, double>> out(best.begin(), best.end());
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (out.size() > k) out.resize(k);
  return out;
}

}  // namespace qfuse::oracle
