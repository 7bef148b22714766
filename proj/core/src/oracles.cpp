// Copyright (c) 2026 The Lifelong Authors. All Rights Reserved.
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


#include "lifelong/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include <Eigen/Dense>

namespace lifelong::oracles {

std::vector<double> gem_projection_bruteforce(std::span<const double> g,
                                              const std::vector<std::vector<double>>& rows,
                                              double feasibility_tol) {
  const auto n = static_cast<Eigen::Index>(g.size());
  const std::size_t k = rows.size();
  if (k > 20) throw std::invalid_argument("gem_projection_bruteforce: too many constraints");
  const Eigen::Map<const Eigen::VectorXd> gv(g.data(), n);

  Eigen::VectorXd best = Eigen::VectorXd::Zero(n);  // always feasible
  double best_dist = gv.squaredNorm();
  for (std::size_t mask = 0; mask < (std::size_t{1} << k); ++mask) {
    std::vector<std::size_t> active;
    for (std::size_t j = 0; j < k; ++j) {
      if (mask & (std::size_t{1} << j)) active.push_back(j);
    }
    Eigen::VectorXd x = gv;
    if (!active.empty()) {
      Eigen::MatrixXd r(static_cast<Eigen::Index>(active.size()), n);
      for (std::size_t a = 0; a < active.size(); ++a) {
        for (Eigen::Index d = 0; d < n; ++d) r(static_cast<Eigen::Index>(a), d) = rows[active[a]][static_cast<std::size_t>(d)];
      }
      // x = g - R^T y with y the minimum-norm least-squares solution of R R^T y = R g.
      const Eigen::MatrixXd gram = r * r.transpose();
      const Eigen::VectorXd y = gram.completeOrthogonalDecomposition().solve(r * gv);
      x = gv - r.transpose() * y;
    }
    bool feasible = true;
    for (std::size_t j = 0; j < k && feasible; ++j) {
      const Eigen::Map<const Eigen::VectorXd> rj(rows[j].data(), n);
      feasible = x.dot(rj) >= -feasibility_tol;
    }
    if (!feasible) continue;
    const double dist = (x - gv).squaredNorm();
    if (dist < best_dist) {
      best_dist = dist;
      best = x;
    }
  }
  return {best.data(), best.data() + n};
}

std::vector<double> central_difference(const std::function<double(std::span<const double>)>& f,
                                       std::span<const double> x, double h) {
  std::vector<double> probe(x.begin(), x.end());
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + h;
    const double up = f(probe);
    probe[i] = orig - h;
    const double down = f(probe);
    probe[i] = orig;
    out[i] = (up - down) / (2.0 * h);
  }
  return out;
}

namespace {

double group_inertia(const std::vector<std::vector<double>>& points, const std::vector<std::size_t>& members) {
  if (members.empty()) return 0.0;
  const std::size_t d = points[0].size();
  std::vector<double> mean(d, 0.0);
  for (auto i : members) {
    for (std::size_t j = 0; j < d; ++j) mean[j] += points[i][j];
  }
  for (auto& v : mean) v /= static_cast<double>(members.size());
  double acc = 0.0;
  for (auto i : members) {
    for (std::size_t j = 0; j < d; ++j) acc += (points[i][j] - mean[j]) * (points[i][j] - mean[j]);
  }
  return acc;
}

}  // namespace

double best_two_partition_inertia(const std::vector<std::vector<double>>& points) {
  const std::size_t n = points.size();
  if (n < 2 || n > 20) throw std::invalid_argument("best_two_partition_inertia: need 2..20 points");
  double best = std::numeric_limits<double>::infinity();
  // Point 0 always sits in group A, which removes mirrored duplicates.
  for (std::size_t mask = 0; mask < (std::size_t{1} << (n - 1)); ++mask) {
    std::vector<std::size_t> a{0};
    std::vector<std::size_t> b;
    for (std::size_t i = 1; i < n; ++i) ((mask >> (i - 1)) & 1 ? b : a).push_back(i);
    if (b.empty()) continue;
    best = std::min(best, group_inertia(points, a) + group_inertia(points, b));
  }
  return best;
}

std::vector<std::size_t> herding_reference(const std::vector<std::vector<double>>& points, std::size_t b) {
  const auto n = static_cast<Eigen::Index>(points.size());
  if (n == 0) return {};
  const auto d = static_cast<Eigen::Index>(points[0].size());
  Eigen::MatrixXd p(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) p(i, j) = points[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  const Eigen::RowVectorXd mu = p.colwise().mean();
  Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(d);
  std::vector<bool> used(points.size(), false);
  std::vector<std::size_t> picks;
  for (std::size_t t = 0; t < std::min<std::size_t>(b, points.size()); ++t) {
    Eigen::Index best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (used[static_cast<std::size_t>(i)]) continue;
      const double dist = (mu - (sum + p.row(i)) / static_cast<double>(t + 1)).norm();
      if (dist < best_d) {
        best_d = dist;
        best = i;
      }
    }
    used[static_cast<std::size_t>(best)] = true;
    sum += p.row(best);
    picks.push_back(static_cast<std::size_t>(best));
  }
  return picks;
}

double adjusted_rand_index(std::span<const std::size_t> a, std::span<const std::size_t> b) {
  if (a.size() != b.size()) throw std::invalid_argument("adjusted_rand_index: length mismatch");
  auto c2 = [](double x) { return x * (x - 1.0) / 2.0; };
  std::map<std::pair<std::size_t, std::size_t>, double> joint;
  std::map<std::size_t, double> ra;
  std::map<std::size_t, double> rb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    joint[{a[i], b[i]}] += 1.0;
    ra[a[i]] += 1.0;
    rb[b[i]] += 1.0;
  }
  double index = 0.0;
  for (const auto& [key, v] : joint) index += c2(v);
  double sa = 0.0;
  double sb = 0.0;
  for (const auto& [key, v] : ra) sa += c2(v);
  for (const auto& [key, v] : rb) sb += c2(v);
  const double expected = sa * sb / c2(static_cast<double>(a.size()));
  const double max_index = 0.5 * (sa + sb);
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

}  // namespace lifelong::oracles
