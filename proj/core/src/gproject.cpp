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


#include "lifelong/gproject.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

namespace lifelong {

void ConstraintSet::add(std::vector<double> row) {
  if (row.size() != dim) throw ContractViolation("ConstraintSet: row dimension mismatch");
  if (!std::all_of(row.begin(), row.end(), [](double v) { return std::isfinite(v); })) {
    throw NumericError("ConstraintSet: non-finite constraint row");
  }
  rows.push_back(std::move(row));
}

namespace {

double largest_eigenvalue(const std::vector<double>& h, std::size_t k) {
  std::vector<double> x(k, 1.0 / std::sqrt(static_cast<double>(k)));
  std::vector<double> y(k);
  double lambda = 0.0;
  for (int it = 0; it < 200; ++it) {
    for (std::size_t i = 0; i < k; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < k; ++j) acc += h[i * k + j] * x[j];
      y[i] = acc;
    }
    const double ny = norm(y);
    if (ny == 0.0) return 0.0;
    const double next = dot(x, y);
    for (std::size_t i = 0; i < k; ++i) x[i] = y[i] / ny;
    if (it > 5 && std::abs(next - lambda) <= 1e-12 * std::abs(next)) {
      lambda = next;
      break;
    }
    lambda = next;
  }
  // Power iteration approaches from below; a Gershgorin row bound caps the
  // overshoot risk of a too-large step.
  double gersh = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < k; ++j) row += std::abs(h[i * k + j]);
    gersh = std::max(gersh, row);
  }
  return std::min(lambda * 1.01, gersh);
}


/// Lawson-Hanson active-set NNLS for the same dual, min_{v >= 0} ||G'v + g||^2.
/// Finite and exact up to rounding; used when the iterative solver stalls.
std::vector<double> dual_nnls(std::span<const double> g, const ConstraintSet& constraints) {
  const auto n = static_cast<Eigen::Index>(g.size());
  const auto k = static_cast<Eigen::Index>(constraints.size());
  Eigen::MatrixXd a(n, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    for (Eigen::Index d = 0; d < n; ++d) a(d, j) = constraints.rows[static_cast<std::size_t>(j)][static_cast<std::size_t>(d)];
  }
  const Eigen::VectorXd b = -Eigen::Map<const Eigen::VectorXd>(g.data(), n);
  const double eps = 1e-12 * std::max(1.0, a.cwiseAbs().maxCoeff() * std::max(1.0, b.cwiseAbs().maxCoeff()));

  Eigen::VectorXd x = Eigen::VectorXd::Zero(k);
  std::vector<bool> passive(static_cast<std::size_t>(k), false);
  auto solve_passive = [&]() {
    std::vector<Eigen::Index> cols;
    for (Eigen::Index j = 0; j < k; ++j) {
      if (passive[static_cast<std::size_t>(j)]) cols.push_back(j);
    }
    Eigen::MatrixXd ap(n, static_cast<Eigen::Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) ap.col(static_cast<Eigen::Index>(c)) = a.col(cols[c]);
    const Eigen::VectorXd zp = ap.completeOrthogonalDecomposition().solve(b);
    Eigen::VectorXd z = Eigen::VectorXd::Zero(k);
    for (std::size_t c = 0; c < cols.size(); ++c) z(cols[c]) = zp(static_cast<Eigen::Index>(c));
    return z;
  };

  for (Eigen::Index outer = 0; outer < 3 * k + 3; ++outer) {
    const Eigen::VectorXd w = a.transpose() * (b - a * x);
    Eigen::Index t = -1;
    double best = eps;
    for (Eigen::Index j = 0; j < k; ++j) {
      if (!passive[static_cast<std::size_t>(j)] && w(j) > best) {
        best = w(j);
        t = j;
      }
    }
    if (t < 0) break;
    passive[static_cast<std::size_t>(t)] = true;
    for (Eigen::Index inner = 0; inner <= k; ++inner) {
      const Eigen::VectorXd z = solve_passive();
      double alpha = 1.0;
      bool all_positive = true;
      for (Eigen::Index j = 0; j < k; ++j) {
        if (passive[static_cast<std::size_t>(j)] && z(j) <= 0.0) {
          all_positive = false;
          const double denom = x(j) - z(j);
          if (denom > 0.0) alpha = std::min(alpha, x(j) / denom);
        }
      }
      if (all_positive) {
        x = z;
        break;
      }
      x += alpha * (z - x);
      for (Eigen::Index j = 0; j < k; ++j) {
        if (passive[static_cast<std::size_t>(j)] && x(j) <= eps) {
          passive[static_cast<std::size_t>(j)] = false;
          x(j) = 0.0;
        }
      }
    }
  }
  return {x.data(), x.data() + k};
}
}  // namespace

ProjectionResult gem_project(std::span<const double> g, const ConstraintSet& constraints, double tol,
                             std::size_t max_iters) {
  if (g.size() != constraints.dim) throw ContractViolation("gem_project: gradient/constraint dimension mismatch");
  if (!(tol > 0.0)) throw ContractViolation("gem_project: tolerance must be positive");
  const std::size_t k = constraints.size();
  ProjectionResult result;
  result.g_tilde.assign(g.begin(), g.end());
  result.dual.assign(k, 0.0);

  // G g: the dual linear term, also <g, row_j>.
  std::vector<double> q(k);
  bool feasible = true;
  for (std::size_t j = 0; j < k; ++j) {
    q[j] = dot(constraints.rows[j], g);
    if (q[j] < 0.0) feasible = false;
  }
  if (feasible) return result;

  std::vector<double> h(k * k);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i; j < k; ++j) {
      h[i * k + j] = h[j * k + i] = dot(constraints.rows[i], constraints.rows[j]);
    }
  }
  const double lambda = largest_eigenvalue(h, k);
  const double step = 1.0 / lambda;

  auto gradient_at = [&](const std::vector<double>& x, std::vector<double>& out) {
    for (std::size_t i = 0; i < k; ++i) {
      double acc = q[i];
      for (std::size_t j = 0; j < k; ++j) acc += h[i * k + j] * x[j];
      out[i] = acc;
    }
  };

  // Accelerated projected gradient (FISTA) with gradient-based restart.
  std::vector<double> v(k, 0.0);
  std::vector<double> grad(q);  // H v + q at v = 0
  std::vector<double> y(v);
  std::vector<double> grad_y(q);
  std::vector<double> v_prev(v);
  std::vector<double> best_v(v);
  double best_score = std::numeric_limits<double>::infinity();
  double momentum = 1.0;

  // Projected dual gradient scaled by max(1, |v|_1), which bounds the
  // primal error |g_tilde - g_tilde*|^2 up to a constant.
  auto stationarity = [&](const std::vector<double>& vv, const std::vector<double>& gr) {
    double worst = 0.0;
    double mass = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const double r = vv[j] > 0.0 ? std::abs(gr[j]) : std::max(0.0, -gr[j]);
      worst = std::max(worst, r);
      mass += vv[j];
    }
    return worst * std::max(1.0, mass);
  };

  std::size_t iter = 0;
  bool converged = false;
  for (; iter < max_iters; ++iter) {
    const double s = stationarity(v, grad);
    if (s < best_score) {
      best_score = s;
      best_v = v;
    }
    if (s <= tol) {
      converged = true;
      break;
    }
    v_prev = v;
    for (std::size_t j = 0; j < k; ++j) v[j] = std::max(0.0, y[j] - step * grad_y[j]);
    double restart = 0.0;
    for (std::size_t j = 0; j < k; ++j) restart += grad_y[j] * (v[j] - v_prev[j]);
    const double next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
    const double beta = restart > 0.0 ? 0.0 : (momentum - 1.0) / next;
    momentum = restart > 0.0 ? 1.0 : next;
    for (std::size_t j = 0; j < k; ++j) y[j] = v[j] + beta * (v[j] - v_prev[j]);
    gradient_at(v, grad);
    gradient_at(y, grad_y);
  }
  if (converged) {
    best_v = v;
  } else {
    const double s = stationarity(v, grad);
    if (s < best_score) {
      best_score = s;
      best_v = v;
    }
    auto polished = dual_nnls(g, constraints);
    std::vector<double> polished_grad(k);
    gradient_at(polished, polished_grad);
    const double ps = stationarity(polished, polished_grad);
    if (ps < best_score) {
      best_score = ps;
      best_v = std::move(polished);
      result.polished = true;
    }
    converged = best_score <= tol;
  }

  result.dual = best_v;
  result.iterations = iter;
  result.converged = converged;
  for (std::size_t j = 0; j < k; ++j) {
    if (best_v[j] == 0.0) continue;
    const auto& row = constraints.rows[j];
    for (std::size_t d = 0; d < g.size(); ++d) result.g_tilde[d] += best_v[j] * row[d];
  }
  for (std::size_t j = 0; j < k; ++j) {
    result.max_violation = std::max(result.max_violation, -dot(result.g_tilde, constraints.rows[j]));
  }
  return result;
}

AgemResult agem_project(std::span<const double> g, std::span<const double> g_ref) {
  if (g.size() != g_ref.size()) throw ContractViolation("agem_project: dimension mismatch");
  AgemResult out;
  out.g_tilde.assign(g.begin(), g.end());
  const double ref_sq = dot(g_ref, g_ref);
  if (ref_sq == 0.0) {
    ++numeric_warnings().zero_reference_gradient;
    out.zero_reference = true;
    return out;
  }
  const double inner = dot(g, g_ref);
  if (inner >= 0.0) return out;
  const double coef = inner / ref_sq;
  for (std::size_t i = 0; i < g.size(); ++i) out.g_tilde[i] = g[i] - coef * g_ref[i];
  out.projected = true;
  return out;
}

GradVector task_gradient(const ParamVector& params, const EntriesLoss& loss,
                         std::span<const MemoryEntry* const> entries) {
  if (entries.empty()) throw ContractViolation("task_gradient: no stored entries for this task");
  const auto task = entries.front()->task_id;
  for (const auto* e : entries) {
    if (e->task_id != task) throw ContractViolation("task_gradient: entries span several tasks");
  }
  Tape tape(params);
  const Var total = loss(tape, entries);
  return tape.backward(total, 1.0 / static_cast<double>(entries.size()));
}

}  // namespace lifelong
