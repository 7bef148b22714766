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


#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "lifelong/memory.hpp"
#include "lifelong/numgrad.hpp"

namespace lifelong {

/// One row per previous task (its averaged memory gradient).
struct ConstraintSet {
  std::size_t dim = 0;
  std::vector<std::vector<double>> rows;

  explicit ConstraintSet(std::size_t d) : dim(d) {}
  void add(std::vector<double> row);
  std::size_t size() const { return rows.size(); }
};

struct ProjectionResult {
  std::vector<double> g_tilde;
  std::vector<double> dual;  // one multiplier per constraint, all >= 0
  std::size_t iterations = 0;
  double max_violation = 0.0;  // max_j max(0, -<g_tilde, row_j>)
  bool converged = true;
  bool polished = false;  // the NNLS fallback supplied the answer
};

inline constexpr double kGemTolerance = 1e-6;
inline constexpr std::size_t kGemMaxIters = 1000;

/// Closest vector to g with <g_tilde, row_j> >= 0 for every row.
///
/// Solves the dual  min_{v >= 0} 1/2 v'(G G')v + v'G g  by accelerated projected gradient
/// (FISTA with gradient restart) with step 1/lambda_max(G G') (power iteration), then g_tilde = g + G'v.
/// Stops when the projected dual gradient (which is G g_tilde), scaled by
/// max(1, |v|_1), is within `tol` of stationarity. On hitting `max_iters` an active-set NNLS solve of
/// the same dual is tried and the better of the two is kept; converged is
/// false if neither meets `tol`.
ProjectionResult gem_project(std::span<const double> g, const ConstraintSet& constraints,
                             double tol = kGemTolerance, std::size_t max_iters = kGemMaxIters);

struct AgemResult {
  std::vector<double> g_tilde;
  bool projected = false;
  bool zero_reference = false;
};

/// Single-constraint closed form: g if <g, g_ref> >= 0, otherwise
/// g - (<g, g_ref> / <g_ref, g_ref>) g_ref. A zero g_ref returns g and bumps
/// numeric_warnings().zero_reference_gradient.
AgemResult agem_project(std::span<const double> g, std::span<const double> g_ref);

/// Records the summed loss of `entries` on the tape and returns it.
using EntriesLoss = std::function<Var(Tape&, std::span<const MemoryEntry* const>)>;

/// Mean per-entry loss gradient over `entries` at the current parameters.
GradVector task_gradient(const ParamVector& params, const EntriesLoss& loss,
                         std::span<const MemoryEntry* const> entries);

}  // namespace lifelong
