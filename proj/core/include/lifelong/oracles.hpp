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

namespace lifelong::oracles {

/// Exact GEM projection by enumerating every active set S of constraints:
/// project g onto {x : <x, r_j> = 0 for j in S} (least squares through a
/// complete orthogonal decomposition), keep feasible candidates, return the
/// closest one to g.
std::vector<double> gem_projection_bruteforce(std::span<const double> g,
                                              const std::vector<std::vector<double>>& rows,
                                              double feasibility_tol = 1e-9);

/// Central finite differences of `f` at `x` with step `h`.
std::vector<double> central_difference(const std::function<double(std::span<const double>)>& f,
                                       std::span<const double> x, double h = 1e-4);

/// Minimal k=2 inertia over every split of the points into two non-empty groups.
double best_two_partition_inertia(const std::vector<std::vector<double>>& points);

/// Greedy herding re-derived independently: at each step every remaining
/// point is scored by the distance of the would-be exemplar mean to the
/// overall mean; lowest index wins ties.
std::vector<std::size_t> herding_reference(const std::vector<std::vector<double>>& points, std::size_t b);

/// Adjusted Rand index between two labelings of the same items.
double adjusted_rand_index(std::span<const std::size_t> a, std::span<const std::size_t> b);

}  // namespace lifelong::oracles
