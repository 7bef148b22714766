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
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <vector>

#include "lifelong/data.hpp"
#include "lifelong/rng.hpp"

namespace lifelong {

struct ClusterAssignment {
  std::vector<std::vector<double>> centroids;
  std::vector<std::size_t> assignment;  // item index -> centroid index
  std::size_t iterations = 0;
  bool converged = false;
  /// Inertia after each assign step (monotone non-increasing).
  std::vector<double> inertia_trace;

  double inertia(std::span<const std::vector<double>> points) const;
};

double squared_euclidean(std::span<const double> a, std::span<const double> b);

/// Lloyd's algorithm with k-means++ seeding. Empty clusters are repaired by
/// moving the point farthest from its centroid (among clusters with more than
/// one member) into the empty cluster. Requires 1 <= k <= points.size().
ClusterAssignment kmeans(std::span<const std::vector<double>> points, std::size_t k, std::uint64_t seed,
                         std::size_t max_iters = 100);

struct Selection {
  std::vector<std::size_t> indices;  // into the task's sample list, ascending for random
  bool clamped = false;              // b exceeded the task size
};

/// b distinct indices uniformly without replacement.
Selection select_random(std::size_t task_size, std::size_t b, std::uint64_t seed);
/// One representative per k-means cluster (k = b): the member nearest its
/// centroid, ties to the lowest index.
Selection select_kmeans(std::span<const std::vector<double>> embeddings, std::size_t b, std::uint64_t seed);
/// Greedy herding towards the embedding mean.
Selection select_icarl(std::span<const std::vector<double>> embeddings, std::size_t b);

struct MemoryEntry {
  Sample sample;
  std::size_t task_id = 0;
  std::vector<double> anchor;

  bool operator==(const MemoryEntry&) const = default;
};

enum class ReplayMode { kTaskLevel, kSampleLevel };

/// Budgeted store of past-task samples. Each task gets a fixed quota.
class EpisodicMemory {
 public:
  EpisodicMemory() = default;
  EpisodicMemory(std::size_t budget_total, std::size_t quota_per_task);

  std::size_t budget_total() const { return budget_total_; }
  std::size_t quota_per_task() const { return quota_per_task_; }
  std::size_t total() const { return total_; }
  bool empty() const { return total_ == 0; }

  /// Appends `selected` under `task_id`. Throws ContractViolation on a length
  /// mismatch or if either budget would be exceeded.
  void store_task(std::size_t task_id, std::vector<Sample> selected, std::vector<std::vector<double>> anchors);

  const std::map<std::size_t, std::vector<MemoryEntry>>& by_task() const { return entries_; }
  std::vector<const MemoryEntry*> all() const;
  std::vector<std::size_t> task_ids() const;

  void write_jsonl(std::ostream& out) const;

 private:
  std::size_t budget_total_ = 0;
  std::size_t quota_per_task_ = 0;
  std::size_t total_ = 0;
  std::map<std::size_t, std::vector<MemoryEntry>> entries_;
};

/// Draws a replay mini-batch. Task level: one stored task uniformly, then
/// min(batch, its size) entries. Sample level: min(batch, total) entries
/// uniformly over the whole memory. Empty memory yields an empty batch.
std::vector<const MemoryEntry*> sample_replay(const EpisodicMemory& mem, ReplayMode mode, std::size_t batch,
                                              Rng& rng);

/// Uniform sample of `count` distinct indices in [0, n), in draw order.
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t count, Rng& rng);

}  // namespace lifelong
