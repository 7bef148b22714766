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


#include "lifelong/memory.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <ostream>

#include <nlohmann/json.hpp>

namespace lifelong {

double squared_euclidean(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ContractViolation("squared_euclidean: dimension mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

double ClusterAssignment::inertia(std::span<const std::vector<double>> points) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) acc += squared_euclidean(points[i], centroids[assignment[i]]);
  return acc;
}

namespace {

std::vector<std::vector<double>> kmeanspp_seed(std::span<const std::vector<double>> points, std::size_t k,
                                               Rng& rng) {
  const std::size_t n = points.size();
  std::vector<std::vector<double>> centroids;
  std::vector<bool> chosen(n, false);
  std::size_t first = uniform_index(rng, n);
  centroids.push_back(points[first]);
  chosen[first] = true;
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = squared_euclidean(points[i], centroids[0]);
  while (centroids.size() < k) {
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    std::size_t pick = n;
    if (total > 0.0) {
      const double u = uniform01(rng) * total;
      double cum = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (d2[i] <= 0.0) continue;
        cum += d2[i];
        pick = i;
        if (cum > u) break;
      }
    } else {
      // Every point coincides with a centroid: take the lowest unused index.
      for (std::size_t i = 0; i < n; ++i) {
        if (!chosen[i]) {
          pick = i;
          break;
        }
      }
    }
    chosen[pick] = true;
    centroids.push_back(points[pick]);
    for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], squared_euclidean(points[i], centroids.back()));
  }
  return centroids;
}

void repair_empty_clusters(std::span<const std::vector<double>> points, ClusterAssignment& ca) {
  const std::size_t k = ca.centroids.size();
  std::vector<std::size_t> counts(k, 0);
  for (auto c : ca.assignment) ++counts[c];
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] != 0) continue;
    std::size_t far = points.size();
    double far_d = -1.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const auto owner = ca.assignment[i];
      if (counts[owner] <= 1) continue;
      const double d = squared_euclidean(points[i], ca.centroids[owner]);
      if (d > far_d) {
        far_d = d;
        far = i;
      }
    }
    --counts[ca.assignment[far]];
    ca.assignment[far] = c;
    counts[c] = 1;
    ca.centroids[c] = points[far];
  }
}

}  // namespace

ClusterAssignment kmeans(std::span<const std::vector<double>> points, std::size_t k, std::uint64_t seed,
                         std::size_t max_iters) {
  if (k == 0 || k > points.size()) {
    throw ContractViolation("kmeans: need 1 <= k <= number of points (k=" + std::to_string(k) +
                            ", points=" + std::to_string(points.size()) + ")");
  }
  const std::size_t dim = points[0].size();
  for (const auto& p : points) {
    if (p.size() != dim) throw ContractViolation("kmeans: points have different dimensions");
  }
  Rng rng(seed);
  ClusterAssignment ca;
  ca.centroids = kmeanspp_seed(points, k, rng);
  ca.assignment.assign(points.size(), k);  // sentinel: nothing assigned yet

  std::vector<std::size_t> next(points.size());
  for (std::size_t iter = 0; iter < std::max<std::size_t>(max_iters, 1); ++iter) {
    ++ca.iterations;
    for (std::size_t i = 0; i < points.size(); ++i) {
      std::size_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double d = squared_euclidean(points[i], ca.centroids[c]);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      next[i] = best;
    }
    const auto previous = ca.assignment;
    ca.assignment = next;
    repair_empty_clusters(points, ca);
    ca.inertia_trace.push_back(ca.inertia(points));
    if (ca.assignment == previous) {
      ca.converged = true;
      break;
    }
    // Update step.
    std::vector<std::vector<double>> sums(k, std::vector<double>(dim, 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
      auto& s = sums[ca.assignment[i]];
      for (std::size_t j = 0; j < dim; ++j) s[j] += points[i][j];
      ++counts[ca.assignment[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      for (std::size_t j = 0; j < dim; ++j) sums[c][j] /= static_cast<double>(counts[c]);
      ca.centroids[c] = std::move(sums[c]);
    }
  }
  return ca;
}

std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t count, Rng& rng) {
  count = std::min(count, n);
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), 0);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + uniform_index(rng, n - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(count);
  return pool;
}

Selection select_random(std::size_t task_size, std::size_t b, std::uint64_t seed) {
  Selection sel;
  sel.clamped = b > task_size;
  Rng rng(seed);
  sel.indices = sample_without_replacement(task_size, b, rng);
  std::sort(sel.indices.begin(), sel.indices.end());
  return sel;
}

Selection select_kmeans(std::span<const std::vector<double>> embeddings, std::size_t b, std::uint64_t seed) {
  Selection sel;
  sel.clamped = b > embeddings.size();
  b = std::min(b, embeddings.size());
  if (b == 0) return sel;
  const auto ca = kmeans(embeddings, b, seed);
  std::vector<std::size_t> best(b, embeddings.size());
  std::vector<double> best_d(b, std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    const auto c = ca.assignment[i];
    const double d = squared_euclidean(embeddings[i], ca.centroids[c]);
    if (d < best_d[c]) {
      best_d[c] = d;
      best[c] = i;
    }
  }
  sel.indices = best;
  return sel;
}

Selection select_icarl(std::span<const std::vector<double>> embeddings, std::size_t b) {
  Selection sel;
  sel.clamped = b > embeddings.size();
  b = std::min(b, embeddings.size());
  if (b == 0) return sel;
  const std::size_t dim = embeddings[0].size();
  std::vector<double> mean(dim, 0.0);
  for (const auto& e : embeddings) {
    for (std::size_t j = 0; j < dim; ++j) mean[j] += e[j];
  }
  for (auto& v : mean) v /= static_cast<double>(embeddings.size());

  std::vector<double> running(dim, 0.0);
  std::vector<bool> taken(embeddings.size(), false);
  std::vector<double> cand(dim);
  for (std::size_t t = 0; t < b; ++t) {
    std::size_t best = embeddings.size();
    double best_d = std::numeric_limits<double>::infinity();
    const double denom = static_cast<double>(t + 1);
    for (std::size_t i = 0; i < embeddings.size(); ++i) {
      if (taken[i]) continue;
      for (std::size_t j = 0; j < dim; ++j) cand[j] = (running[j] + embeddings[i][j]) / denom;
      const double d = squared_euclidean(mean, cand);
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    taken[best] = true;
    for (std::size_t j = 0; j < dim; ++j) running[j] += embeddings[best][j];
    sel.indices.push_back(best);
  }
  return sel;
}

EpisodicMemory::EpisodicMemory(std::size_t budget_total, std::size_t quota_per_task)
    : budget_total_(budget_total), quota_per_task_(quota_per_task) {}

void EpisodicMemory::store_task(std::size_t task_id, std::vector<Sample> selected,
                                std::vector<std::vector<double>> anchors) {
  if (selected.size() != anchors.size()) throw ContractViolation("store_task: samples and anchors differ in length");
  if (selected.empty()) return;
  const std::size_t existing = entries_.contains(task_id) ? entries_.at(task_id).size() : 0;
  if (existing + selected.size() > quota_per_task_) throw ContractViolation("store_task: per-task quota exceeded");
  if (total_ + selected.size() > budget_total_) throw ContractViolation("store_task: memory budget exceeded");
  auto& bucket = entries_[task_id];
  for (std::size_t i = 0; i < selected.size(); ++i) {
    bucket.push_back(MemoryEntry{std::move(selected[i]), task_id, std::move(anchors[i])});
  }
  total_ += selected.size();
}

std::vector<const MemoryEntry*> EpisodicMemory::all() const {
  std::vector<const MemoryEntry*> out;
  out.reserve(total_);
  for (const auto& [task, bucket] : entries_) {
    for (const auto& e : bucket) out.push_back(&e);
  }
  return out;
}

std::vector<std::size_t> EpisodicMemory::task_ids() const {
  std::vector<std::size_t> out;
  for (const auto& [task, bucket] : entries_) out.push_back(task);
  return out;
}

void EpisodicMemory::write_jsonl(std::ostream& out) const {
  for (const auto* e : all()) {
    nlohmann::json line = {
        {"task_id", e->task_id},
        {"sample", {{"tokens", e->sample.tokens}, {"relation", e->sample.gold}, {"candidates", e->sample.candidates}}},
        {"anchor", e->anchor}};
    out << line.dump() << '\n';
  }
}

std::vector<const MemoryEntry*> sample_replay(const EpisodicMemory& mem, ReplayMode mode, std::size_t batch,
                                              Rng& rng) {
  std::vector<const MemoryEntry*> out;
  if (mem.empty() || batch == 0) return out;
  if (mode == ReplayMode::kTaskLevel) {
    const auto tasks = mem.task_ids();
    const auto& bucket = mem.by_task().at(tasks[uniform_index(rng, tasks.size())]);
    for (auto i : sample_without_replacement(bucket.size(), batch, rng)) out.push_back(&bucket[i]);
  } else {
    const auto everything = mem.all();
    for (auto i : sample_without_replacement(everything.size(), batch, rng)) out.push_back(everything[i]);
  }
  return out;
}

}  // namespace lifelong
