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
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lifelong/data.hpp"
#include "lifelong/model.hpp"

namespace lifelong {

enum class CandidateMode {
  kFixed,         // each sample's own 10-candidate set
  kFullObserved,  // every label observed so far
};

/// Fraction of `test` whose prediction equals the gold label.
double acc_task(const RelModel& m, std::span<const Sample> test, CandidateMode mode,
                std::span<const LabelId> observed);
double acc_avg(std::span<const double> per_task);
/// acc_task over the union of test sets.
double acc_whole(const RelModel& m, std::span<const Sample> whole_test, std::span<const LabelId> observed,
                 CandidateMode mode);

struct StepMetrics {
  std::size_t step = 0;  // 1-based number of tasks seen
  std::size_t task_id = 0;
  std::vector<double> acc_per_task;
  double acc_avg = 0.0;
  double acc_whole = 0.0;
  std::vector<double> acc_per_task_full;
  double acc_avg_full = 0.0;
  double acc_whole_full = 0.0;
  std::uint64_t wall_ms = 0;
  std::uint64_t fb_passes = 0;
};

struct RunRecord {
  std::string version;
  std::string strategy;
  std::uint64_t seed = 0;
  nlohmann::json config;
  nlohmann::json benchmark;
  std::vector<StepMetrics> steps;
  std::string status = "complete";
  std::string error;
  nlohmann::json metadata = nlohmann::json::object();

  bool complete() const { return status == "complete"; }
  const StepMetrics& final_step() const { return steps.back(); }

  /// With include_timing = false every wall_ms is written as 0, which makes
  /// the serialization a pure function of (config, seed).
  nlohmann::json to_json(bool include_timing = true) const;
  static RunRecord from_json(const nlohmann::json& j);
};

inline constexpr const char* kMetricsCsvHeader =
    "strategy,seed,step,task_id,acc_avg,acc_whole,acc_avg_full,acc_whole_full,wall_ms,fb_passes,acc_per_task";

/// One CSV row per (strategy, seed, step); acc_per_task is ';'-joined.
void write_metrics_csv(std::span<const RunRecord> records, std::ostream& out, bool include_header = true);

}  // namespace lifelong
