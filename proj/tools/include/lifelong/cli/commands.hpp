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
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lifelong/cli/experiment.hpp"

namespace lifelong::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitPartial = 2;

struct RunCommandOptions {
  std::optional<std::filesystem::path> out;  // overrides the spec's output directory
  std::size_t jobs = 1;
  std::uint64_t seed_offset = 0;
  bool timing = true;
};

struct RunOutcome {
  int exit_code = kExitOk;
  std::size_t trained = 0;
  std::size_t skipped = 0;
  std::size_t failed = 0;
};

/// Executes the strategy x seed grid. Each cell writes
/// <out>/runs/<label>-seed<seed>.json; a cell whose file already holds a
/// complete record with the same content hash is skipped. metrics.csv and
/// spec.json are rewritten at the end.
RunOutcome cmd_run(const ExperimentSpec& spec, const RunCommandOptions& options, std::ostream& log);
int cmd_run(const std::filesystem::path& config, const RunCommandOptions& options, std::ostream& log);

/// Reads every RunRecord under <results>/runs (or <results> itself) and
/// writes curves.csv and summary.csv to `out` (default: `results`).
int cmd_report(const std::filesystem::path& results, const std::optional<std::filesystem::path>& out,
               std::ostream& log);

struct SelftestOptions {
  double gem_tol = 1e-6;
  std::uint64_t seed = 0;
};

struct SuiteResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

SuiteResult suite_finite_difference(std::size_t instances, std::uint64_t seed);
SuiteResult suite_qp_bruteforce(std::size_t instances, std::uint64_t seed, double gem_tol);
SuiteResult suite_agem_closed_form(std::size_t instances, std::uint64_t seed);
SuiteResult suite_herding(std::size_t instances, std::uint64_t seed);
SuiteResult suite_kmeans_partition(std::size_t instances, std::uint64_t seed);

std::vector<SuiteResult> run_selftest(const SelftestOptions& options);
int cmd_selftest(const SelftestOptions& options, std::ostream& log);

/// Writes a synthetic benchmark to `out`. `config` may be a bare synthetic
/// config or an experiment spec with a synthetic benchmark.
int cmd_gen(const std::optional<std::filesystem::path>& config, const std::filesystem::path& out,
            std::uint64_t seed_offset, std::ostream& log);

}  // namespace lifelong::cli
