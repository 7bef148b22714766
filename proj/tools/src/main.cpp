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


#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "lifelong/cli/commands.hpp"
#include "lifelong/strategies.hpp"

int main(int argc, char** argv) {
  namespace cli = lifelong::cli;
  CLI::App app{"Lifelong relation detection: episodic memory replay and baselines"};
  app.set_version_flag("--version", std::string(lifelong::kVersion));
  app.require_subcommand(1);

  std::string config;
  std::string out;
  std::size_t jobs = 1;
  std::uint64_t seed_offset = 0;
  bool no_timing = false;

  auto* run = app.add_subcommand("run", "Run a strategy x seed grid");
  run->add_option("--config", config, "Experiment spec (JSON)")->required();
  run->add_option("--out", out, "Output directory (overrides the spec)");
  run->add_option("--jobs", jobs, "Grid cells run in parallel")->check(CLI::PositiveNumber);
  run->add_option("--seed-offset", seed_offset, "Added to every seed in the spec");
  run->add_flag("--no-timing", no_timing, "Write wall_ms as 0 so outputs are byte-reproducible");

  std::string results;
  auto* report = app.add_subcommand("report", "Summarize RunRecords into curves and a summary table");
  report->add_option("results", results, "Results directory written by 'run'")->required();
  report->add_option("--out", out, "Where to write curves.csv and summary.csv");

  cli::SelftestOptions selftest_options;
  auto* selftest = app.add_subcommand("selftest", "Run the oracle suites");
  selftest->add_option("--gem-tol", selftest_options.gem_tol, "Tolerance handed to gem_project");
  selftest->add_option("--seed-offset", selftest_options.seed, "Seed for the random instances");

  auto* gen = app.add_subcommand("gen", "Write a synthetic benchmark to disk");
  gen->add_option("--config", config, "Synthetic config or experiment spec (JSON)");
  gen->add_option("--out", out, "Output directory")->required();
  gen->add_option("--seed-offset", seed_offset, "Added to the generator seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kExitOk : cli::kExitValidation;
  }

  auto optional_path = [](const std::string& s) -> std::optional<std::filesystem::path> {
    if (s.empty()) return std::nullopt;
    return std::filesystem::path(s);
  };
  try {
    if (*run) {
      cli::RunCommandOptions options;
      options.out = optional_path(out);
      options.jobs = jobs;
      options.seed_offset = seed_offset;
      options.timing = !no_timing;
      return cli::cmd_run(config, options, std::cout);
    }
    if (*report) return cli::cmd_report(results, optional_path(out), std::cout);
    if (*selftest) return cli::cmd_selftest(selftest_options, std::cout);
    if (*gen) return cli::cmd_gen(optional_path(config), out, seed_offset, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kExitPartial;
  }
  return cli::kExitValidation;
}
