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


#include <atomic>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "lifelong/cli/commands.hpp"

namespace lifelong::cli {

namespace {

namespace fs = std::filesystem;

struct Cell {
  const StrategyEntry* entry = nullptr;
  std::uint64_t seed = 0;
  fs::path path;
};

void write_text_atomically(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out << text;
    if (!out) throw std::runtime_error("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

std::optional<RunRecord> load_completed(const fs::path& path, const std::string& hash) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  try {
    const auto j = nlohmann::json::parse(in);
    auto record = RunRecord::from_json(j);
    if (!record.complete() || record.metadata.value("content_hash", std::string{}) != hash) return std::nullopt;
    return record;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

}  // namespace

RunOutcome cmd_run(const ExperimentSpec& spec, const RunCommandOptions& options, std::ostream& log) {
  RunOutcome outcome;
  const fs::path out_dir = options.out.value_or(spec.output);
  PreparedBenchmark bench;
  try {
    bench = prepare_benchmark(spec.benchmark);
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    outcome.exit_code = kExitValidation;
    return outcome;
  }

  std::map<std::uint64_t, TaskStream> streams;
  try {
    for (auto seed : spec.seeds) {
      const auto s = seed + options.seed_offset;
      streams.emplace(s, build_stream(bench.samples, bench.split, s, spec.benchmark.split_seed));
      validate_stream(streams.at(s));
    }
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    outcome.exit_code = kExitValidation;
    return outcome;
  }

  fs::create_directories(out_dir / "runs");
  std::vector<Cell> cells;
  for (const auto& entry : spec.strategies) {
    for (auto seed : spec.seeds) {
      const auto s = seed + options.seed_offset;
      cells.push_back({&entry, s, out_dir / "runs" / (entry.label + "-seed" + std::to_string(s) + ".json")});
    }
  }

  std::vector<std::optional<RunRecord>> records(cells.size());
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      const auto& cell = cells[i];
      auto config = cell.entry->config;
      config.seed = cell.seed;
      auto echo = bench.echo;
      echo["shuffle_seed"] = cell.seed;
      const auto hash = cell_hash(echo, config, cell.entry->label);

      if (auto done = load_completed(cell.path, hash)) {
        std::lock_guard lock(mu);
        log << "skip  " << cell.entry->label << " seed " << cell.seed << " (up to date)\n";
        ++outcome.skipped;
        records[i] = std::move(done);
        continue;
      }

      RunRecord record;
      try {
        RunOptions run_options;
        run_options.benchmark_echo = echo;
        run_options.record_timing = options.timing;
        record = run_stream(config, streams.at(cell.seed), bench.vocab, bench.relations, run_options);
      } catch (const std::exception& e) {
        record.version = kVersion;
        record.seed = cell.seed;
        record.config = to_json(config);
        record.benchmark = echo;
        record.status = "failed";
        record.error = e.what();
      }
      record.strategy = cell.entry->label;
      record.metadata["content_hash"] = hash;
      std::string write_error;
      try {
        write_text_atomically(cell.path, record.to_json(options.timing).dump(2) + "\n");
      } catch (const std::exception& e) {
        write_error = e.what();
      }

      std::lock_guard lock(mu);
      if (!record.complete() || !write_error.empty()) {
        ++outcome.failed;
        log << "FAIL  " << cell.entry->label << " seed " << cell.seed << ": "
            << (write_error.empty() ? record.error : write_error) << "\n";
      } else {
        ++outcome.trained;
        log << "done  " << cell.entry->label << " seed " << cell.seed << " final acc_avg "
            << record.final_step().acc_avg << "\n";
      }
      records[i] = std::move(record);
    }
  };

  const std::size_t jobs = std::max<std::size_t>(1, std::min(options.jobs, cells.size()));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < jobs; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::vector<RunRecord> all;
  for (auto& r : records) {
    if (r) all.push_back(std::move(*r));
  }
  std::ostringstream csv;
  write_metrics_csv(all, csv);
  write_text_atomically(out_dir / "metrics.csv", csv.str());
  auto spec_json = spec.to_json();
  spec_json["output"] = out_dir.string();
  spec_json["seed_offset"] = options.seed_offset;
  write_text_atomically(out_dir / "spec.json", spec_json.dump(2) + "\n");

  log << cells.size() << " cells: " << outcome.trained << " trained, " << outcome.skipped << " skipped, "
      << outcome.failed << " failed\n";
  outcome.exit_code = outcome.failed == 0 ? kExitOk : kExitPartial;
  return outcome;
}

int cmd_run(const fs::path& config, const RunCommandOptions& options, std::ostream& log) {
  ExperimentSpec spec;
  try {
    spec = load_experiment_spec(config);
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  if (options.jobs == 0) {
    log << "error: --jobs must be at least 1\n";
    return kExitValidation;
  }
  return cmd_run(spec, options, log).exit_code;
}

}  // namespace lifelong::cli
