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


#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "lifelong/cli/commands.hpp"

namespace lifelong::cli {

namespace {

namespace fs = std::filesystem;

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

/// Sample standard deviation; a single value has std 0.
MeanStd mean_std(const std::vector<double>& xs) {
  MeanStd out;
  if (xs.empty()) return out;
  for (double x : xs) out.mean += x;
  out.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    out.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::vector<RunRecord> read_records(const fs::path& results, std::ostream& log) {
  const fs::path dir = fs::is_directory(results / "runs") ? results / "runs" : results;
  std::vector<fs::path> files;
  if (fs::is_directory(dir)) {
    for (const auto& e : fs::directory_iterator(dir)) {
      if (e.is_regular_file() && e.path().extension() == ".json" && e.path().filename() != "spec.json") {
        files.push_back(e.path());
      }
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<RunRecord> records;
  for (const auto& f : files) {
    try {
      std::ifstream in(f);
      auto r = RunRecord::from_json(nlohmann::json::parse(in));
      if (!r.complete() || r.steps.empty()) {
        log << "note: skipping incomplete record " << f.filename().string() << "\n";
        continue;
      }
      records.push_back(std::move(r));
    } catch (const std::exception& e) {
      log << "note: skipping unreadable " << f.filename().string() << ": " << e.what() << "\n";
    }
  }
  return records;
}

}  // namespace

int cmd_report(const fs::path& results, const std::optional<fs::path>& out, std::ostream& log) {
  const auto records = read_records(results, log);
  if (records.empty()) {
    log << "error: no complete RunRecords under '" << results.string() << "'\n";
    return kExitValidation;
  }
  const fs::path out_dir = out.value_or(results);
  fs::create_directories(out_dir);

  std::map<std::string, std::vector<const RunRecord*>> by_strategy;
  for (const auto& r : records) by_strategy[r.strategy].push_back(&r);

  std::ostringstream curves;
  curves << "strategy,step,runs,acc_avg_mean,acc_avg_std,acc_whole_mean,acc_whole_std,"
            "acc_avg_full_mean,acc_avg_full_std,acc_whole_full_mean,acc_whole_full_std\n";
  struct Row {
    std::string strategy;
    std::size_t runs = 0;
    MeanStd whole;
    MeanStd avg;
    MeanStd wall_ms;
  };
  std::vector<Row> rows;
  for (const auto& [name, runs] : by_strategy) {
    std::size_t steps = 0;
    for (const auto* r : runs) steps = std::max(steps, r->steps.size());
    for (std::size_t k = 0; k < steps; ++k) {
      std::vector<double> avg, whole, avg_full, whole_full;
      for (const auto* r : runs) {
        if (k >= r->steps.size()) continue;
        avg.push_back(r->steps[k].acc_avg);
        whole.push_back(r->steps[k].acc_whole);
        avg_full.push_back(r->steps[k].acc_avg_full);
        whole_full.push_back(r->steps[k].acc_whole_full);
      }
      const auto a = mean_std(avg);
      const auto w = mean_std(whole);
      const auto af = mean_std(avg_full);
      const auto wf = mean_std(whole_full);
      curves << name << ',' << (k + 1) << ',' << avg.size() << ',' << fmt(a.mean) << ',' << fmt(a.std) << ','
             << fmt(w.mean) << ',' << fmt(w.std) << ',' << fmt(af.mean) << ',' << fmt(af.std) << ','
             << fmt(wf.mean) << ',' << fmt(wf.std) << '\n';
    }
    std::vector<double> final_avg, final_whole, wall;
    for (const auto* r : runs) {
      final_avg.push_back(r->final_step().acc_avg);
      final_whole.push_back(r->final_step().acc_whole);
      double total = 0.0;
      for (const auto& s : r->steps) total += static_cast<double>(s.wall_ms);
      wall.push_back(total);
    }
    rows.push_back({name, runs.size(), mean_std(final_whole), mean_std(final_avg), mean_std(wall)});
  }
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.avg.mean > b.avg.mean; });

  std::ostringstream summary;
  summary << "strategy,runs,whole_mean,whole_std,avg_mean,avg_std,wall_ms_mean\n";
  for (const auto& r : rows) {
    summary << r.strategy << ',' << r.runs << ',' << fmt(r.whole.mean) << ',' << fmt(r.whole.std) << ','
            << fmt(r.avg.mean) << ',' << fmt(r.avg.std) << ',' << fmt(r.wall_ms.mean) << '\n';
  }

  std::ofstream(out_dir / "curves.csv", std::ios::binary) << curves.str();
  std::ofstream(out_dir / "summary.csv", std::ios::binary) << summary.str();

  char line[160];
  std::snprintf(line, sizeof line, "%-20s %5s %17s %17s %12s\n", "strategy", "runs", "Whole", "Avg", "time (s)");
  log << line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%-20s %5zu %8.3f +- %5.3f %8.3f +- %5.3f %12.1f\n", r.strategy.c_str(), r.runs,
                  r.whole.mean, r.whole.std, r.avg.mean, r.avg.std, r.wall_ms.mean / 1000.0);
    log << line;
  }
  log << "wrote " << (out_dir / "curves.csv").string() << " and " << (out_dir / "summary.csv").string() << "\n";
  return kExitOk;
}

}  // namespace lifelong::cli
