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


#include "lifelong/eval.hpp"

#include <charconv>
#include <numeric>
#include <ostream>

namespace lifelong {

double acc_task(const RelModel& m, std::span<const Sample> test, CandidateMode mode,
                std::span<const LabelId> observed) {
  if (test.empty()) throw ContractViolation("acc_task: empty test set");
  RelationEmbeddingCache cache(m);
  std::size_t correct = 0;
  for (const auto& s : test) {
    const auto cands = mode == CandidateMode::kFixed ? std::span<const LabelId>(s.candidates) : observed;
    if (cands.empty()) continue;
    if (predict(m, s, cands, &cache) == s.gold) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

double acc_avg(std::span<const double> per_task) {
  if (per_task.empty()) throw ContractViolation("acc_avg: no tasks");
  return std::accumulate(per_task.begin(), per_task.end(), 0.0) / static_cast<double>(per_task.size());
}

double acc_whole(const RelModel& m, std::span<const Sample> whole_test, std::span<const LabelId> observed,
                 CandidateMode mode) {
  return acc_task(m, whole_test, mode, observed);
}

nlohmann::json RunRecord::to_json(bool include_timing) const {
  nlohmann::json steps_json = nlohmann::json::array();
  for (const auto& s : steps) {
    steps_json.push_back({{"step", s.step},
                          {"task_id", s.task_id},
                          {"acc_avg", s.acc_avg},
                          {"acc_whole", s.acc_whole},
                          {"acc_per_task", s.acc_per_task},
                          {"acc_avg_full", s.acc_avg_full},
                          {"acc_whole_full", s.acc_whole_full},
                          {"acc_per_task_full", s.acc_per_task_full},
                          {"wall_ms", include_timing ? s.wall_ms : 0},
                          {"fb_passes", s.fb_passes}});
  }
  nlohmann::json j = {{"version", version}, {"strategy", strategy}, {"seed", seed},
                      {"config", config},   {"benchmark", benchmark}, {"steps", steps_json},
                      {"status", status},   {"metadata", metadata}};
  if (!error.empty()) j["error"] = error;
  return j;
}

RunRecord RunRecord::from_json(const nlohmann::json& j) {
  RunRecord r;
  r.version = j.at("version").get<std::string>();
  r.strategy = j.at("strategy").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.config = j.at("config");
  r.benchmark = j.value("benchmark", nlohmann::json::object());
  r.status = j.at("status").get<std::string>();
  r.error = j.value("error", std::string());
  r.metadata = j.value("metadata", nlohmann::json::object());
  for (const auto& s : j.at("steps")) {
    StepMetrics m;
    m.step = s.at("step").get<std::size_t>();
    m.task_id = s.at("task_id").get<std::size_t>();
    m.acc_avg = s.at("acc_avg").get<double>();
    m.acc_whole = s.at("acc_whole").get<double>();
    m.acc_per_task = s.at("acc_per_task").get<std::vector<double>>();
    m.acc_avg_full = s.value("acc_avg_full", 0.0);
    m.acc_whole_full = s.value("acc_whole_full", 0.0);
    m.acc_per_task_full = s.value("acc_per_task_full", std::vector<double>{});
    m.wall_ms = s.at("wall_ms").get<std::uint64_t>();
    m.fb_passes = s.at("fb_passes").get<std::uint64_t>();
    r.steps.push_back(std::move(m));
  }
  return r;
}

namespace {

std::string fmt(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

void write_metrics_csv(std::span<const RunRecord> records, std::ostream& out, bool include_header) {
  if (include_header) out << kMetricsCsvHeader << '\n';
  for (const auto& r : records) {
    for (const auto& s : r.steps) {
      std::string per;
      for (std::size_t i = 0; i < s.acc_per_task.size(); ++i) {
        if (i) per += ';';
        per += fmt(s.acc_per_task[i]);
      }
      out << r.strategy << ',' << r.seed << ',' << s.step << ',' << s.task_id << ',' << fmt(s.acc_avg) << ','
          << fmt(s.acc_whole) << ',' << fmt(s.acc_avg_full) << ',' << fmt(s.acc_whole_full) << ',' << s.wall_ms
          << ',' << s.fb_passes << ',' << per << '\n';
    }
  }
}

}  // namespace lifelong
