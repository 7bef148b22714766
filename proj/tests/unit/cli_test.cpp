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


#include <cmath>
#include <filesystem>
#include <functional>
#include <fstream>
#include <sstream>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "lifelong/cli/commands.hpp"
#include "lifelong/cli/experiment.hpp"

using namespace lifelong;
using namespace lifelong::cli;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("lifelong_cli_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

json tiny_spec(const fs::path& out) {
  return {
      {"benchmark",
       {{"synthetic", {{"tasks", 3}, {"relations_per_task", 3}, {"samples_per_relation", 20}, {"d_emb", 6}}}}},
      {"defaults",
       {{"d_hid", 6},
        {"batch", 10},
        {"replay_batch", 5},
        {"memory_per_task", 4},
        {"epochs_align", 1},
        {"fisher_samples", 5},
        {"agem_ref_samples", 5},
        {"lr_model", 0.01}}},
      {"strategies", json::array({"origin", "emr", json{{"name", "gem"}, {"label", "gem-small"}, {"memory_per_task", 2}}})},
      {"seeds", {0, 1}},
      {"output", out.string()},
  };
}

std::string spec_error(const json& j) {
  try {
    parse_experiment_spec(j);
  } catch (const SpecError& e) {
    return e.what();
  }
  return "";
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

RunRecord fake_record(const std::string& strategy, std::uint64_t seed, double final_avg, double final_whole) {
  RunRecord r;
  r.version = kVersion;
  r.strategy = strategy;
  r.seed = seed;
  StepMetrics s1;
  s1.step = 1;
  s1.acc_per_task = {1.0};
  s1.acc_avg = 1.0;
  s1.acc_whole = 1.0;
  s1.wall_ms = 10 * (seed + 1);
  StepMetrics s2 = s1;
  s2.step = 2;
  s2.acc_per_task = {final_avg, final_avg};
  s2.acc_avg = final_avg;
  s2.acc_whole = final_whole;
  r.steps = {s1, s2};
  return r;
}

void write_record(const fs::path& dir, const RunRecord& r) {
  fs::create_directories(dir);
  std::ofstream(dir / (r.strategy + "-seed" + std::to_string(r.seed) + ".json")) << r.to_json().dump();
}

}  // namespace

TEST_CASE("experiment spec validation") {
  const json good = tiny_spec("out");
  const auto spec = parse_experiment_spec(good);
  REQUIRE(spec.strategies.size() == 3);
  CHECK(spec.strategies[2].label == "gem-small");
  CHECK(spec.strategies[2].config.memory_per_task == 2);
  CHECK(spec.strategies[0].config.d_hid == 6);
  CHECK(spec.seeds == std::vector<std::uint64_t>{0, 1});
  CHECK(spec.benchmark.synthetic->tasks == 3);
  CHECK(parse_experiment_spec(spec.to_json()).to_json() == spec.to_json());

  auto with = [&](const std::function<void(json&)>& edit) {
    json j = good;
    edit(j);
    return spec_error(j);
  };
  CHECK(with([](json& j) { j["seeds"] = json::array(); }) != "");
  CHECK(with([](json& j) { j["seeds"] = {1, 1}; }) != "");
  CHECK(with([](json& j) { j["seeds"] = {-1}; }) != "");
  CHECK(with([](json& j) { j["strategies"] = json::array(); }) != "");
  CHECK(with([](json& j) { j["strategies"] = {"emr", "emr"}; }) != "");
  CHECK(with([](json& j) { j["strategies"] = {"nope"}; }) != "");
  CHECK(with([](json& j) { j["strategies"] = {json{{"name", "emr"}, {"seed", 3}}}; }) != "");
  CHECK(with([](json& j) { j["strategies"] = {json{{"name", "emr"}, {"label", "a/b"}}}; }) != "");
  CHECK(with([](json& j) { j["defaults"]["lr_model"] = -1.0; }) != "");
  CHECK(with([](json& j) { j["defaults"]["name"] = "emr"; }) != "");
  CHECK(with([](json& j) { j["defaults"]["batch"] = 2.5; }) != "");
  CHECK(with([](json& j) { j["colour"] = "red"; }) != "");
  CHECK(with([](json& j) { j["benchmark"]["synthetic"]["noise"] = -0.1; }) != "");
  CHECK(with([](json& j) { j["benchmark"]["synthetic"]["tasks"] = 0; }) != "");
  CHECK(with([](json& j) { j["benchmark"]["dataset"] = {{"samples", "s.jsonl"}}; }) != "");
  CHECK(with([](json& j) { j.erase("benchmark"); }) != "");
  CHECK(with([](json& j) { j["seeds"] = json::array(); }).find("seed") != std::string::npos);
}

TEST_CASE("cell hash") {
  const auto spec = parse_experiment_spec(tiny_spec("out"));
  const auto echo = spec.benchmark.to_json();
  const auto& cfg = spec.strategies[1].config;
  const auto h = cell_hash(echo, cfg, "emr");
  CHECK(h.size() == 64);
  CHECK(cell_hash(echo, cfg, "emr") == h);
  CHECK(cell_hash(echo, cfg, "emr2") != h);
  auto other = cfg;
  other.seed += 1;
  CHECK(cell_hash(echo, other, "emr") != h);
  auto echo2 = echo;
  echo2["synthetic"]["noise"] = 0.5;
  CHECK(cell_hash(echo2, cfg, "emr") != h);
}

TEST_CASE("run: grid, resume and determinism") {
  TempDir a("run_a");
  TempDir b("run_b");
  std::ostringstream log;
  RunCommandOptions opts;
  opts.timing = false;

  const auto spec_a = parse_experiment_spec(tiny_spec(a.path));
  const auto first = cmd_run(spec_a, opts, log);
  CHECK(first.exit_code == kExitOk);
  CHECK(first.trained == 6);
  CHECK(first.failed == 0);
  for (const auto* label : {"origin", "emr", "gem-small"}) {
    for (int s : {0, 1}) {
      const auto p = a.path / "runs" / (std::string(label) + "-seed" + std::to_string(s) + ".json");
      REQUIRE(fs::exists(p));
      const auto r = RunRecord::from_json(json::parse(slurp(p)));
      CHECK(r.complete());
      CHECK(r.strategy == label);
      CHECK(r.seed == static_cast<std::uint64_t>(s));
      CHECK(r.steps.size() == 3);
      CHECK(r.metadata.at("content_hash").get<std::string>().size() == 64);
    }
  }
  CHECK(read_csv(a.path / "metrics.csv").size() == 1 + 6 * 3);
  CHECK(fs::exists(a.path / "spec.json"));

  const auto run_file = a.path / "runs" / "emr-seed1.json";
  const auto bytes = slurp(run_file);
  const auto metrics = slurp(a.path / "metrics.csv");

  SUBCASE("second run skips every cell and changes nothing") {
    const auto again = cmd_run(spec_a, opts, log);
    CHECK(again.exit_code == kExitOk);
    CHECK(again.trained == 0);
    CHECK(again.skipped == 6);
    CHECK(slurp(run_file) == bytes);
    CHECK(slurp(a.path / "metrics.csv") == metrics);
  }
  SUBCASE("a damaged cell is retrained alone") {
    std::ofstream(run_file) << "{";
    const auto again = cmd_run(spec_a, opts, log);
    CHECK(again.trained == 1);
    CHECK(again.skipped == 5);
    CHECK(slurp(run_file) == bytes);
  }
  SUBCASE("a changed config invalidates only its cells") {
    auto j = tiny_spec(a.path);
    j["strategies"][0] = json{{"name", "origin"}, {"lr_model", 0.02}};
    const auto again = cmd_run(parse_experiment_spec(j), opts, log);
    CHECK(again.trained == 2);
    CHECK(again.skipped == 4);
  }
  SUBCASE("identical specs give identical bytes, in parallel too") {
    RunCommandOptions parallel = opts;
    parallel.jobs = 3;
    const auto spec_b = parse_experiment_spec(tiny_spec(b.path));
    CHECK(cmd_run(spec_b, parallel, log).exit_code == kExitOk);
    for (const auto& f : fs::directory_iterator(a.path / "runs")) {
      CHECK(slurp(f.path()) == slurp(b.path / "runs" / f.path().filename()));
    }
    CHECK(slurp(b.path / "metrics.csv") == metrics);
  }
  SUBCASE("seed offset shifts the task order") {
    RunCommandOptions shifted = opts;
    shifted.seed_offset = 100;
    shifted.out = b.path;
    CHECK(cmd_run(spec_a, shifted, log).exit_code == kExitOk);
    CHECK(slurp(b.path / "runs" / "emr-seed1.json") != bytes);
    CHECK(json::parse(slurp(b.path / "spec.json")).at("seed_offset") == 100);
  }
}

TEST_CASE("run: validation and partial failures") {
  TempDir dir("run_fail");
  std::ostringstream log;
  RunCommandOptions opts;

  std::ofstream(dir.path / "bad.json") << "{ not json";
  CHECK(cmd_run(dir.path / "bad.json", opts, log) == kExitValidation);
  CHECK(cmd_run(dir.path / "missing.json", opts, log) == kExitValidation);
  auto empty_seeds = tiny_spec(dir.path / "out");
  empty_seeds["seeds"] = json::array();
  std::ofstream(dir.path / "empty.json") << empty_seeds.dump();
  CHECK(cmd_run(dir.path / "empty.json", opts, log) == kExitValidation);

  // An EWC weight this large overflows the penalty gradient on task 2.
  auto j = tiny_spec(dir.path / "out");
  j["strategies"] = {"origin", json{{"name", "ewc"}, {"label", "exploding"}, {"ewc_alpha", 1e300}}};
  j["seeds"] = {0};
  std::ofstream(dir.path / "partial.json") << j.dump();
  CHECK(cmd_run(dir.path / "partial.json", opts, log) == kExitPartial);
  const auto r = RunRecord::from_json(json::parse(slurp(dir.path / "out" / "runs" / "exploding-seed0.json")));
  CHECK(r.status == "failed");
  CHECK_FALSE(r.error.empty());
  CHECK(fs::exists(dir.path / "out" / "runs" / "origin-seed0.json"));
}

TEST_CASE("report") {
  TempDir dir("report");
  std::ostringstream log;

  SUBCASE("empty directory is an error") {
    fs::create_directories(dir.path / "runs");
    CHECK(cmd_report(dir.path, std::nullopt, log) == kExitValidation);
  }
  SUBCASE("one record has zero spread") {
    write_record(dir.path / "runs", fake_record("emr", 0, 0.7, 0.6));
    CHECK(cmd_report(dir.path, std::nullopt, log) == kExitOk);
    const auto rows = read_csv(dir.path / "summary.csv");
    REQUIRE(rows.size() == 2);
    CHECK(rows[0] == std::vector<std::string>{"strategy", "runs", "whole_mean", "whole_std", "avg_mean", "avg_std",
                                              "wall_ms_mean"});
    CHECK(rows[1][1] == "1");
    CHECK(std::stod(rows[1][3]) == 0.0);
    CHECK(std::stod(rows[1][5]) == 0.0);
    for (const auto& row : read_csv(dir.path / "curves.csv")) {
      if (row[0] == "strategy") continue;
      CHECK(std::stod(row[4]) == 0.0);
      CHECK(std::stod(row[6]) == 0.0);
    }
  }
  SUBCASE("five seeds aggregate to the hand-computed mean") {
    const std::vector<double> finals{0.61, 0.58, 0.70, 0.66, 0.59};
    for (std::size_t s = 0; s < finals.size(); ++s) {
      write_record(dir.path / "runs", fake_record("emr", s, finals[s], finals[s] - 0.1));
    }
    // Hand-computed: sum 3.14, mean 0.628; sum of squared deviations 0.01028, sample variance 0.00257.
    CHECK(cmd_report(dir.path, dir.path / "rep", log) == kExitOk);
    const auto rows = read_csv(dir.path / "rep" / "summary.csv");
    REQUIRE(rows.size() == 2);
    CHECK(rows[1][1] == "5");
    // The report prints six decimals.
    CHECK(std::abs(std::stod(rows[1][4]) - 0.628) <= 5e-7);
    CHECK(std::abs(std::stod(rows[1][5]) - std::sqrt(0.00257)) <= 5e-7);
    CHECK(std::abs(std::stod(rows[1][2]) - 0.528) <= 5e-7);
    // Two steps of 10 (s + 1) ms each.
    CHECK(std::stod(rows[1][6]) == doctest::Approx(60.0).epsilon(1e-12));
  }
  SUBCASE("rows sorted by final average accuracy, descending") {
    write_record(dir.path / "runs", fake_record("origin", 0, 0.3, 0.3));
    write_record(dir.path / "runs", fake_record("ea_emr", 0, 0.9, 0.8));
    write_record(dir.path / "runs", fake_record("emr", 0, 0.6, 0.5));
    auto partial = fake_record("gem", 0, 0.99, 0.99);
    partial.status = "failed";
    write_record(dir.path / "runs", partial);
    CHECK(cmd_report(dir.path, std::nullopt, log) == kExitOk);
    const auto rows = read_csv(dir.path / "summary.csv");
    REQUIRE(rows.size() == 4);
    CHECK(rows[1][0] == "ea_emr");
    CHECK(rows[2][0] == "emr");
    CHECK(rows[3][0] == "origin");
  }
}

TEST_CASE("selftest") {
  CHECK(suite_finite_difference(10, 0).passed);
  CHECK(suite_qp_bruteforce(50, 0, 1e-6).passed);
  CHECK(suite_agem_closed_form(50, 0).passed);
  CHECK(suite_herding(20, 0).passed);
  CHECK(suite_kmeans_partition(20, 0).passed);
  SUBCASE("loosened projection tolerance is caught") {
    CHECK_FALSE(suite_qp_bruteforce(500, 0, 10.0).passed);
    std::ostringstream log;
    CHECK(cmd_selftest(SelftestOptions{10.0, 0}, log) == kExitPartial);
    CHECK(log.str().find("FAIL") != std::string::npos);
  }
}

TEST_CASE("gen") {
  TempDir dir("gen");
  std::ostringstream log;
  std::ofstream(dir.path / "syn.json") << json{{"tasks", 2}, {"relations_per_task", 2}, {"samples_per_relation", 10}}.dump();
  CHECK(cmd_gen(dir.path / "syn.json", dir.path / "a", 0, log) == kExitOk);
  CHECK(cmd_gen(dir.path / "syn.json", dir.path / "b", 0, log) == kExitOk);
  CHECK(cmd_gen(dir.path / "syn.json", dir.path / "c", 1, log) == kExitOk);
  for (const auto* f : {"samples.jsonl", "embeddings.txt", "relations.tsv", "manifest.json", "synthetic.json"}) {
    REQUIRE(fs::exists(dir.path / "a" / f));
  }
  CHECK(slurp(dir.path / "a" / "samples.jsonl") == slurp(dir.path / "b" / "samples.jsonl"));
  CHECK(slurp(dir.path / "a" / "samples.jsonl") != slurp(dir.path / "c" / "samples.jsonl"));
  const auto loaded = load_relation_dataset(dir.path / "a" / "samples.jsonl", dir.path / "a" / "embeddings.txt",
                                            dir.path / "a" / "relations.tsv");
  CHECK(loaded.samples.size() == 40);

  std::ofstream(dir.path / "bad.json") << json{{"tasks", 2}, {"bogus", 1}}.dump();
  CHECK(cmd_gen(dir.path / "bad.json", dir.path / "d", 0, log) == kExitValidation);
}
