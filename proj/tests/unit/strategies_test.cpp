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


#include <doctest.h>

#include "fixtures.hpp"
#include "lifelong/bench.hpp"
#include "lifelong/strategies.hpp"

using namespace lifelong;

namespace {

struct Fixture {
  Benchmark bench = gen_synthetic(testing::tiny_synthetic());
  TaskStream stream = build_stream(bench.samples, bench.split, 2);

  TaskStream first_tasks(std::size_t n) const {
    TaskStream s;
    s.tasks.assign(stream.tasks.begin(), stream.tasks.begin() + static_cast<std::ptrdiff_t>(n));
    return s;
  }

  struct Outcome {
    RunRecord record;
    std::optional<LifelongState> state;
  };

  Outcome run(const StrategyConfig& cfg, const TaskStream& s) const {
    Outcome out;
    RunOptions opts;
    opts.record_timing = false;
    out.record = run_stream(cfg, s, bench.vocab, bench.relations, opts, out.state);
    return out;
  }
  Outcome run(const StrategyConfig& cfg) const { return run(cfg, stream); }
};

std::vector<double> values_of(const ParamVector& p, const std::vector<std::size_t>& segs) {
  std::vector<double> out;
  for (auto s : segs) out.insert(out.end(), p.segment(s).begin(), p.segment(s).end());
  return out;
}

void check_same_trajectory(const RunRecord& a, const RunRecord& b) {
  REQUIRE(a.steps.size() == b.steps.size());
  for (std::size_t i = 0; i < a.steps.size(); ++i) {
    CHECK(a.steps[i].acc_per_task == b.steps[i].acc_per_task);
    CHECK(a.steps[i].acc_per_task_full == b.steps[i].acc_per_task_full);
    CHECK(a.steps[i].acc_whole == b.steps[i].acc_whole);
  }
}

}  // namespace

TEST_CASE("strategy config") {
  for (auto name : {"origin", "emr", "ewc", "gem", "agem", "ea_emr", "ea_emr_no_sel", "ea_emr_no_align",
                    "emr_kmeans", "emr_icarl"}) {
    CHECK(to_string(parse_strategy(name)) == name);
  }
  CHECK_THROWS_AS(parse_strategy("lwf"), ContractViolation);
  CHECK(StrategyConfig::defaults_for(StrategyKind::kEaEmr).selection == SelectionKind::kKmeans);
  CHECK(StrategyConfig::defaults_for(StrategyKind::kEaEmrNoSel).selection == SelectionKind::kRandom);
  CHECK(StrategyConfig::defaults_for(StrategyKind::kEmrIcarl).selection == SelectionKind::kIcarl);
  CHECK(StrategyConfig::defaults_for(StrategyKind::kGem).selection == SelectionKind::kRandom);

  const auto c = StrategyConfig::defaults_for(StrategyKind::kEmr);
  CHECK(c.lr_model == 0.001);
  CHECK(c.epochs_model == 3);
  CHECK(c.batch == 50);
  CHECK(c.replay_batch == 50);
  CHECK(c.ewc_alpha == 100.0);
  CHECK(c.agem_ref_samples == 100);

  const auto j = to_json(c);
  CHECK(to_json(config_from_json(j)) == j);
  const auto k = config_from_json({{"name", "emr_kmeans"}, {"lr_model", 0.5}});
  CHECK(k.selection == SelectionKind::kKmeans);
  CHECK(k.lr_model == 0.5);
  CHECK(config_from_json({{"name", "emr_kmeans"}, {"selection", "icarl"}}).selection == SelectionKind::kIcarl);
  CHECK_THROWS_AS(config_from_json({{"lr_modle", 0.5}}), ContractViolation);

  auto bad = c;
  bad.lr_model = 0.0;
  CHECK_THROWS_AS(bad.validate(), ContractViolation);
  bad = c;
  bad.ewc_alpha = -1.0;
  CHECK_THROWS_AS(bad.validate(), ContractViolation);
}

TEST_CASE("ewc_penalty") {
  auto layout = std::make_shared<ParamLayout>();
  layout->add("w", 1, 2);
  ParamVector theta(layout);
  FisherDiag f{{1.0, 2.0}, ParamVector(layout)};

  GradVector g(layout);
  CHECK(ewc_penalty(f, theta, 100.0, &g) == 0.0);
  CHECK(g.values()[0] == 0.0);
  CHECK(g.values()[1] == 0.0);

  auto v = theta.mutable_values();
  v[0] = 1.0;
  v[1] = 1.0;
  CHECK(ewc_penalty(f, theta, 100.0, &g) == 300.0);
  CHECK(g.values()[0] == 200.0);
  CHECK(g.values()[1] == 400.0);
  CHECK(ewc_penalty(f, theta, 0.0, nullptr) == 0.0);
}

TEST_CASE("first-task equivalence") {
  Fixture f;
  const auto one = f.first_tasks(1);
  const auto base = f.run(testing::tiny_config(StrategyKind::kOrigin, 4), one);
  for (auto kind : {StrategyKind::kEmr, StrategyKind::kEwc, StrategyKind::kGem, StrategyKind::kAgem,
                    StrategyKind::kEaEmr, StrategyKind::kEmrIcarl}) {
    CAPTURE(to_string(kind));
    const auto other = f.run(testing::tiny_config(kind, 4), one);
    REQUIRE(other.record.complete());
    CHECK(other.state->model.params().same_values(base.state->model.params()));
    check_same_trajectory(other.record, base.record);
  }
}

TEST_CASE("ablation identities") {
  Fixture f;
  const auto origin = f.run(testing::tiny_config(StrategyKind::kOrigin, 6));

  SUBCASE("EMR with m = 0 is Origin") {
    auto cfg = testing::tiny_config(StrategyKind::kEmr, 6);
    cfg.replay_batch = 0;
    const auto emr = f.run(cfg);
    check_same_trajectory(emr.record, origin.record);
    CHECK(emr.state->model.params().same_values(origin.state->model.params()));
  }
  SUBCASE("EWC with alpha = 0 is Origin") {
    auto cfg = testing::tiny_config(StrategyKind::kEwc, 6);
    cfg.ewc_alpha = 0.0;
    const auto ewc = f.run(cfg);
    check_same_trajectory(ewc.record, origin.record);
    CHECK(ewc.state->model.params().same_values(origin.state->model.params()));
  }
  SUBCASE("EWC with alpha > 0 departs from Origin") {
    auto cfg = testing::tiny_config(StrategyKind::kEwc, 6);
    cfg.ewc_alpha = 1e4;
    CHECK_FALSE(f.run(cfg).state->model.params().same_values(origin.state->model.params()));
  }
  SUBCASE("EA-EMR at task 1 is EMR at task 1") {
    const auto one = f.first_tasks(1);
    const auto ea = f.run(testing::tiny_config(StrategyKind::kEaEmr, 6), one);
    const auto emr = f.run(testing::tiny_config(StrategyKind::kEmr, 6), one);
    check_same_trajectory(ea.record, emr.record);
    CHECK(ea.state->model.params().same_values(emr.state->model.params()));
  }
}

TEST_CASE("EA-EMR parameter-delta audit") {
  Fixture f;
  const auto two = f.first_tasks(2);
  auto cfg = testing::tiny_config(StrategyKind::kEaEmr, 8);

  // Train task 1 fully, then task 2 with and without the alignment step.
  auto run_to_task2 = [&](std::size_t epochs_align) {
    auto c = cfg;
    auto state = make_state(c, f.bench.vocab, f.bench.relations, two.size());
    train_task(state, c, two.tasks[0], 0, two);
    const ParamVector before = state.model.params();
    c.epochs_align = epochs_align;
    train_task(state, c, two.tasks[1], 1, two);
    return std::make_pair(before, std::move(state));
  };

  auto [before, step1_only] = run_to_task2(0);
  auto [before_full, full] = run_to_task2(cfg.epochs_align);
  const auto& m = full.model;
  const auto enc = m.encoder_segments();
  const auto align = m.alignment_segments();

  CHECK(before.same_values(before_full));
  // Step 1 leaves the alignment layer alone and moves the encoders.
  CHECK(values_of(step1_only.model.params(), align) == values_of(before, align));
  CHECK(values_of(step1_only.model.params(), enc) != values_of(before, enc));
  // Step 2 leaves the encoders alone and moves the alignment layer.
  CHECK(values_of(full.model.params(), enc) == values_of(step1_only.model.params(), enc));
  CHECK(values_of(full.model.params(), align) != values_of(step1_only.model.params(), align));

  std::size_t align_steps = 0;
  for (const auto& a : full.audit) {
    if (a.phase == StepPhase::kAlign) {
      ++align_steps;
      CHECK(a.fb_passes == 0);
    }
  }
  CHECK(align_steps > 0);
}

TEST_CASE("alignment objective at the boundary") {
  Fixture f;
  const auto two = f.first_tasks(2);
  auto cfg = testing::tiny_config(StrategyKind::kEaEmr, 3);
  auto state = make_state(cfg, f.bench.vocab, f.bench.relations, two.size());
  train_task(state, cfg, two.tasks[0], 0, two);
  // Bookkeeping for task 2 without training: snapshot taken, nothing moved.
  auto frozen = cfg;
  frozen.lr_model = 1e-300;
  frozen.lr_align = 1e-300;
  frozen.epochs_align = 0;
  frozen.epochs_model = 1;
  train_task(state, frozen, two.tasks[1], 1, two);
  CHECK(alignment_objective(state, two.tasks[1]) == doctest::Approx(0.0).epsilon(1e-20));
}

TEST_CASE("pass-count accounting") {
  Fixture f;
  SUBCASE("EMR: |D| + m") {
    // Sample-level replay draws m = 6 from the whole memory; task-level
    // draws from one task's 5 entries.
    for (const bool sample_level : {false, true}) {
      auto cfg = testing::tiny_config(StrategyKind::kEmr, 2);
      if (sample_level) cfg.replay_mode = ReplayMode::kSampleLevel;
      const auto r = f.run(cfg);
      std::size_t with_replay = 0;
      for (const auto& a : r.state->audit) {
        CHECK(a.fb_passes == a.batch_size + a.replay_size);
        if (a.memory_size > 0) {
          ++with_replay;
          CHECK(a.replay_size == (sample_level ? std::min<std::size_t>(6, a.memory_size) : 5));
        } else {
          CHECK(a.replay_size == 0);
        }
      }
      CHECK(with_replay > 0);
    }
  }
  SUBCASE("GEM: |D| + |M|") {
    const auto r = f.run(testing::tiny_config(StrategyKind::kGem, 2));
    for (const auto& a : r.state->audit) {
      CHECK(a.fb_passes == a.batch_size + a.memory_size);
      CHECK(a.memory_size == 5 * a.task_index);
    }
    CHECK(r.state->diagnostics.gem_projections > 0);
  }
}

TEST_CASE("memory contents") {
  Fixture f;
  const auto r = f.run(testing::tiny_config(StrategyKind::kEmr, 1));
  CHECK(r.state->memory.total() == 5 * f.stream.size());
  for (const auto& [task, bucket] : r.state->memory.by_task()) {
    const auto& labels = f.stream.tasks[task].labels;
    for (const auto& e : bucket) {
      CHECK(std::binary_search(labels.begin(), labels.end(), e.sample.gold));
      CHECK(e.anchor.size() == 8);
    }
  }
  CHECK(f.run(testing::tiny_config(StrategyKind::kOrigin, 1)).state->memory.total() == 0);
}

TEST_CASE("run records") {
  Fixture f;
  SUBCASE("deterministic") {
    for (auto kind : {StrategyKind::kEmr, StrategyKind::kGem, StrategyKind::kAgem, StrategyKind::kEaEmr}) {
      const auto a = f.run(testing::tiny_config(kind, 9)).record.to_json(false).dump();
      const auto b = f.run(testing::tiny_config(kind, 9)).record.to_json(false).dump();
      CHECK(a == b);
    }
  }
  SUBCASE("one step per task") {
    const auto r = f.run(testing::tiny_config(StrategyKind::kAgem, 1)).record;
    REQUIRE(r.complete());
    CHECK(r.steps.size() == f.stream.size());
    for (std::size_t k = 0; k < r.steps.size(); ++k) {
      CHECK(r.steps[k].step == k + 1);
      CHECK(r.steps[k].acc_per_task.size() == k + 1);
      CHECK(r.steps[k].fb_passes > 0);
    }
  }
  SUBCASE("single-task run: avg equals whole") {
    const auto r = f.run(testing::tiny_config(StrategyKind::kEmr, 1), f.first_tasks(1)).record;
    CHECK(r.final_step().acc_avg == r.final_step().acc_whole);
  }
  SUBCASE("failure keeps the completed steps") {
    auto broken = f.first_tasks(3);
    broken.tasks[1].train.clear();
    const auto r = f.run(testing::tiny_config(StrategyKind::kEmr, 1), broken).record;
    CHECK_FALSE(r.complete());
    CHECK(r.status == "failed");
    CHECK(r.steps.size() == 1);
    CHECK(r.error.find("task 1") != std::string::npos);
  }
  SUBCASE("metadata") {
    const auto r = f.run(testing::tiny_config(StrategyKind::kEaEmr, 1)).record;
    CHECK(r.metadata.at("joint_objective").size() == f.stream.size());
    CHECK(r.metadata.at("memory_quota_per_task") == 5);
  }
}
