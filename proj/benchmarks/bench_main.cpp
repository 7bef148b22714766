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


#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "lifelong/bench.hpp"
#include "lifelong/gproject.hpp"
#include "lifelong/memory.hpp"
#include "lifelong/strategies.hpp"

namespace {

using namespace lifelong;

std::vector<double> gaussian_vector(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  std::vector<double> v(n);
  for (auto& x : v) x = nd(rng);
  return v;
}

// Roughly the parameter count of the default model (d_emb 25, d_hid 200).
constexpr std::size_t kParams = 50600;

void BM_GemProject(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  const auto g = gaussian_vector(kParams, rng);
  ConstraintSet c(kParams);
  for (std::size_t j = 0; j < k; ++j) c.add(gaussian_vector(kParams, rng));
  for (auto _ : state) {
    benchmark::DoNotOptimize(gem_project(g, c));
  }
}
BENCHMARK(BM_GemProject)->DenseRange(1, 9, 2);

void BM_AgemProject(benchmark::State& state) {
  std::mt19937_64 rng(2);
  const auto g = gaussian_vector(kParams, rng);
  const auto ref = gaussian_vector(kParams, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(agem_project(g, ref));
  }
}
BENCHMARK(BM_AgemProject);

void BM_SelectKmeans(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::vector<std::vector<double>> pts;
  for (int i = 0; i < 384; ++i) pts.push_back(gaussian_vector(25, rng));
  const auto b = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(select_kmeans(pts, b, 7));
  }
}
BENCHMARK(BM_SelectKmeans)->Arg(10)->Arg(50);

void BM_SelectIcarl(benchmark::State& state) {
  std::mt19937_64 rng(4);
  std::vector<std::vector<double>> pts;
  for (int i = 0; i < 384; ++i) pts.push_back(gaussian_vector(25, rng));
  const auto b = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(select_icarl(pts, b));
  }
}
BENCHMARK(BM_SelectIcarl)->Arg(10)->Arg(50);

// One task of training per iteration, on the second task of the default
// synthetic stream so memory-based strategies have something to replay.
void BM_TrainTask(benchmark::State& state) {
  const auto kind = static_cast<StrategyKind>(state.range(0));
  static const Benchmark bench = gen_synthetic(SyntheticConfig{});
  static const TaskStream stream = build_stream(bench.samples, bench.split, 0);
  const auto cfg = StrategyConfig::defaults_for(kind);
  for (auto _ : state) {
    state.PauseTiming();
    auto s = make_state(cfg, bench.vocab, bench.relations, stream.size());
    train_task(s, cfg, stream.tasks[0], 0, stream);
    state.ResumeTiming();
    train_task(s, cfg, stream.tasks[1], 1, stream);
    benchmark::DoNotOptimize(s.fb_passes);
  }
  state.SetLabel(to_string(kind));
}
BENCHMARK(BM_TrainTask)
    ->Arg(static_cast<int>(StrategyKind::kOrigin))
    ->Arg(static_cast<int>(StrategyKind::kEmr))
    ->Arg(static_cast<int>(StrategyKind::kEwc))
    ->Arg(static_cast<int>(StrategyKind::kGem))
    ->Arg(static_cast<int>(StrategyKind::kAgem))
    ->Arg(static_cast<int>(StrategyKind::kEaEmr))
    ->Unit(benchmark::kMillisecond)
    ->Iterations(3);

}  // namespace

BENCHMARK_MAIN();
