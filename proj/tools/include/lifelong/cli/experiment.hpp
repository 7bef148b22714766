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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lifelong/bench.hpp"
#include "lifelong/strategies.hpp"

namespace lifelong::cli {

/// Invalid experiment spec; maps to exit status 1.
class SpecError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DatasetSource {
  std::filesystem::path samples;
  std::filesystem::path embeddings;
  std::filesystem::path relations;
  std::size_t tasks = 10;
};

struct BenchmarkSource {
  std::optional<SyntheticConfig> synthetic;
  std::optional<DatasetSource> dataset;
  std::uint64_t split_seed = kDefaultSplitSeed;

  nlohmann::json to_json() const;
};

struct StrategyEntry {
  std::string label;  // names the row in every report; defaults to the strategy name
  StrategyConfig config;
};

struct ExperimentSpec {
  BenchmarkSource benchmark;
  std::vector<StrategyEntry> strategies;
  std::vector<std::uint64_t> seeds;
  std::filesystem::path output = "results";

  nlohmann::json to_json() const;
};

/// Schema:
///   {
///     "benchmark": {"synthetic": {...SyntheticConfig keys...}}
///                | {"dataset": {"samples", "embeddings", "relations", "tasks"}},
///     "split_seed": int,                      (optional)
///     "defaults": {...StrategyConfig keys...}, (optional, applied to every strategy)
///     "strategies": ["emr", {"name": "gem", "label": "gem-b10", ...}],
///     "seeds": [0, 1, 2, 3, 4],
///     "output": "results"                     (optional)
///   }
/// Relative dataset paths resolve against `base_dir`. Unknown keys, an empty
/// strategy or seed list, duplicate labels and invalid hyperparameters all
/// raise SpecError.
ExperimentSpec parse_experiment_spec(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
ExperimentSpec load_experiment_spec(const std::filesystem::path& path);

SyntheticConfig synthetic_from_json(const nlohmann::json& j, const SyntheticConfig& base = {});
nlohmann::json to_json(const SyntheticConfig& c);

/// A benchmark materialized once per sweep; streams are cut per seed.
struct PreparedBenchmark {
  std::shared_ptr<const VocabEmbedding> vocab;
  std::shared_ptr<const RelationVocab> relations;
  std::vector<Sample> samples;
  std::vector<std::size_t> split;
  nlohmann::json echo;
};

PreparedBenchmark prepare_benchmark(const BenchmarkSource& source);

/// Hex SHA-256 of the canonical JSON of everything that determines a cell's
/// RunRecord.
std::string cell_hash(const nlohmann::json& benchmark_echo, const StrategyConfig& config, const std::string& label);

}  // namespace lifelong::cli
