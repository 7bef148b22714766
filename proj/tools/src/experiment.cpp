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


#include "lifelong/cli/experiment.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <set>
#include <sstream>

#include <openssl/evp.h>

namespace lifelong::cli {

namespace {

void require_known_keys(const nlohmann::json& j, std::initializer_list<const char*> known, const std::string& where) {
  if (!j.is_object()) throw SpecError(where + ": expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; })) {
      throw SpecError(where + ": unknown key '" + key + "'");
    }
  }
}

bool is_count(const nlohmann::json& v) {
  return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

template <typename T>
void read_field(const nlohmann::json& j, const char* key, T& field, const std::string& where) {
  if (!j.contains(key)) return;
  const auto& v = j.at(key);
  if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
    if (!is_count(v)) throw SpecError(where + ": '" + key + "' must be a non-negative integer");
  } else if constexpr (std::is_same_v<T, double>) {
    if (!v.is_number()) throw SpecError(where + ": '" + key + "' must be a number");
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!v.is_string()) throw SpecError(where + ": '" + key + "' must be a string");
  }
  field = v.get<T>();
}

constexpr std::array<const char*, 7> kCountKeys{"epochs_model", "epochs_align",  "batch",        "replay_batch",
                                                "agem_ref_samples", "memory_per_task", "fisher_samples"};

StrategyConfig strategy_overlay(const nlohmann::json& j, const StrategyConfig& base, const std::string& where) {
  for (const char* key : kCountKeys) {
    if (j.contains(key) && !is_count(j.at(key))) {
      throw SpecError(where + ": '" + key + "' must be a non-negative integer");
    }
  }
  for (const char* key : {"d_hid", "gem_max_iters"}) {
    if (j.contains(key) && !is_count(j.at(key))) {
      throw SpecError(where + ": '" + key + "' must be a non-negative integer");
    }
  }
  try {
    return config_from_json(j, base);
  } catch (const std::exception& e) {
    throw SpecError(where + ": " + e.what());
  }
}

}  // namespace

SyntheticConfig synthetic_from_json(const nlohmann::json& j, const SyntheticConfig& base) {
  const std::string where = "benchmark.synthetic";
  require_known_keys(j,
                     {"tasks", "relations_per_task", "samples_per_relation", "d_emb", "noise", "seed",
                      "relation_spread", "task_signal", "tokens_per_sample", "pool_tokens_per_relation"},
                     where);
  SyntheticConfig c = base;
  read_field(j, "tasks", c.tasks, where);
  read_field(j, "relations_per_task", c.relations_per_task, where);
  read_field(j, "samples_per_relation", c.samples_per_relation, where);
  read_field(j, "d_emb", c.d_emb, where);
  read_field(j, "noise", c.noise, where);
  read_field(j, "seed", c.seed, where);
  read_field(j, "relation_spread", c.relation_spread, where);
  read_field(j, "task_signal", c.task_signal, where);
  read_field(j, "tokens_per_sample", c.tokens_per_sample, where);
  read_field(j, "pool_tokens_per_relation", c.pool_tokens_per_relation, where);
  if (c.tasks == 0 || c.relations_per_task == 0 || c.samples_per_relation == 0 || c.d_emb == 0 ||
      c.tokens_per_sample == 0 || c.pool_tokens_per_relation == 0) {
    throw SpecError(where + ": counts must be positive");
  }
  if (!(c.noise >= 0.0) || !(c.relation_spread >= 0.0)) throw SpecError(where + ": noise and spread must be >= 0");
  if (c.samples_per_relation * c.relations_per_task < 10) {
    throw SpecError(where + ": each task needs at least 10 samples");
  }
  return c;
}

nlohmann::json to_json(const SyntheticConfig& c) {
  return {{"tasks", c.tasks},
          {"relations_per_task", c.relations_per_task},
          {"samples_per_relation", c.samples_per_relation},
          {"d_emb", c.d_emb},
          {"noise", c.noise},
          {"seed", c.seed},
          {"relation_spread", c.relation_spread},
          {"task_signal", c.task_signal},
          {"tokens_per_sample", c.tokens_per_sample},
          {"pool_tokens_per_relation", c.pool_tokens_per_relation}};
}

nlohmann::json BenchmarkSource::to_json() const {
  nlohmann::json j;
  if (synthetic) {
    j["synthetic"] = cli::to_json(*synthetic);
  } else if (dataset) {
    j["dataset"] = {{"samples", dataset->samples.string()},
                    {"embeddings", dataset->embeddings.string()},
                    {"relations", dataset->relations.string()},
                    {"tasks", dataset->tasks}};
  }
  j["split_seed"] = split_seed;
  return j;
}

nlohmann::json ExperimentSpec::to_json() const {
  nlohmann::json strategies_json = nlohmann::json::array();
  for (const auto& s : strategies) {
    auto c = lifelong::to_json(s.config);
    c.erase("seed");
    c["label"] = s.label;
    strategies_json.push_back(std::move(c));
  }
  auto bench = benchmark.to_json();
  bench.erase("split_seed");
  return {{"benchmark", std::move(bench)},
          {"split_seed", benchmark.split_seed},
          {"strategies", std::move(strategies_json)},
          {"seeds", seeds},
          {"output", output.string()}};
}

ExperimentSpec parse_experiment_spec(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  require_known_keys(j, {"benchmark", "split_seed", "defaults", "strategies", "seeds", "output"}, "spec");
  ExperimentSpec spec;

  if (!j.contains("benchmark")) throw SpecError("spec: missing 'benchmark'");
  const auto& b = j.at("benchmark");
  require_known_keys(b, {"synthetic", "dataset"}, "benchmark");
  if (b.contains("synthetic") == b.contains("dataset")) {
    throw SpecError("benchmark: give exactly one of 'synthetic' or 'dataset'");
  }
  if (b.contains("synthetic")) {
    spec.benchmark.synthetic = synthetic_from_json(b.at("synthetic"));
  } else {
    const auto& d = b.at("dataset");
    const std::string where = "benchmark.dataset";
    require_known_keys(d, {"samples", "embeddings", "relations", "tasks"}, where);
    DatasetSource ds;
    for (const char* key : {"samples", "embeddings", "relations"}) {
      if (!d.contains(key)) throw SpecError(where + ": missing '" + key + "'");
    }
    std::string samples;
    std::string embeddings;
    std::string relations;
    read_field(d, "samples", samples, where);
    read_field(d, "embeddings", embeddings, where);
    read_field(d, "relations", relations, where);
    read_field(d, "tasks", ds.tasks, where);
    if (ds.tasks == 0) throw SpecError(where + ": tasks must be positive");
    auto resolve = [&](const std::string& p) {
      std::filesystem::path path(p);
      return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
    };
    ds.samples = resolve(samples);
    ds.embeddings = resolve(embeddings);
    ds.relations = resolve(relations);
    spec.benchmark.dataset = std::move(ds);
  }
  read_field(j, "split_seed", spec.benchmark.split_seed, "spec");

  nlohmann::json defaults = nlohmann::json::object();
  if (j.contains("defaults")) {
    defaults = j.at("defaults");
    if (!defaults.is_object()) throw SpecError("defaults: expected a JSON object");
    for (const char* key : {"name", "seed", "label"}) {
      if (defaults.contains(key)) throw SpecError(std::string("defaults: '") + key + "' is not allowed here");
    }
  }

  if (!j.contains("strategies") || !j.at("strategies").is_array() || j.at("strategies").empty()) {
    throw SpecError("spec: 'strategies' must be a non-empty list");
  }
  std::set<std::string> labels;
  for (std::size_t i = 0; i < j.at("strategies").size(); ++i) {
    const std::string where = "strategies[" + std::to_string(i) + "]";
    nlohmann::json entry = j.at("strategies").at(i);
    if (entry.is_string()) entry = nlohmann::json{{"name", entry}};
    if (!entry.is_object() || !entry.contains("name") || !entry.at("name").is_string()) {
      throw SpecError(where + ": expected a strategy name or an object with 'name'");
    }
    if (entry.contains("seed")) throw SpecError(where + ": 'seed' comes from the spec's seed list");
    StrategyKind kind{};
    try {
      kind = parse_strategy(entry.at("name").get<std::string>());
    } catch (const std::exception& e) {
      throw SpecError(where + ": " + e.what());
    }
    StrategyEntry se;
    se.label = entry.at("name").get<std::string>();
    if (entry.contains("label")) {
      read_field(entry, "label", se.label, where);
      if (se.label.empty() || se.label.find_first_of("/\\,") != std::string::npos) {
        throw SpecError(where + ": label must be non-empty and free of '/', '\\' and ','");
      }
      entry.erase("label");
    }
    entry.erase("name");
    const auto base = strategy_overlay(defaults, StrategyConfig::defaults_for(kind), "defaults");
    se.config = strategy_overlay(entry, base, where);
    if (!labels.insert(se.label).second) throw SpecError(where + ": duplicate label '" + se.label + "'");
    spec.strategies.push_back(std::move(se));
  }

  if (!j.contains("seeds") || !j.at("seeds").is_array() || j.at("seeds").empty()) {
    throw SpecError("spec: 'seeds' must be a non-empty list");
  }
  std::set<std::uint64_t> seen;
  for (const auto& s : j.at("seeds")) {
    if (!is_count(s)) throw SpecError("seeds: entries must be non-negative integers");
    if (!seen.insert(s.get<std::uint64_t>()).second) throw SpecError("seeds: duplicate seed");
    spec.seeds.push_back(s.get<std::uint64_t>());
  }

  if (j.contains("output")) {
    std::string out;
    read_field(j, "output", out, "spec");
    spec.output = out;
  }
  return spec;
}

ExperimentSpec load_experiment_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("cannot open config '" + path.string() + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw SpecError(path.string() + ": " + e.what());
  }
  return parse_experiment_spec(j, path.parent_path());
}

PreparedBenchmark prepare_benchmark(const BenchmarkSource& source) {
  PreparedBenchmark out;
  out.echo = source.to_json();
  if (source.synthetic) {
    auto b = gen_synthetic(*source.synthetic);
    out.vocab = std::move(b.vocab);
    out.relations = std::move(b.relations);
    out.samples = std::move(b.samples);
    out.split = std::move(b.split);
    return out;
  }
  if (!source.dataset) throw SpecError("benchmark: no source configured");
  auto loaded = load_relation_dataset(source.dataset->samples, source.dataset->embeddings, source.dataset->relations);
  if (source.dataset->tasks > loaded.relations->size()) {
    throw SpecError("benchmark.dataset: more tasks than relations");
  }
  out.split = cluster_split(*loaded.relations, *loaded.vocab, source.dataset->tasks, source.split_seed);
  out.vocab = std::move(loaded.vocab);
  out.relations = std::move(loaded.relations);
  out.samples = std::move(loaded.samples);
  return out;
}

std::string cell_hash(const nlohmann::json& benchmark_echo, const StrategyConfig& config, const std::string& label) {
  const nlohmann::json key{{"version", kVersion}, {"benchmark", benchmark_echo}, {"config", to_json(config)},
                           {"label", label}};
  const std::string text = key.dump();
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("cell_hash: SHA-256 failed");
  }
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) {
    static const char* digits = "0123456789abcdef";
    hex << digits[digest[i] >> 4] << digits[digest[i] & 0xf];
  }
  return hex.str();
}

}  // namespace lifelong::cli
