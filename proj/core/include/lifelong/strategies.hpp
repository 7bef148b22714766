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
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "lifelong/data.hpp"
#include "lifelong/eval.hpp"
#include "lifelong/memory.hpp"
#include "lifelong/model.hpp"

namespace lifelong {

inline constexpr const char* kVersion = "lifelong 0.3.0";

enum class StrategyKind {
  kOrigin,
  kEmr,
  kEwc,
  kGem,
  kAgem,
  kEaEmr,
  kEaEmrNoSel,
  kEaEmrNoAlign,
  kEmrKmeans,
  kEmrIcarl,
};

enum class SelectionKind { kRandom, kKmeans, kIcarl };

std::string to_string(StrategyKind kind);
StrategyKind parse_strategy(std::string_view name);
std::string to_string(SelectionKind kind);
SelectionKind parse_selection(std::string_view name);

bool uses_memory(StrategyKind kind);
bool uses_alignment(StrategyKind kind);

struct StrategyConfig {
  StrategyKind name = StrategyKind::kEmr;
  double lr_model = 0.001;
  double lr_align = 0.0001;
  std::size_t epochs_model = 3;
  std::size_t epochs_align = 20;
  std::size_t batch = 50;
  std::size_t replay_batch = 50;
  double ewc_alpha = 100.0;
  std::size_t agem_ref_samples = 100;
  double margin = 0.2;
  SelectionKind selection = SelectionKind::kRandom;
  ReplayMode replay_mode = ReplayMode::kTaskLevel;
  std::uint64_t seed = 0;
  /// Fixed per-task quota b; the budget B is b times the number of tasks.
  std::size_t memory_per_task = 50;
  std::size_t fisher_samples = 100;
  std::size_t d_hid = RelModel::kDefaultHidden;
  double gem_tol = 1e-6;
  std::size_t gem_max_iters = 1000;

  /// Defaults for `kind`; the name decides the selection strategy.
  static StrategyConfig defaults_for(StrategyKind kind);

  /// Throws ContractViolation on non-positive rates or counts.
  void validate() const;
};

nlohmann::json to_json(const StrategyConfig& c);
/// Overlays the keys present in `j` onto `base` ("name" resets selection to
/// that strategy's default unless "selection" is also given).
StrategyConfig config_from_json(const nlohmann::json& j, const StrategyConfig& base = StrategyConfig{});

/// Empirical diagonal Fisher and the parameter snapshot it anchors to.
struct FisherDiag {
  std::vector<double> values;
  ParamVector anchor;
};

/// EWC penalty alpha * sum_i F_i (theta_i - anchor_i)^2, with its gradient
/// added into `grad` when non-null.
double ewc_penalty(const FisherDiag& fisher, const ParamVector& params, double alpha, GradVector* grad);

enum class StepPhase { kTrain, kReplay, kAlign };

/// One optimizer step, as seen by the pass accountant.
struct BatchAudit {
  std::size_t task_index = 0;
  StepPhase phase = StepPhase::kTrain;
  std::size_t batch_size = 0;     // |D|
  std::size_t replay_size = 0;    // m (EMR) or reference samples (A-GEM)
  std::size_t memory_size = 0;    // |M| at the time of the step
  std::size_t fb_passes = 0;      // forward/backward passes spent on the update
};

struct RunDiagnostics {
  std::size_t selection_clamped = 0;
  std::size_t gem_nonconverged = 0;
  std::size_t gem_polished = 0;
  std::size_t gem_projections = 0;
  std::size_t agem_projections = 0;
  std::vector<double> joint_objective;  // EA variants, one per task
};

struct LifelongState {
  RelModel model;
  EpisodicMemory memory;
  /// f^(k-1), a^(k-1): parameters at the start of the current task.
  std::optional<ParamVector> snapshot;
  std::optional<FisherDiag> fisher;
  std::size_t task_index = 0;
  std::vector<LabelId> observed;
  std::uint64_t fb_passes = 0;
  std::vector<BatchAudit> audit;
  RunDiagnostics diagnostics;
  /// a^(k-1) f^(k-1)(x) for every memory entry, recomputed at each task
  /// boundary (alignment-training targets).
  std::unordered_map<const MemoryEntry*, std::vector<double>> replay_targets;

  LifelongState(RelModel m, EpisodicMemory mem) : model(std::move(m)), memory(std::move(mem)) {}
};

/// Creates the state for a run over `num_tasks` tasks.
LifelongState make_state(const StrategyConfig& config, std::shared_ptr<const VocabEmbedding> vocab,
                         std::shared_ptr<const RelationVocab> relations, std::size_t num_tasks);

// Per-task trainers. `state.task_index` and `state.observed` must already
// describe the task being trained.
void train_origin(LifelongState& state, const StrategyConfig& config, const Task& task);
void train_emr(LifelongState& state, const StrategyConfig& config, const Task& task);
/// Each batch step adds ewc_penalty with alpha scaled by the batch size.
void train_ewc(LifelongState& state, const StrategyConfig& config, const Task& task);
void train_gem(LifelongState& state, const StrategyConfig& config, const Task& task);
void train_agem(LifelongState& state, const StrategyConfig& config, const Task& task);
void train_ea_emr(LifelongState& state, const StrategyConfig& config, const Task& task);

/// Sets up bookkeeping for task `k` and dispatches to the configured trainer.
void train_task(LifelongState& state, const StrategyConfig& config, const Task& task, std::size_t k,
                const TaskStream& stream);

/// Objective of the alignment step at the current parameters: squared drift
/// of train embeddings from a^(k-1) f(x) plus drift of memory embeddings from
/// their boundary targets.
double alignment_objective(const LifelongState& state, const Task& task);

/// Joint EA-EMR objective over the task's training data and the whole memory:
/// ranking losses of both plus the memory alignment drift. Logged only.
double joint_objective(const LifelongState& state, const StrategyConfig& config, const Task& task);

struct RunOptions {
  nlohmann::json benchmark_echo = nlohmann::json::object();
  bool record_timing = true;
};

/// Trains on every task in order, evaluating after each. A failure stops the
/// run and returns the partial record with status "failed".
RunRecord run_stream(const StrategyConfig& config, const TaskStream& stream,
                     std::shared_ptr<const VocabEmbedding> vocab, std::shared_ptr<const RelationVocab> relations,
                     const RunOptions& options = {});

/// Same as run_stream but also hands back the final state (for audits).
RunRecord run_stream(const StrategyConfig& config, const TaskStream& stream,
                     std::shared_ptr<const VocabEmbedding> vocab, std::shared_ptr<const RelationVocab> relations,
                     const RunOptions& options, std::optional<LifelongState>& final_state);

}  // namespace lifelong
