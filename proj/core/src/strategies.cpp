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


#include "lifelong/strategies.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <numeric>

#include "lifelong/bench.hpp"
#include "lifelong/gproject.hpp"
#include "lifelong/rng.hpp"

namespace lifelong {

namespace {

struct KindName {
  StrategyKind kind;
  const char* name;
};

constexpr std::array<KindName, 10> kKindNames{{
    {StrategyKind::kOrigin, "origin"},
    {StrategyKind::kEmr, "emr"},
    {StrategyKind::kEwc, "ewc"},
    {StrategyKind::kGem, "gem"},
    {StrategyKind::kAgem, "agem"},
    {StrategyKind::kEaEmr, "ea_emr"},
    {StrategyKind::kEaEmrNoSel, "ea_emr_no_sel"},
    {StrategyKind::kEaEmrNoAlign, "ea_emr_no_align"},
    {StrategyKind::kEmrKmeans, "emr_kmeans"},
    {StrategyKind::kEmrIcarl, "emr_icarl"},
}};

// Stream tags for derive_seed.
enum : std::uint64_t {
  kTagBatches = 1,
  kTagReplay = 2,
  kTagSelect = 3,
  kTagFisher = 4,
  kTagAlignReplay = 5,
  kTagAgem = 6,
  kTagGem = 7,
  kTagAlignBatches = 8,
};

}  // namespace

std::string to_string(StrategyKind kind) {
  for (const auto& kn : kKindNames) {
    if (kn.kind == kind) return kn.name;
  }
  return "unknown";
}

StrategyKind parse_strategy(std::string_view name) {
  for (const auto& kn : kKindNames) {
    if (name == kn.name) return kn.kind;
  }
  throw ContractViolation("unknown strategy '" + std::string(name) + "'");
}

std::string to_string(SelectionKind kind) {
  switch (kind) {
    case SelectionKind::kRandom:
      return "random";
    case SelectionKind::kKmeans:
      return "kmeans";
    case SelectionKind::kIcarl:
      return "icarl";
  }
  return "unknown";
}

SelectionKind parse_selection(std::string_view name) {
  if (name == "random") return SelectionKind::kRandom;
  if (name == "kmeans") return SelectionKind::kKmeans;
  if (name == "icarl") return SelectionKind::kIcarl;
  throw ContractViolation("unknown selection '" + std::string(name) + "'");
}

bool uses_memory(StrategyKind kind) { return kind != StrategyKind::kOrigin && kind != StrategyKind::kEwc; }

bool uses_alignment(StrategyKind kind) {
  return kind == StrategyKind::kEaEmr || kind == StrategyKind::kEaEmrNoSel || kind == StrategyKind::kEaEmrNoAlign;
}

StrategyConfig StrategyConfig::defaults_for(StrategyKind kind) {
  StrategyConfig c;
  c.name = kind;
  switch (kind) {
    case StrategyKind::kEaEmr:
    case StrategyKind::kEaEmrNoAlign:
    case StrategyKind::kEmrKmeans:
      c.selection = SelectionKind::kKmeans;
      break;
    case StrategyKind::kEmrIcarl:
      c.selection = SelectionKind::kIcarl;
      break;
    default:
      c.selection = SelectionKind::kRandom;
  }
  return c;
}

void StrategyConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ContractViolation(std::string("StrategyConfig: ") + what);
  };
  require(lr_model > 0.0, "lr_model must be positive");
  require(lr_align > 0.0, "lr_align must be positive");
  require(epochs_model > 0, "epochs_model must be positive");
  require(batch > 0, "batch must be positive");
  require(margin > 0.0, "margin must be positive");
  require(ewc_alpha >= 0.0, "ewc_alpha must be non-negative");
  require(d_hid > 0, "d_hid must be positive");
  require(gem_tol > 0.0, "gem_tol must be positive");
  require(gem_max_iters > 0, "gem_max_iters must be positive");
}

nlohmann::json to_json(const StrategyConfig& c) {
  return {{"name", to_string(c.name)},
          {"lr_model", c.lr_model},
          {"lr_align", c.lr_align},
          {"epochs_model", c.epochs_model},
          {"epochs_align", c.epochs_align},
          {"batch", c.batch},
          {"replay_batch", c.replay_batch},
          {"ewc_alpha", c.ewc_alpha},
          {"agem_ref_samples", c.agem_ref_samples},
          {"margin", c.margin},
          {"selection", to_string(c.selection)},
          {"replay_mode", c.replay_mode == ReplayMode::kTaskLevel ? "task" : "sample"},
          {"seed", c.seed},
          {"memory_per_task", c.memory_per_task},
          {"fisher_samples", c.fisher_samples},
          {"d_hid", c.d_hid},
          {"gem_tol", c.gem_tol},
          {"gem_max_iters", c.gem_max_iters}};
}

StrategyConfig config_from_json(const nlohmann::json& j, const StrategyConfig& base) {
  if (!j.is_object()) throw ContractViolation("strategy config must be a JSON object");
  StrategyConfig c = base;
  if (j.contains("name")) {
    const auto seed = c.seed;
    const auto kind = parse_strategy(j.at("name").get<std::string>());
    const auto defaults = StrategyConfig::defaults_for(kind);
    c.name = kind;
    c.selection = defaults.selection;
    c.seed = seed;
  }
  static const std::array<const char*, 18> known{
      "name",  "lr_model",  "lr_align",    "epochs_model", "epochs_align",   "batch",
      "replay_batch", "ewc_alpha", "agem_ref_samples", "margin", "selection", "replay_mode",
      "seed",  "memory_per_task", "fisher_samples", "d_hid", "gem_tol", "gem_max_iters"};
  for (const auto& [key, value] : j.items()) {
    if (std::find_if(known.begin(), known.end(), [&](const char* k) { return key == k; }) == known.end()) {
      throw ContractViolation("strategy config: unknown key '" + key + "'");
    }
  }
  try {
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("lr_model", c.lr_model);
    get("lr_align", c.lr_align);
    get("epochs_model", c.epochs_model);
    get("epochs_align", c.epochs_align);
    get("batch", c.batch);
    get("replay_batch", c.replay_batch);
    get("ewc_alpha", c.ewc_alpha);
    get("agem_ref_samples", c.agem_ref_samples);
    get("margin", c.margin);
    get("seed", c.seed);
    get("memory_per_task", c.memory_per_task);
    get("fisher_samples", c.fisher_samples);
    get("d_hid", c.d_hid);
    get("gem_tol", c.gem_tol);
    get("gem_max_iters", c.gem_max_iters);
    if (j.contains("selection")) c.selection = parse_selection(j.at("selection").get<std::string>());
    if (j.contains("replay_mode")) {
      const auto mode = j.at("replay_mode").get<std::string>();
      if (mode == "task") {
        c.replay_mode = ReplayMode::kTaskLevel;
      } else if (mode == "sample") {
        c.replay_mode = ReplayMode::kSampleLevel;
      } else {
        throw ContractViolation("strategy config: replay_mode must be 'task' or 'sample'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ContractViolation(std::string("strategy config: ") + e.what());
  }
  c.validate();
  return c;
}

double ewc_penalty(const FisherDiag& fisher, const ParamVector& params, double alpha, GradVector* grad) {
  const auto theta = params.values();
  const auto anchor = fisher.anchor.values();
  if (fisher.values.size() != theta.size() || anchor.size() != theta.size()) {
    throw ContractViolation("ewc_penalty: layout mismatch");
  }
  double penalty = 0.0;
  std::span<double> g;
  if (grad != nullptr) g = grad->values();
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double d = theta[i] - anchor[i];
    penalty += fisher.values[i] * d * d;
    if (grad != nullptr) g[i] += 2.0 * alpha * fisher.values[i] * d;
  }
  return alpha * penalty;
}

namespace {

struct LossItem {
  const std::vector<TokenId>* tokens = nullptr;
  LabelId gold = 0;
  std::vector<LabelId> candidates;
};

std::vector<std::vector<std::size_t>> epoch_batches(std::size_t n, std::size_t batch, Rng& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t start = 0; start < n; start += batch) {
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                     order.begin() + static_cast<std::ptrdiff_t>(std::min(n, start + batch)));
  }
  return out;
}

std::vector<LossItem> task_items(const Task& task, const std::vector<std::size_t>& idx) {
  std::vector<LossItem> items;
  items.reserve(idx.size());
  for (auto i : idx) items.push_back({&task.train[i].tokens, task.train[i].gold, task.train[i].candidates});
  return items;
}

// Memory samples are ranked against 10 candidates re-drawn from every
// observed relation.
std::vector<LossItem> replay_items(std::span<const MemoryEntry* const> entries,
                                   const std::vector<LabelId>& observed, Rng& rng) {
  std::vector<LossItem> items;
  items.reserve(entries.size());
  for (const auto* e : entries) {
    items.push_back({&e->sample.tokens, e->sample.gold, draw_candidates(e->sample.gold, observed, rng)});
  }
  return items;
}

Var record_items(Tape& tape, const RelModel& m, std::span<const LossItem> items, bool align, double margin,
                 bool frozen) {
  RankingLossBuilder builder(tape, m, align, margin, frozen);
  std::vector<Var> terms;
  terms.reserve(items.size());
  std::vector<LabelId> negatives;
  for (const auto& it : items) {
    negatives.clear();
    for (LabelId c : it.candidates) {
      if (c != it.gold) negatives.push_back(c);
    }
    terms.push_back(builder.sample_loss(*it.tokens, it.gold, negatives));
  }
  return tape.sum(terms);
}

GradVector items_gradient(const RelModel& m, std::span<const LossItem> items, bool align, double margin,
                          double seed = 1.0, bool frozen = false) {
  Tape tape(m.params());
  const Var loss = record_items(tape, m, items, align, margin, frozen);
  return tape.backward(loss, seed);
}

void freeze(GradVector& g, const std::vector<std::size_t>& segments) {
  for (auto s : segments) g.zero_segment(s);
}

void apply(LifelongState& state, const GradVector& g, double lr, BatchAudit audit) {
  sgd_step(state.model.params(), g, lr);
  state.fb_passes += audit.fb_passes;
  state.audit.push_back(audit);
}

BatchAudit make_audit(const LifelongState& s, StepPhase phase, std::size_t batch, std::size_t replay,
                      std::size_t passes) {
  return BatchAudit{s.task_index, phase, batch, replay, s.memory.total(), passes};
}

void store_exemplars(LifelongState& state, const StrategyConfig& cfg, const Task& task) {
  const std::size_t quota = state.memory.quota_per_task();
  if (quota == 0 || task.train.empty()) return;
  std::vector<std::vector<double>> embeddings;
  embeddings.reserve(task.train.size());
  for (const auto& s : task.train) embeddings.push_back(encode_sentence(state.model, s.tokens, true));
  const auto seed = derive_seed(cfg.seed, {kTagSelect, state.task_index});
  Selection sel;
  switch (cfg.selection) {
    case SelectionKind::kRandom:
      sel = select_random(task.train.size(), quota, seed);
      break;
    case SelectionKind::kKmeans:
      sel = select_kmeans(embeddings, quota, seed);
      break;
    case SelectionKind::kIcarl:
      sel = select_icarl(embeddings, quota);
      break;
  }
  if (sel.clamped) ++state.diagnostics.selection_clamped;
  std::vector<Sample> samples;
  std::vector<std::vector<double>> anchors;
  for (auto i : sel.indices) {
    samples.push_back(task.train[i]);
    anchors.push_back(embeddings[i]);
  }
  state.memory.store_task(state.task_index, std::move(samples), std::move(anchors));
}

// EMR loop. With `align`, losses go through the (frozen) alignment layer.
void emr_loop(LifelongState& state, const StrategyConfig& cfg, const Task& task, bool align) {
  if (task.train.empty()) throw ContractViolation("train: task has no training samples");
  Rng replay_rng(derive_seed(cfg.seed, {kTagReplay, state.task_index}));
  const auto align_segs = state.model.alignment_segments();
  for (std::size_t epoch = 0; epoch < cfg.epochs_model; ++epoch) {
    Rng batch_rng(derive_seed(cfg.seed, {kTagBatches, state.task_index, epoch}));
    for (const auto& batch : epoch_batches(task.train.size(), cfg.batch, batch_rng)) {
      const auto items = task_items(task, batch);
      auto g = items_gradient(state.model, items, align, cfg.margin);
      freeze(g, align_segs);
      apply(state, g, cfg.lr_model, make_audit(state, StepPhase::kTrain, items.size(), 0, items.size()));

      if (state.memory.empty() || cfg.replay_batch == 0) continue;
      const auto replay = sample_replay(state.memory, cfg.replay_mode, cfg.replay_batch, replay_rng);
      const auto ritems = replay_items(replay, state.observed, replay_rng);
      auto rg = items_gradient(state.model, ritems, align, cfg.margin);
      freeze(rg, align_segs);
      // One update's worth of accounting covers the pair: |D| + m.
      state.audit.back().replay_size = ritems.size();
      state.audit.back().fb_passes += ritems.size();
      sgd_step(state.model.params(), rg, cfg.lr_model);
      state.fb_passes += ritems.size();
    }
  }
}

double ranking_loss_value(const RelModel& m, const Sample& s, std::span<const LabelId> candidates, double margin) {
  Tape tape(m.params());
  RankingLossBuilder builder(tape, m, true, margin, true);
  return tape.scalar(builder.sample_loss(s, candidates));
}

}  // namespace

LifelongState make_state(const StrategyConfig& config, std::shared_ptr<const VocabEmbedding> vocab,
                         std::shared_ptr<const RelationVocab> relations, std::size_t num_tasks) {
  config.validate();
  RelModel model(std::move(vocab), std::move(relations), config.d_hid, config.seed);
  const std::size_t quota = uses_memory(config.name) ? config.memory_per_task : 0;
  return LifelongState(std::move(model), EpisodicMemory(quota * num_tasks, quota));
}

void train_origin(LifelongState& state, const StrategyConfig& config, const Task& task) {
  StrategyConfig plain = config;
  plain.replay_batch = 0;
  emr_loop(state, plain, task, false);
}

void train_emr(LifelongState& state, const StrategyConfig& config, const Task& task) {
  emr_loop(state, config, task, false);
  store_exemplars(state, config, task);
}

void train_ewc(LifelongState& state, const StrategyConfig& cfg, const Task& task) {
  if (task.train.empty()) throw ContractViolation("train_ewc: task has no training samples");
  for (std::size_t epoch = 0; epoch < cfg.epochs_model; ++epoch) {
    Rng batch_rng(derive_seed(cfg.seed, {kTagBatches, state.task_index, epoch}));
    for (const auto& batch : epoch_batches(task.train.size(), cfg.batch, batch_rng)) {
      const auto items = task_items(task, batch);
      auto g = items_gradient(state.model, items, false, cfg.margin);
      // The batch loss sums per-sample losses; the penalty is charged per sample too.
      if (state.fisher && cfg.ewc_alpha != 0.0) {
        ewc_penalty(*state.fisher, state.model.params(), cfg.ewc_alpha * static_cast<double>(items.size()), &g);
      }
      apply(state, g, cfg.lr_model, make_audit(state, StepPhase::kTrain, items.size(), 0, items.size()));
    }
  }

  // Empirical diagonal Fisher on a fixed-size sample of this task.
  Rng rng(derive_seed(cfg.seed, {kTagFisher, state.task_index}));
  const auto picks = sample_without_replacement(task.train.size(), cfg.fisher_samples, rng);
  FisherDiag fisher{std::vector<double>(state.model.params().size(), 0.0), state.model.params()};
  for (auto i : picks) {
    const LossItem item{&task.train[i].tokens, task.train[i].gold, task.train[i].candidates};
    const auto g = items_gradient(state.model, std::span<const LossItem>(&item, 1), false, cfg.margin);
    const auto gv = g.values();
    for (std::size_t p = 0; p < gv.size(); ++p) fisher.values[p] += gv[p] * gv[p];
  }
  state.fb_passes += picks.size();
  if (!picks.empty()) {
    for (auto& v : fisher.values) v /= static_cast<double>(picks.size());
  }
  state.fisher = std::move(fisher);
}

void train_gem(LifelongState& state, const StrategyConfig& cfg, const Task& task) {
  if (task.train.empty()) throw ContractViolation("train_gem: task has no training samples");
  Rng cand_rng(derive_seed(cfg.seed, {kTagGem, state.task_index}));
  for (std::size_t epoch = 0; epoch < cfg.epochs_model; ++epoch) {
    Rng batch_rng(derive_seed(cfg.seed, {kTagBatches, state.task_index, epoch}));
    for (const auto& batch : epoch_batches(task.train.size(), cfg.batch, batch_rng)) {
      const auto items = task_items(task, batch);
      auto g = items_gradient(state.model, items, false, cfg.margin);
      std::size_t passes = items.size();
      if (!state.memory.empty()) {
        ConstraintSet constraints(g.size());
        for (const auto& [task_id, bucket] : state.memory.by_task()) {
          std::vector<const MemoryEntry*> entries;
          for (const auto& e : bucket) entries.push_back(&e);
          const auto ritems = replay_items(entries, state.observed, cand_rng);
          const EntriesLoss loss = [&](Tape& tape, std::span<const MemoryEntry* const>) {
            return record_items(tape, state.model, ritems, false, cfg.margin, false);
          };
          const auto gt = task_gradient(state.model.params(), loss, entries);
          constraints.add(std::vector<double>(gt.values().begin(), gt.values().end()));
          passes += entries.size();
        }
        const auto proj = gem_project(g.values(), constraints, cfg.gem_tol, cfg.gem_max_iters);
        ++state.diagnostics.gem_projections;
        if (!proj.converged) ++state.diagnostics.gem_nonconverged;
        if (proj.polished) ++state.diagnostics.gem_polished;
        std::copy(proj.g_tilde.begin(), proj.g_tilde.end(), g.values().begin());
      }
      apply(state, g, cfg.lr_model, make_audit(state, StepPhase::kTrain, items.size(), 0, passes));
    }
  }
  store_exemplars(state, cfg, task);
}

void train_agem(LifelongState& state, const StrategyConfig& cfg, const Task& task) {
  if (task.train.empty()) throw ContractViolation("train_agem: task has no training samples");
  Rng ref_rng(derive_seed(cfg.seed, {kTagAgem, state.task_index}));
  for (std::size_t epoch = 0; epoch < cfg.epochs_model; ++epoch) {
    Rng batch_rng(derive_seed(cfg.seed, {kTagBatches, state.task_index, epoch}));
    for (const auto& batch : epoch_batches(task.train.size(), cfg.batch, batch_rng)) {
      const auto items = task_items(task, batch);
      auto g = items_gradient(state.model, items, false, cfg.margin);
      std::size_t refs = 0;
      if (!state.memory.empty() && cfg.agem_ref_samples > 0) {
        const auto everything = state.memory.all();
        std::vector<const MemoryEntry*> picked;
        for (auto i : sample_without_replacement(everything.size(), cfg.agem_ref_samples, ref_rng)) {
          picked.push_back(everything[i]);
        }
        const auto ritems = replay_items(picked, state.observed, ref_rng);
        const auto g_ref = items_gradient(state.model, ritems, false, cfg.margin,
                                          1.0 / static_cast<double>(ritems.size()));
        const auto proj = agem_project(g.values(), g_ref.values());
        if (proj.projected) ++state.diagnostics.agem_projections;
        std::copy(proj.g_tilde.begin(), proj.g_tilde.end(), g.values().begin());
        refs = ritems.size();
      }
      apply(state, g, cfg.lr_model, make_audit(state, StepPhase::kTrain, items.size(), refs, items.size() + refs));
    }
  }
  store_exemplars(state, cfg, task);
}

void train_ea_emr(LifelongState& state, const StrategyConfig& cfg, const Task& task) {
  // Step 1: encoder only, through the frozen a^(k-1).
  emr_loop(state, cfg, task, true);

  // Step 2: alignment only, encoders frozen.
  const auto encoder_segs = state.model.encoder_segments();
  const bool keep_ranking_loss = cfg.name == StrategyKind::kEaEmrNoAlign;
  std::vector<std::vector<double>> train_hidden;
  std::vector<std::vector<double>> train_target;
  if (!keep_ranking_loss) {
    for (const auto& s : task.train) {
      train_hidden.push_back(encode_sentence(state.model, s.tokens, false));
      train_target.push_back(apply_alignment(state.model, train_hidden.back()));
    }
  }
  std::unordered_map<const MemoryEntry*, std::vector<double>> memory_hidden;
  for (const auto* e : state.memory.all()) memory_hidden.emplace(e, encode_sentence(state.model, e->sample.tokens, false));

  const auto& align = state.model.alignment();
  Rng replay_rng(derive_seed(cfg.seed, {kTagAlignReplay, state.task_index}));
  for (std::size_t epoch = 0; epoch < cfg.epochs_align; ++epoch) {
    Rng batch_rng(derive_seed(cfg.seed, {kTagAlignBatches, state.task_index, epoch}));
    for (const auto& batch : epoch_batches(task.train.size(), cfg.batch, batch_rng)) {
      const auto replay = state.memory.empty() || cfg.replay_batch == 0
                              ? std::vector<const MemoryEntry*>{}
                              : sample_replay(state.memory, cfg.replay_mode, cfg.replay_batch, replay_rng);
      GradVector g(state.model.params().layout_ptr());
      if (keep_ranking_loss) {
        auto items = task_items(task, batch);
        auto ritems = replay_items(replay, state.observed, replay_rng);
        items.insert(items.end(), ritems.begin(), ritems.end());
        g = items_gradient(state.model, items, true, cfg.margin, 1.0, true);
      } else {
        Tape tape(state.model.params());
        std::vector<Var> terms;
        for (auto i : batch) {
          const Var h = tape.affine(align.matrix_seg, align.offset_seg, tape.constant(train_hidden[i]));
          terms.push_back(tape.squared_distance(h, train_target[i]));
        }
        for (const auto* e : replay) {
          const Var h = tape.affine(align.matrix_seg, align.offset_seg, tape.constant(memory_hidden.at(e)));
          terms.push_back(tape.squared_distance(h, state.replay_targets.at(e)));
        }
        g = tape.backward(tape.sum(terms));
      }
      freeze(g, encoder_segs);
      apply(state, g, cfg.lr_align, make_audit(state, StepPhase::kAlign, batch.size(), replay.size(), 0));
    }
  }
  state.diagnostics.joint_objective.push_back(joint_objective(state, cfg, task));
  store_exemplars(state, cfg, task);
}

double alignment_objective(const LifelongState& state, const Task& task) {
  if (!state.snapshot) throw ContractViolation("alignment_objective: no task-boundary snapshot");
  const auto& m = state.model;
  const auto& snap = *state.snapshot;
  const auto& layout = snap.layout();
  const auto a_seg = m.alignment().matrix_seg;
  const auto c_seg = m.alignment().offset_seg;
  double total = 0.0;
  std::vector<double> prev(m.d_hid());
  for (const auto& s : task.train) {
    const auto h = encode_sentence(m, s.tokens, false);
    affine_apply(snap.segment(a_seg), layout.segment(a_seg).rows, layout.segment(a_seg).cols, snap.segment(c_seg),
                 h, prev);
    total += squared_euclidean(apply_alignment(m, h), prev);
  }
  for (const auto* e : state.memory.all()) {
    const auto it = state.replay_targets.find(e);
    if (it == state.replay_targets.end()) continue;
    total += squared_euclidean(encode_sentence(m, e->sample.tokens, true), it->second);
  }
  return total;
}

double joint_objective(const LifelongState& state, const StrategyConfig& cfg, const Task& task) {
  double total = 0.0;
  for (const auto& s : task.train) total += ranking_loss_value(state.model, s, s.candidates, cfg.margin);
  for (const auto* e : state.memory.all()) {
    total += ranking_loss_value(state.model, e->sample, e->sample.candidates, cfg.margin);
    const auto it = state.replay_targets.find(e);
    if (it != state.replay_targets.end()) {
      total += squared_euclidean(encode_sentence(state.model, e->sample.tokens, true), it->second);
    }
  }
  return total;
}

void train_task(LifelongState& state, const StrategyConfig& config, const Task& task, std::size_t k,
                const TaskStream& stream) {
  state.task_index = k;
  state.observed = stream.observed_labels(k);
  state.snapshot = state.model.params();
  state.replay_targets.clear();
  if (uses_alignment(config.name)) {
    for (const auto* e : state.memory.all()) {
      state.replay_targets.emplace(e, encode_sentence(state.model, e->sample.tokens, true));
    }
  }
  switch (config.name) {
    case StrategyKind::kOrigin:
      train_origin(state, config, task);
      break;
    case StrategyKind::kEmr:
    case StrategyKind::kEmrKmeans:
    case StrategyKind::kEmrIcarl:
      train_emr(state, config, task);
      break;
    case StrategyKind::kEwc:
      train_ewc(state, config, task);
      break;
    case StrategyKind::kGem:
      train_gem(state, config, task);
      break;
    case StrategyKind::kAgem:
      train_agem(state, config, task);
      break;
    case StrategyKind::kEaEmr:
    case StrategyKind::kEaEmrNoSel:
    case StrategyKind::kEaEmrNoAlign:
      train_ea_emr(state, config, task);
      break;
  }
}

RunRecord run_stream(const StrategyConfig& config, const TaskStream& stream,
                     std::shared_ptr<const VocabEmbedding> vocab, std::shared_ptr<const RelationVocab> relations,
                     const RunOptions& options) {
  std::optional<LifelongState> discard;
  return run_stream(config, stream, std::move(vocab), std::move(relations), options, discard);
}

RunRecord run_stream(const StrategyConfig& config, const TaskStream& stream,
                     std::shared_ptr<const VocabEmbedding> vocab, std::shared_ptr<const RelationVocab> relations,
                     const RunOptions& options, std::optional<LifelongState>& final_state) {
  if (stream.size() == 0) throw ContractViolation("run_stream: empty task stream");
  RunRecord record;
  record.version = kVersion;
  record.strategy = to_string(config.name);
  record.seed = config.seed;
  record.config = to_json(config);
  record.benchmark = options.benchmark_echo;

  reset_numeric_warnings();
  final_state.emplace(make_state(config, std::move(vocab), std::move(relations), stream.size()));
  LifelongState& state = *final_state;

  std::vector<Sample> whole_test;
  for (const auto& t : stream.tasks) whole_test.insert(whole_test.end(), t.test.begin(), t.test.end());

  using Clock = std::chrono::steady_clock;
  for (std::size_t k = 0; k < stream.size(); ++k) {
    const auto start = Clock::now();
    const auto passes_before = state.fb_passes;
    try {
      train_task(state, config, stream.tasks[k], k, stream);
    } catch (const std::exception& e) {
      record.status = "failed";
      record.error = "task " + std::to_string(k) + ": " + e.what();
      break;
    }
    StepMetrics m;
    m.step = k + 1;
    m.task_id = k;
    const auto& observed = state.observed;
    for (std::size_t j = 0; j <= k; ++j) {
      m.acc_per_task.push_back(acc_task(state.model, stream.tasks[j].test, CandidateMode::kFixed, observed));
      m.acc_per_task_full.push_back(
          acc_task(state.model, stream.tasks[j].test, CandidateMode::kFullObserved, observed));
    }
    m.acc_avg = acc_avg(m.acc_per_task);
    m.acc_avg_full = acc_avg(m.acc_per_task_full);
    m.acc_whole = acc_whole(state.model, whole_test, observed, CandidateMode::kFixed);
    m.acc_whole_full = acc_whole(state.model, whole_test, observed, CandidateMode::kFullObserved);
    m.fb_passes = state.fb_passes - passes_before;
    if (options.record_timing) {
      m.wall_ms = static_cast<std::uint64_t>(
          std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start).count());
    }
    record.steps.push_back(std::move(m));
  }

  const auto& warn = numeric_warnings();
  record.metadata = {
      {"relation_tokenization", "split on non-alphanumeric characters, lowercased"},
      {"memory_budget", state.memory.budget_total()},
      {"memory_quota_per_task", state.memory.quota_per_task()},
      {"selection_clamped", state.diagnostics.selection_clamped},
      {"gem_projections", state.diagnostics.gem_projections},
      {"gem_nonconverged", state.diagnostics.gem_nonconverged},
      {"gem_polished", state.diagnostics.gem_polished},
      {"agem_projections", state.diagnostics.agem_projections},
      {"joint_objective", state.diagnostics.joint_objective},
      {"zero_norm_cosine_warnings", warn.zero_norm_cosine},
      {"zero_reference_gradient_warnings", warn.zero_reference_gradient},
  };
  return record;
}

}  // namespace lifelong
