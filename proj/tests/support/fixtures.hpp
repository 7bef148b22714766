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

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "lifelong/bench.hpp"
#include "lifelong/data.hpp"
#include "lifelong/strategies.hpp"

namespace lifelong::testing {

/// `words` random tokens "t0".."t{words-1}" (ids 1..words).
inline std::shared_ptr<VocabEmbedding> random_vocab(std::size_t dim, std::size_t words, std::uint64_t seed) {
  auto vocab = std::make_shared<VocabEmbedding>(dim);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  for (std::size_t w = 0; w < words; ++w) {
    std::vector<double> v(dim);
    for (auto& x : v) x = nd(rng);
    vocab->add("t" + std::to_string(w), v);
  }
  return vocab;
}

inline SyntheticConfig tiny_synthetic() {
  SyntheticConfig c;
  c.tasks = 4;
  c.relations_per_task = 3;
  c.samples_per_relation = 20;
  c.d_emb = 6;
  c.seed = 5;
  return c;
}

/// Small, fast strategy settings for end-to-end checks.
inline StrategyConfig tiny_config(StrategyKind kind, std::uint64_t seed = 1) {
  auto c = StrategyConfig::defaults_for(kind);
  c.seed = seed;
  c.d_hid = 8;
  c.batch = 10;
  c.replay_batch = 6;
  c.memory_per_task = 5;
  c.epochs_align = 2;
  c.fisher_samples = 10;
  c.agem_ref_samples = 8;
  c.lr_model = 0.01;
  c.lr_align = 0.001;
  return c;
}

}  // namespace lifelong::testing
