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
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lifelong/data.hpp"
#include "lifelong/rng.hpp"

namespace lifelong {

inline constexpr std::size_t kCandidateSetSize = 10;
inline constexpr std::uint64_t kDefaultSplitSeed = 20190602;

/// Malformed input file; the message names the file and line.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint64_t kClusterSplitRestarts = 10;

/// Relation id -> task index, from k-means over relation-name embeddings
/// (best inertia over kClusterSplitRestarts seeded runs). Every task gets at
/// least one relation.
std::vector<std::size_t> cluster_split(const RelationVocab& relations, const VocabEmbedding& vocab, std::size_t K,
                                       std::uint64_t seed);

/// Partitions samples by their gold relation's task, splits each task
/// 80/10/10 into train/valid/test (fixed `split_seed`), then permutes task
/// order with `shuffle_seed`.
TaskStream build_stream(std::span<const Sample> samples, std::span<const std::size_t> split,
                        std::uint64_t shuffle_seed, std::uint64_t split_seed = kDefaultSplitSeed);

struct SyntheticConfig {
  std::size_t tasks = 10;
  std::size_t relations_per_task = 8;
  std::size_t samples_per_relation = 60;
  std::size_t d_emb = 25;
  double noise = 0.35;
  std::uint64_t seed = 7;
  /// Spread of relation prototypes around their task centre.
  double relation_spread = 0.6;
  /// Share of the task centre kept in sentence tokens; the rest of a
  /// sentence is the task-rotated offset from the centre.
  double task_signal = 0.0;
  std::size_t tokens_per_sample = 6;
  std::size_t pool_tokens_per_relation = 12;
  /// Sentence styles per relation, drawn with weights 1, 1/2, 1/3, ...
  std::size_t modes_per_relation = 1;
  /// Spread of each style's offset from the relation prototype.
  double mode_spread = 0.0;
};

struct Benchmark {
  std::shared_ptr<const VocabEmbedding> vocab;
  std::shared_ptr<const RelationVocab> relations;
  std::vector<Sample> samples;
  /// Relation id -> task index.
  std::vector<std::size_t> split;
};

/// Desk-scale relation benchmark with a planted task structure. Each task
/// has a centre; its relations' prototypes scatter around it, and relation
/// names embed next to their prototypes. Sentence tokens embed at the
/// prototype passed through a task-specific rotation plus Gaussian noise, so
/// tasks compete for the shared sentence projection.
Benchmark gen_synthetic(const SyntheticConfig& config);

/// Gold plus up to kCandidateSetSize - 1 other labels from `pool`, sorted.
std::vector<LabelId> draw_candidates(LabelId gold, std::span<const LabelId> pool, Rng& rng);

struct LoadedDataset {
  std::vector<Sample> samples;
  std::shared_ptr<const RelationVocab> relations;
  std::shared_ptr<const VocabEmbedding> vocab;
};

/// Samples: JSON lines {"tokens": [string], "relation": int, "candidates": [int]}.
/// Embeddings: text, one "token v1 v2 ..." per line (an optional
/// "count dim" header line is skipped). Relations: "id<TAB>name" per line,
/// ids 0..n-1. OOV tokens map to UNK.
LoadedDataset load_relation_dataset(const std::filesystem::path& samples_path,
                                    const std::filesystem::path& embeddings_path,
                                    const std::filesystem::path& relations_path);

VocabEmbedding read_embeddings(std::istream& in, const std::string& source = "<embeddings>");
void write_embeddings(const VocabEmbedding& vocab, std::ostream& out);
void write_samples_jsonl(std::span<const Sample> samples, const VocabEmbedding& vocab, std::ostream& out);
void write_relations_tsv(const RelationVocab& relations, std::ostream& out);
/// Task label sets and split sizes.
void write_stream_manifest(const TaskStream& stream, std::ostream& out);

/// Writes samples.jsonl, embeddings.txt, relations.tsv and manifest.json.
void write_benchmark(const Benchmark& bench, const std::filesystem::path& dir);

}  // namespace lifelong
