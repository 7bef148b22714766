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
#include <iosfwd>
#include <map>
#include <memory>
#include <span>
#include <vector>

#include "lifelong/data.hpp"
#include "lifelong/numgrad.hpp"

namespace lifelong {

/// Affine d_emb -> d_hid projection (tanh applied after), over mean-pooled
/// token embeddings.
struct Encoder {
  std::size_t weight_seg = 0;
  std::size_t bias_seg = 0;
};

/// a(h) = A h + c, stacked on top of both encoders.
struct AlignmentLayer {
  std::size_t matrix_seg = 0;
  std::size_t offset_seg = 0;
};

/// Ranking relation-detection model: sentence encoder, relation encoder,
/// cosine scoring, plus the alignment layer. Word vectors are shared by both
/// encoders and are not trained.
class RelModel {
 public:
  static constexpr std::size_t kDefaultHidden = 200;

  RelModel(std::shared_ptr<const VocabEmbedding> vocab, std::shared_ptr<const RelationVocab> relations,
           std::size_t d_hid, std::uint64_t seed);

  const VocabEmbedding& vocab() const { return *vocab_; }
  const RelationVocab& relations() const { return *relations_; }
  std::size_t d_emb() const { return vocab_->dim(); }
  std::size_t d_hid() const { return d_hid_; }

  ParamVector& params() { return params_; }
  const ParamVector& params() const { return params_; }

  const Encoder& sentence_encoder() const { return sentence_; }
  const Encoder& relation_encoder() const { return relation_; }
  const AlignmentLayer& alignment() const { return alignment_; }

  std::vector<std::size_t> encoder_segments() const;
  std::vector<std::size_t> alignment_segments() const;

  /// Resets the alignment layer to A = I, c = 0.
  void reset_alignment();

 private:
  std::shared_ptr<const VocabEmbedding> vocab_;
  std::shared_ptr<const RelationVocab> relations_;
  std::size_t d_hid_;
  Encoder sentence_;
  Encoder relation_;
  AlignmentLayer alignment_;
  ParamVector params_;
};

std::vector<double> encode_sentence(const RelModel& m, std::span<const TokenId> tokens, bool apply_alignment);
std::vector<double> encode_relation(const RelModel& m, std::span<const TokenId> relation_tokens,
                                    bool apply_alignment);
std::vector<double> encode_label(const RelModel& m, LabelId label, bool apply_alignment);
/// a(h) for an already-encoded embedding.
std::vector<double> apply_alignment(const RelModel& m, std::span<const double> hidden);

/// Cosine of the aligned sentence and relation embeddings.
double score(const RelModel& m, std::span<const TokenId> sentence, std::span<const TokenId> relation);

/// Memoizes aligned relation embeddings for a frozen model.
class RelationEmbeddingCache {
 public:
  explicit RelationEmbeddingCache(const RelModel& m) : model_(&m) {}
  const std::vector<double>& get(LabelId label);

 private:
  const RelModel* model_;
  std::map<LabelId, std::vector<double>> cache_;
};

/// Highest-scoring candidate; ties go to the smallest label id.
LabelId predict(const RelModel& m, const Sample& sample, std::span<const LabelId> candidates,
                RelationEmbeddingCache* cache = nullptr);

/// Tape-side encoders.
Var encode_on_tape(Tape& tape, const RelModel& m, const Encoder& enc, std::span<const TokenId> tokens,
                   bool apply_alignment);

/// Builds summed ranking losses on a tape, encoding each relation at most once.
/// With `frozen_encoders`, encoder outputs enter the tape as constants so
/// only the alignment layer receives gradient.
class RankingLossBuilder {
 public:
  RankingLossBuilder(Tape& tape, const RelModel& m, bool apply_alignment, double margin,
                     bool frozen_encoders = false);

  /// sum over negatives of margin_rank_loss(score(gold), score(neg)).
  Var sample_loss(std::span<const TokenId> tokens, LabelId gold, std::span<const LabelId> negatives);
  /// Negatives are candidates minus gold.
  Var sample_loss(const Sample& s, std::span<const LabelId> candidates);

  Var relation(LabelId label);
  Var sentence(std::span<const TokenId> tokens);

 private:
  Var encode(const Encoder& enc, std::span<const TokenId> tokens);

  Tape* tape_;
  const RelModel* model_;
  bool align_;
  double margin_;
  bool frozen_;
  std::map<LabelId, Var> relations_;
};

/// Loss over `negatives` for one sample, recorded on `tape`. Gold among the
/// negatives is a ContractViolation.
Var training_loss(const RelModel& m, const Sample& sample, std::span<const LabelId> negatives, double margin,
                  Tape& tape, bool apply_alignment = true);

/// Checkpoint: "LLCK" magic, u32 format version, u32 segment count, per
/// segment {u32 name length, name bytes, u64 rows, u64 cols}, u64 value
/// count, then IEEE-754 doubles. All integers and doubles little-endian.
inline constexpr std::uint32_t kCheckpointVersion = 1;
void save_checkpoint(const ParamVector& params, std::ostream& out);
ParamVector load_checkpoint(std::istream& in);
/// Loads into `m`, requiring an identical layout.
void load_checkpoint_into(RelModel& m, std::istream& in);

}  // namespace lifelong
