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


#include "lifelong/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <istream>
#include <ostream>

#include "lifelong/rng.hpp"

namespace lifelong {

namespace {

void glorot_fill(std::span<double> w, std::size_t rows, std::size_t cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  for (auto& v : w) v = (2.0 * uniform01(rng) - 1.0) * limit;
}

std::vector<double> project(const RelModel& m, const Encoder& enc, std::span<const TokenId> tokens) {
  const auto pooled = m.vocab().mean_of(tokens);
  const auto& ws = m.params().layout().segment(enc.weight_seg);
  std::vector<double> out(ws.rows);
  affine_apply(m.params().segment(enc.weight_seg), ws.rows, ws.cols, m.params().segment(enc.bias_seg), pooled,
               out);
  for (auto& v : out) v = std::tanh(v);
  return out;
}

}  // namespace

RelModel::RelModel(std::shared_ptr<const VocabEmbedding> vocab, std::shared_ptr<const RelationVocab> relations,
                   std::size_t d_hid, std::uint64_t seed)
    : vocab_(std::move(vocab)), relations_(std::move(relations)), d_hid_(d_hid) {
  if (d_hid_ == 0) throw ContractViolation("RelModel: hidden size must be positive");
  auto layout = std::make_shared<ParamLayout>();
  const std::size_t d_emb = vocab_->dim();
  sentence_.weight_seg = layout->add("sentence.weight", d_hid_, d_emb);
  sentence_.bias_seg = layout->add("sentence.bias", d_hid_, 1);
  relation_.weight_seg = layout->add("relation.weight", d_hid_, d_emb);
  relation_.bias_seg = layout->add("relation.bias", d_hid_, 1);
  alignment_.matrix_seg = layout->add("align.matrix", d_hid_, d_hid_);
  alignment_.offset_seg = layout->add("align.offset", d_hid_, 1);
  params_ = ParamVector(std::move(layout));

  Rng rng(derive_seed(seed, {0x6d6f64656cULL}));
  glorot_fill(params_.mutable_segment(sentence_.weight_seg), d_hid_, d_emb, rng);
  glorot_fill(params_.mutable_segment(relation_.weight_seg), d_hid_, d_emb, rng);
  reset_alignment();
}

std::vector<std::size_t> RelModel::encoder_segments() const {
  return {sentence_.weight_seg, sentence_.bias_seg, relation_.weight_seg, relation_.bias_seg};
}

std::vector<std::size_t> RelModel::alignment_segments() const {
  return {alignment_.matrix_seg, alignment_.offset_seg};
}

void RelModel::reset_alignment() {
  auto a = params_.mutable_segment(alignment_.matrix_seg);
  std::fill(a.begin(), a.end(), 0.0);
  for (std::size_t i = 0; i < d_hid_; ++i) a[i * d_hid_ + i] = 1.0;
  auto c = params_.mutable_segment(alignment_.offset_seg);
  std::fill(c.begin(), c.end(), 0.0);
}

std::vector<double> apply_alignment(const RelModel& m, std::span<const double> hidden) {
  std::vector<double> out(m.d_hid());
  affine_apply(m.params().segment(m.alignment().matrix_seg), m.d_hid(), m.d_hid(),
               m.params().segment(m.alignment().offset_seg), hidden, out);
  return out;
}

std::vector<double> encode_sentence(const RelModel& m, std::span<const TokenId> tokens, bool align) {
  if (tokens.empty()) throw ContractViolation("encode_sentence: empty token sequence");
  auto h = project(m, m.sentence_encoder(), tokens);
  return align ? apply_alignment(m, h) : h;
}

std::vector<double> encode_relation(const RelModel& m, std::span<const TokenId> relation_tokens, bool align) {
  if (relation_tokens.empty()) throw ContractViolation("encode_relation: empty token sequence");
  auto h = project(m, m.relation_encoder(), relation_tokens);
  return align ? apply_alignment(m, h) : h;
}

std::vector<double> encode_label(const RelModel& m, LabelId label, bool align) {
  return encode_relation(m, m.relations().name_tokens.at(static_cast<std::size_t>(label)), align);
}

double score(const RelModel& m, std::span<const TokenId> sentence, std::span<const TokenId> relation) {
  return cosine(encode_sentence(m, sentence, true), encode_relation(m, relation, true));
}

const std::vector<double>& RelationEmbeddingCache::get(LabelId label) {
  auto it = cache_.find(label);
  if (it == cache_.end()) it = cache_.emplace(label, encode_label(*model_, label, true)).first;
  return it->second;
}

LabelId predict(const RelModel& m, const Sample& sample, std::span<const LabelId> candidates,
                RelationEmbeddingCache* cache) {
  if (candidates.empty()) throw ContractViolation("predict: empty candidate set");
  RelationEmbeddingCache local(m);
  RelationEmbeddingCache& rel = cache != nullptr ? *cache : local;
  const auto sent = encode_sentence(m, sample.tokens, true);
  LabelId best = candidates.front();
  double best_score = -2.0;
  for (LabelId c : candidates) {
    const double s = cosine(sent, rel.get(c));
    if (s > best_score || (s == best_score && c < best)) {
      best = c;
      best_score = s;
    }
  }
  return best;
}

Var encode_on_tape(Tape& tape, const RelModel& m, const Encoder& enc, std::span<const TokenId> tokens,
                   bool align) {
  if (tokens.empty()) throw ContractViolation("encode: empty token sequence");
  Var h = tape.tanh(tape.affine(enc.weight_seg, enc.bias_seg, tape.constant(m.vocab().mean_of(tokens))));
  if (align) h = tape.affine(m.alignment().matrix_seg, m.alignment().offset_seg, h);
  return h;
}

RankingLossBuilder::RankingLossBuilder(Tape& tape, const RelModel& m, bool align, double margin,
                                       bool frozen_encoders)
    : tape_(&tape), model_(&m), align_(align), margin_(margin), frozen_(frozen_encoders) {
  if (!(margin > 0.0)) throw ContractViolation("ranking loss: margin must be positive");
}

Var RankingLossBuilder::relation(LabelId label) {
  auto it = relations_.find(label);
  if (it == relations_.end()) {
    const auto& toks = model_->relations().name_tokens.at(static_cast<std::size_t>(label));
    it = relations_.emplace(label, encode(model_->relation_encoder(), toks)).first;
  }
  return it->second;
}

Var RankingLossBuilder::sentence(std::span<const TokenId> tokens) {
  return encode(model_->sentence_encoder(), tokens);
}

Var RankingLossBuilder::encode(const Encoder& enc, std::span<const TokenId> tokens) {
  if (!frozen_) return encode_on_tape(*tape_, *model_, enc, tokens, align_);
  if (tokens.empty()) throw ContractViolation("encode: empty token sequence");
  Var h = tape_->constant(project(*model_, enc, tokens));
  if (align_) h = tape_->affine(model_->alignment().matrix_seg, model_->alignment().offset_seg, h);
  return h;
}

Var RankingLossBuilder::sample_loss(std::span<const TokenId> tokens, LabelId gold,
                                    std::span<const LabelId> negatives) {
  if (std::find(negatives.begin(), negatives.end(), gold) != negatives.end()) {
    throw ContractViolation("training_loss: gold label present among negatives");
  }
  // Relations first so cached encodings precede the sentence on the tape.
  const Var gold_rel = relation(gold);
  std::vector<Var> neg_rel;
  neg_rel.reserve(negatives.size());
  for (LabelId n : negatives) neg_rel.push_back(relation(n));
  const Var sent = sentence(tokens);
  const Var pos = tape_->cosine(sent, gold_rel);
  std::vector<Var> terms;
  terms.reserve(negatives.size());
  for (Var r : neg_rel) terms.push_back(tape_->hinge(pos, tape_->cosine(sent, r), margin_));
  return tape_->sum(terms);
}

Var RankingLossBuilder::sample_loss(const Sample& s, std::span<const LabelId> candidates) {
  std::vector<LabelId> negatives;
  negatives.reserve(candidates.size());
  for (LabelId c : candidates) {
    if (c != s.gold) negatives.push_back(c);
  }
  return sample_loss(s.tokens, s.gold, negatives);
}

Var training_loss(const RelModel& m, const Sample& sample, std::span<const LabelId> negatives, double margin,
                  Tape& tape, bool align) {
  RankingLossBuilder builder(tape, m, align, margin);
  return builder.sample_loss(sample.tokens, sample.gold, negatives);
}

namespace {

constexpr char kMagic[4] = {'L', 'L', 'C', 'K'};

void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 8);
}

std::uint64_t get_le(std::istream& in, int bytes) {
  char b[8] = {};
  in.read(b, bytes);
  if (!in) throw std::runtime_error("checkpoint: truncated stream");
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[i])) << (8 * i);
  return v;
}

}  // namespace

void save_checkpoint(const ParamVector& params, std::ostream& out) {
  out.write(kMagic, 4);
  put_u32(out, kCheckpointVersion);
  const auto& segs = params.layout().segments();
  put_u32(out, static_cast<std::uint32_t>(segs.size()));
  for (const auto& s : segs) {
    put_u32(out, static_cast<std::uint32_t>(s.name.size()));
    out.write(s.name.data(), static_cast<std::streamsize>(s.name.size()));
    put_u64(out, s.rows);
    put_u64(out, s.cols);
  }
  put_u64(out, params.size());
  for (double v : params.values()) put_u64(out, std::bit_cast<std::uint64_t>(v));
}

ParamVector load_checkpoint(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || !std::equal(magic, magic + 4, kMagic)) throw std::runtime_error("checkpoint: bad magic");
  const auto version = static_cast<std::uint32_t>(get_le(in, 4));
  if (version != kCheckpointVersion) {
    throw std::runtime_error("checkpoint: unsupported format version " + std::to_string(version));
  }
  const auto nseg = static_cast<std::uint32_t>(get_le(in, 4));
  auto layout = std::make_shared<ParamLayout>();
  for (std::uint32_t i = 0; i < nseg; ++i) {
    const auto len = static_cast<std::uint32_t>(get_le(in, 4));
    std::string name(len, '\0');
    in.read(name.data(), len);
    if (!in) throw std::runtime_error("checkpoint: truncated segment name");
    const auto rows = get_le(in, 8);
    const auto cols = get_le(in, 8);
    layout->add(std::move(name), rows, cols);
  }
  const auto count = get_le(in, 8);
  if (count != layout->total()) throw std::runtime_error("checkpoint: value count does not match layout");
  ParamVector params(std::move(layout));
  auto values = params.mutable_values();
  for (auto& v : values) v = std::bit_cast<double>(get_le(in, 8));
  return params;
}

void load_checkpoint_into(RelModel& m, std::istream& in) {
  const auto loaded = load_checkpoint(in);
  if (!(loaded.layout() == m.params().layout())) throw ContractViolation("checkpoint: layout mismatch");
  auto dst = m.params().mutable_values();
  const auto src = loaded.values();
  std::copy(src.begin(), src.end(), dst.begin());
}

}  // namespace lifelong
