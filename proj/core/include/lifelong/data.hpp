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
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lifelong/numgrad.hpp"

namespace lifelong {

using TokenId = int;
using LabelId = int;

/// Word vectors with a dedicated UNK row at index 0. Frozen during training.
class VocabEmbedding {
 public:
  static constexpr TokenId kUnk = 0;
  static constexpr std::string_view kUnkToken = "<unk>";

  explicit VocabEmbedding(std::size_t dim);

  /// Appends a token; returns its id. Re-adding an existing token is an error.
  TokenId add(std::string token, std::span<const double> vector);
  /// Id for `token`, or kUnk when it is out of vocabulary.
  TokenId lookup(std::string_view token) const;
  std::vector<TokenId> lookup_all(std::span<const std::string> tokens) const;

  std::size_t size() const { return tokens_.size(); }
  std::size_t dim() const { return table_.cols; }
  const std::string& token(TokenId id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::span<const double> row(TokenId id) const;
  const Matrix& table() const { return table_; }

  /// Mean of the rows for `ids`; throws on an empty sequence.
  std::vector<double> mean_of(std::span<const TokenId> ids) const;

  bool operator==(const VocabEmbedding& other) const {
    return tokens_ == other.tokens_ && table_ == other.table_;
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
  Matrix table_;
};

/// Splits a relation name on non-alphanumeric separators, lowercased.
/// "place_of_birth" -> {"place", "of", "birth"}.
std::vector<std::string> tokenize_relation_name(std::string_view name);

/// Relation id -> name tokens and name embedding.
struct RelationVocab {
  std::vector<std::string> names;
  std::vector<std::vector<TokenId>> name_tokens;

  std::size_t size() const { return names.size(); }
  LabelId add(std::string name, const VocabEmbedding& vocab);
  /// Averaged word embedding of a relation's name tokens.
  std::vector<double> name_embedding(LabelId id, const VocabEmbedding& vocab) const;

  bool operator==(const RelationVocab&) const = default;
};

struct Sample {
  std::vector<TokenId> tokens;
  LabelId gold = 0;
  std::vector<LabelId> candidates;

  bool operator==(const Sample&) const = default;
};

/// Throws ContractViolation unless tokens are non-empty and gold is a candidate.
void validate_sample(const Sample& s);

struct Task {
  std::vector<LabelId> labels;
  std::vector<Sample> train;
  std::vector<Sample> valid;
  std::vector<Sample> test;

  bool operator==(const Task&) const = default;
};

struct TaskStream {
  std::vector<Task> tasks;

  std::size_t size() const { return tasks.size(); }
  /// Union of label sets of tasks [0, k], sorted ascending.
  std::vector<LabelId> observed_labels(std::size_t k) const;

  bool operator==(const TaskStream&) const = default;
};

/// Throws ContractViolation if two tasks share a label or a sample's gold is
/// outside its task's label set.
void validate_stream(const TaskStream& stream);

}  // namespace lifelong
