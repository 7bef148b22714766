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


#include "lifelong/data.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace lifelong {

VocabEmbedding::VocabEmbedding(std::size_t dim) : table_(0, dim) {
  tokens_.emplace_back(kUnkToken);
  index_.emplace(std::string(kUnkToken), kUnk);
  table_.data.assign(dim, 0.0);
  table_.rows = 1;
}

TokenId VocabEmbedding::add(std::string token, std::span<const double> vector) {
  if (vector.size() != dim()) throw ContractViolation("VocabEmbedding: vector dimension mismatch for " + token);
  if (index_.contains(token)) throw ContractViolation("VocabEmbedding: duplicate token " + token);
  const auto id = static_cast<TokenId>(tokens_.size());
  index_.emplace(token, id);
  tokens_.push_back(std::move(token));
  table_.data.insert(table_.data.end(), vector.begin(), vector.end());
  ++table_.rows;
  return id;
}

TokenId VocabEmbedding::lookup(std::string_view token) const {
  const auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

std::vector<TokenId> VocabEmbedding::lookup_all(std::span<const std::string> tokens) const {
  std::vector<TokenId> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(lookup(t));
  return ids;
}

std::span<const double> VocabEmbedding::row(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw ContractViolation("VocabEmbedding: token id out of range");
  }
  return table_.row(static_cast<std::size_t>(id));
}

std::vector<double> VocabEmbedding::mean_of(std::span<const TokenId> ids) const {
  if (ids.empty()) throw ContractViolation("VocabEmbedding: cannot pool an empty token sequence");
  std::vector<double> acc(dim(), 0.0);
  for (TokenId id : ids) {
    const auto r = row(id);
    for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += r[j];
  }
  const double inv = 1.0 / static_cast<double>(ids.size());
  for (auto& v : acc) v *= inv;
  return acc;
}

std::vector<std::string> tokenize_relation_name(std::string_view name) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : name) {
    const auto uch = static_cast<unsigned char>(ch);
    if (std::isalnum(uch)) {
      cur.push_back(static_cast<char>(std::tolower(uch)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

LabelId RelationVocab::add(std::string name, const VocabEmbedding& vocab) {
  auto words = tokenize_relation_name(name);
  if (words.empty()) throw ContractViolation("RelationVocab: relation name has no tokens: " + name);
  name_tokens.push_back(vocab.lookup_all(words));
  names.push_back(std::move(name));
  return static_cast<LabelId>(names.size() - 1);
}

std::vector<double> RelationVocab::name_embedding(LabelId id, const VocabEmbedding& vocab) const {
  return vocab.mean_of(name_tokens.at(static_cast<std::size_t>(id)));
}

void validate_sample(const Sample& s) {
  if (s.tokens.empty()) throw ContractViolation("Sample: empty token sequence");
  if (std::find(s.candidates.begin(), s.candidates.end(), s.gold) == s.candidates.end()) {
    throw ContractViolation("Sample: candidate set does not contain the gold label");
  }
}

std::vector<LabelId> TaskStream::observed_labels(std::size_t k) const {
  std::vector<LabelId> out;
  for (std::size_t i = 0; i <= k && i < tasks.size(); ++i) {
    out.insert(out.end(), tasks[i].labels.begin(), tasks[i].labels.end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

void validate_stream(const TaskStream& stream) {
  std::set<LabelId> seen;
  for (const auto& task : stream.tasks) {
    const std::set<LabelId> own(task.labels.begin(), task.labels.end());
    for (LabelId l : own) {
      if (!seen.insert(l).second) throw ContractViolation("TaskStream: label sets are not disjoint");
    }
    for (const auto* split : {&task.train, &task.valid, &task.test}) {
      for (const auto& s : *split) {
        validate_sample(s);
        if (!own.contains(s.gold)) throw ContractViolation("TaskStream: sample gold outside its task label set");
      }
    }
  }
}

}  // namespace lifelong
