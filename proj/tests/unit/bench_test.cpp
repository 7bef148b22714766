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


#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <doctest.h>

#include "fixtures.hpp"
#include "lifelong/bench.hpp"
#include "lifelong/oracles.hpp"
#include "lifelong/strategies.hpp"

using namespace lifelong;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("lifelong_bench_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  fs::path write(const std::string& name, const std::string& text) const {
    std::ofstream(path / name) << text;
    return path / name;
  }
};

std::string error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const FormatError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("relation name tokenization") {
  CHECK(tokenize_relation_name("place_of_birth") == std::vector<std::string>{"place", "of", "birth"});
  CHECK(tokenize_relation_name("/people/Person") == std::vector<std::string>{"people", "person"});
  CHECK(tokenize_relation_name("__").empty());
}

TEST_CASE("vocabulary") {
  VocabEmbedding v(2);
  CHECK(v.size() == 1);
  CHECK(v.lookup("missing") == VocabEmbedding::kUnk);
  const auto a = v.add("a", std::vector<double>{1.0, 3.0});
  const auto b = v.add("b", std::vector<double>{3.0, 5.0});
  CHECK(v.lookup("b") == b);
  const std::vector<TokenId> ids{a, b};
  CHECK(v.mean_of(ids) == std::vector<double>{2.0, 4.0});
  CHECK_THROWS_AS(v.add("a", std::vector<double>{0.0, 0.0}), ContractViolation);
  CHECK_THROWS_AS(v.add("c", std::vector<double>{0.0}), ContractViolation);
  CHECK_THROWS_AS(v.mean_of({}), ContractViolation);

  RelationVocab rel;
  rel.add("a_b", v);
  CHECK(rel.name_embedding(0, v) == std::vector<double>{2.0, 4.0});
  CHECK_THROWS_AS(rel.add("--", v), ContractViolation);
}

TEST_CASE("cluster_split") {
  SUBCASE("recovers the planted partition") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      SyntheticConfig cfg;
      cfg.seed = seed;
      const auto b = gen_synthetic(cfg);
      const auto split = cluster_split(*b.relations, *b.vocab, cfg.tasks, seed + 10);
      CHECK(oracles::adjusted_rand_index(split, b.split) == 1.0);
    }
  }
  SUBCASE("K = number of relations") {
    auto cfg = testing::tiny_synthetic();
    const auto b = gen_synthetic(cfg);
    const auto n = b.relations->size();
    const auto split = cluster_split(*b.relations, *b.vocab, n, 0);
    CHECK(std::set<std::size_t>(split.begin(), split.end()).size() == n);
  }
  SUBCASE("every task is non-empty") {
    const auto b = gen_synthetic(testing::tiny_synthetic());
    for (std::size_t k = 1; k <= b.relations->size(); ++k) {
      const auto split = cluster_split(*b.relations, *b.vocab, k, k);
      CHECK(std::set<std::size_t>(split.begin(), split.end()).size() == k);
    }
  }
  SUBCASE("errors") {
    const auto b = gen_synthetic(testing::tiny_synthetic());
    CHECK_THROWS_AS(cluster_split(*b.relations, *b.vocab, b.relations->size() + 1, 0), ContractViolation);
    CHECK_THROWS_AS(cluster_split(*b.relations, *b.vocab, 0, 0), ContractViolation);
  }
}

TEST_CASE("build_stream") {
  const auto b = gen_synthetic(testing::tiny_synthetic());
  const auto stream = build_stream(b.samples, b.split, 3);
  CHECK_NOTHROW(validate_stream(stream));
  CHECK(stream.size() == 4);

  SUBCASE("partition of the input") {
    std::size_t total = 0;
    for (const auto& t : stream.tasks) {
      total += t.train.size() + t.valid.size() + t.test.size();
      const auto n = static_cast<double>(t.train.size() + t.valid.size() + t.test.size());
      CHECK(static_cast<double>(t.train.size()) == doctest::Approx(0.8 * n).epsilon(0.05));
      for (const auto* part : {&t.train, &t.valid, &t.test}) {
        for (const auto& s : *part) {
          CHECK(std::binary_search(t.labels.begin(), t.labels.end(), s.gold));
          CHECK(std::find(s.candidates.begin(), s.candidates.end(), s.gold) != s.candidates.end());
        }
      }
    }
    CHECK(total == b.samples.size());
  }
  SUBCASE("shuffle seed permutes whole tasks") {
    const auto other = build_stream(b.samples, b.split, 4);
    auto key = [](const TaskStream& s) {
      std::vector<std::vector<LabelId>> labels;
      for (const auto& t : s.tasks) labels.push_back(t.labels);
      return labels;
    };
    auto a = key(stream);
    auto c = key(other);
    CHECK(a != c);
    for (const auto& t : stream.tasks) {
      const auto it = std::find_if(other.tasks.begin(), other.tasks.end(),
                                   [&](const Task& o) { return o.labels == t.labels; });
      REQUIRE(it != other.tasks.end());
      CHECK(*it == t);
    }
  }
  SUBCASE("single cluster") {
    const std::vector<std::size_t> one(b.relations->size(), 0);
    const auto s = build_stream(b.samples, one, 9);
    REQUIRE(s.size() == 1);
    CHECK(s.tasks[0].labels.size() == b.relations->size());
  }
  SUBCASE("observed labels grow") {
    CHECK(stream.observed_labels(0) == stream.tasks[0].labels);
    CHECK(stream.observed_labels(3).size() == b.relations->size());
  }
  SUBCASE("errors") {
    auto split = b.split;
    split.pop_back();
    CHECK_THROWS_AS(build_stream(b.samples, split, 0), ContractViolation);
    auto gap = b.split;
    for (auto& t : gap) t = t == 3 ? 4 : t;
    CHECK_THROWS_AS(build_stream(b.samples, gap, 0), ContractViolation);
  }
  SUBCASE("deterministic") { CHECK(build_stream(b.samples, b.split, 3) == stream); }
}

TEST_CASE("gen_synthetic") {
  const auto cfg = testing::tiny_synthetic();
  const auto b = gen_synthetic(cfg);
  CHECK(b.relations->size() == 12);
  CHECK(b.samples.size() == 240);
  CHECK(b.vocab->dim() == 6);
  for (const auto& s : b.samples) {
    CHECK_NOTHROW(validate_sample(s));
    CHECK(s.candidates.size() == kCandidateSetSize);
    CHECK(std::is_sorted(s.candidates.begin(), s.candidates.end()));
  }
  CHECK(gen_synthetic(cfg).samples == b.samples);
  CHECK(*gen_synthetic(cfg).vocab == *b.vocab);

  auto bad = cfg;
  bad.noise = -1.0;
  CHECK_THROWS_AS(gen_synthetic(bad), ContractViolation);
  bad = cfg;
  bad.tasks = 0;
  CHECK_THROWS_AS(gen_synthetic(bad), ContractViolation);

  SUBCASE("noiseless stream is learned perfectly on the first task") {
    SyntheticConfig clean;
    clean.noise = 0.0;
    clean.tasks = 1;
    const auto cb = gen_synthetic(clean);
    const auto stream = build_stream(cb.samples, cb.split, 0);
    auto sc = StrategyConfig::defaults_for(StrategyKind::kOrigin);
    sc.epochs_model = 3;
    const auto rec = run_stream(sc, stream, cb.vocab, cb.relations);
    REQUIRE(rec.complete());
    CHECK(rec.steps[0].acc_per_task[0] == 1.0);
  }
}

TEST_CASE("draw_candidates") {
  Rng rng(3);
  std::vector<LabelId> pool;
  for (LabelId i = 0; i < 30; ++i) pool.push_back(i);
  const auto c = draw_candidates(7, pool, rng);
  CHECK(c.size() == kCandidateSetSize);
  CHECK(std::binary_search(c.begin(), c.end(), 7));
  CHECK(std::set<LabelId>(c.begin(), c.end()).size() == c.size());
  const std::vector<LabelId> small{1, 2, 3};
  CHECK(draw_candidates(2, small, rng) == std::vector<LabelId>{1, 2, 3});
}

TEST_CASE("dataset files") {
  TempDir dir("files");
  const auto b = gen_synthetic(testing::tiny_synthetic());

  SUBCASE("round trip") {
    write_benchmark(b, dir.path);
    const auto loaded =
        load_relation_dataset(dir.path / "samples.jsonl", dir.path / "embeddings.txt", dir.path / "relations.tsv");
    CHECK(loaded.samples == b.samples);
    CHECK(*loaded.vocab == *b.vocab);
    CHECK(*loaded.relations == *b.relations);
    CHECK(fs::exists(dir.path / "manifest.json"));
  }

  const auto emb = dir.write("emb.txt", "2 2\nalpha 1 0\nbeta 0 1\n");
  const auto rel = dir.write("rel.tsv", "0\talpha\n1\tbeta_gamma\n");

  SUBCASE("OOV tokens map to UNK") {
    const auto s = dir.write("s.jsonl", R"({"tokens": ["alpha", "zeta"], "relation": 1, "candidates": [0, 1]})"
                                        "\n");
    const auto d = load_relation_dataset(s, emb, rel);
    REQUIRE(d.samples.size() == 1);
    CHECK(d.samples[0].tokens == std::vector<TokenId>{d.vocab->lookup("alpha"), VocabEmbedding::kUnk});
  }
  SUBCASE("sample errors carry the line number") {
    const std::string good = R"({"tokens": ["alpha"], "relation": 0, "candidates": [0, 1]})";
    const auto empty_cand = dir.write("a.jsonl", good + "\n" + R"({"tokens": ["alpha"], "relation": 0, "candidates": []})" + "\n");
    CHECK(error_of([&] { load_relation_dataset(empty_cand, emb, rel); }).find("a.jsonl:2: empty candidate list") !=
          std::string::npos);
    const auto no_gold = dir.write("b.jsonl", R"({"tokens": ["alpha"], "relation": 0, "candidates": [1]})");
    CHECK(error_of([&] { load_relation_dataset(no_gold, emb, rel); }).find("b.jsonl:1:") != std::string::npos);
    const auto broken = dir.write("c.jsonl", good + "\n\n{oops\n");
    CHECK(error_of([&] { load_relation_dataset(broken, emb, rel); }).find("c.jsonl:3: invalid JSON") !=
          std::string::npos);
    const auto unknown = dir.write("d.jsonl", R"({"tokens": ["alpha"], "relation": 5, "candidates": [5]})");
    CHECK(error_of([&] { load_relation_dataset(unknown, emb, rel); }).find("unknown relation id 5") !=
          std::string::npos);
  }
  SUBCASE("embedding errors") {
    std::istringstream ragged("a 1 2\nb 1\n");
    CHECK_THROWS_WITH_AS(read_embeddings(ragged, "e"), doctest::Contains("e:2: inconsistent dimension"), FormatError);
    std::istringstream nan_like("a 1 x\n");
    CHECK_THROWS_AS(read_embeddings(nan_like), FormatError);
    std::istringstream dup("a 1\na 2\n");
    CHECK_THROWS_AS(read_embeddings(dup), FormatError);
  }
  SUBCASE("relation file errors") {
    const auto s = dir.write("ok.jsonl", R"({"tokens": ["alpha"], "relation": 0, "candidates": [0]})");
    const auto gap = dir.write("gap.tsv", "0\talpha\n2\tbeta\n");
    CHECK_THROWS_AS(load_relation_dataset(s, emb, gap), FormatError);
    CHECK_THROWS_AS(load_relation_dataset(s, emb, dir.path / "missing.tsv"), FormatError);
  }
  SUBCASE("embedding text round trip") {
    std::ostringstream out;
    write_embeddings(*b.vocab, out);
    std::istringstream in(out.str());
    CHECK(read_embeddings(in) == *b.vocab);
  }
}
