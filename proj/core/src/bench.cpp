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


#include "lifelong/bench.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lifelong/memory.hpp"

namespace lifelong {

std::vector<std::size_t> cluster_split(const RelationVocab& relations, const VocabEmbedding& vocab, std::size_t K,
                                       std::uint64_t seed) {
  if (K == 0 || K > relations.size()) {
    throw ContractViolation("cluster_split: need 1 <= K <= number of relations");
  }
  std::vector<std::vector<double>> points;
  points.reserve(relations.size());
  for (std::size_t r = 0; r < relations.size(); ++r) {
    points.push_back(relations.name_embedding(static_cast<LabelId>(r), vocab));
  }
  ClusterAssignment best;
  double best_inertia = std::numeric_limits<double>::infinity();
  for (std::uint64_t restart = 0; restart < kClusterSplitRestarts; ++restart) {
    auto fit = kmeans(points, K, derive_seed(seed, {restart}), 300);
    const double inertia = fit.inertia(points);
    if (inertia < best_inertia) {
      best_inertia = inertia;
      best = std::move(fit);
    }
  }
  return best.assignment;
}

TaskStream build_stream(std::span<const Sample> samples, std::span<const std::size_t> split,
                        std::uint64_t shuffle_seed, std::uint64_t split_seed) {
  if (split.empty()) throw ContractViolation("build_stream: empty relation split");
  const std::size_t num_tasks = *std::max_element(split.begin(), split.end()) + 1;
  std::vector<Task> tasks(num_tasks);
  for (std::size_t r = 0; r < split.size(); ++r) tasks[split[r]].labels.push_back(static_cast<LabelId>(r));

  std::vector<std::vector<const Sample*>> grouped(num_tasks);
  for (const auto& s : samples) {
    if (s.gold < 0 || static_cast<std::size_t>(s.gold) >= split.size()) {
      throw ContractViolation("build_stream: sample relation " + std::to_string(s.gold) + " missing from split");
    }
    grouped[split[static_cast<std::size_t>(s.gold)]].push_back(&s);
  }
  for (std::size_t t = 0; t < num_tasks; ++t) {
    auto& g = grouped[t];
    if (g.empty()) throw ContractViolation("build_stream: task " + std::to_string(t) + " has no samples");
    Rng rng(derive_seed(split_seed, {t}));
    for (std::size_t i = g.size(); i > 1; --i) std::swap(g[i - 1], g[uniform_index(rng, i)]);
    const std::size_t n_train = g.size() * 8 / 10;
    const std::size_t n_valid = g.size() / 10;
    for (std::size_t i = 0; i < g.size(); ++i) {
      auto& dst = i < n_train ? tasks[t].train : (i < n_train + n_valid ? tasks[t].valid : tasks[t].test);
      dst.push_back(*g[i]);
    }
  }

  Rng order_rng(derive_seed(shuffle_seed, {0x6f72646572ULL}));
  std::vector<std::size_t> order(num_tasks);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_index(order_rng, i)]);
  TaskStream stream;
  for (auto t : order) stream.tasks.push_back(std::move(tasks[t]));
  return stream;
}

std::vector<LabelId> draw_candidates(LabelId gold, std::span<const LabelId> pool, Rng& rng) {
  std::vector<LabelId> others;
  others.reserve(pool.size());
  for (LabelId l : pool) {
    if (l != gold) others.push_back(l);
  }
  std::vector<LabelId> out{gold};
  for (auto i : sample_without_replacement(others.size(), kCandidateSetSize - 1, rng)) out.push_back(others[i]);
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

std::vector<double> gaussian(std::size_t d, double scale, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> v(d);
  for (auto& x : v) x = scale * n(rng);
  return v;
}

// Random orthogonal matrix (Gram-Schmidt on a Gaussian matrix), row-major.
Matrix random_rotation(std::size_t d, Rng& rng) {
  Matrix q(d, d);
  for (std::size_t i = 0; i < d; ++i) {
    auto v = gaussian(d, 1.0, rng);
    for (std::size_t k = 0; k < i; ++k) {
      const double proj = dot(v, q.row(k));
      for (std::size_t j = 0; j < d; ++j) v[j] -= proj * q.at(k, j);
    }
    const double n = norm(v);
    for (std::size_t j = 0; j < d; ++j) q.at(i, j) = v[j] / n;
  }
  return q;
}

std::vector<double> matvec(const Matrix& m, std::span<const double> x) {
  std::vector<double> out(m.rows, 0.0);
  for (std::size_t i = 0; i < m.rows; ++i) out[i] = dot(m.row(i), x);
  return out;
}

}  // namespace

Benchmark gen_synthetic(const SyntheticConfig& cfg) {
  if (cfg.tasks == 0 || cfg.relations_per_task == 0 || cfg.samples_per_relation == 0 || cfg.d_emb == 0 ||
      cfg.tokens_per_sample == 0 || cfg.pool_tokens_per_relation == 0) {
    throw ContractViolation("gen_synthetic: all counts must be positive");
  }
  if (!(cfg.noise >= 0.0)) throw ContractViolation("gen_synthetic: noise must be non-negative");

  Rng rng(derive_seed(cfg.seed, {0x73796e7468ULL}));
  const std::size_t d = cfg.d_emb;
  const std::size_t num_rel = cfg.tasks * cfg.relations_per_task;

  auto vocab = std::make_shared<VocabEmbedding>(d);
  auto relations = std::make_shared<RelationVocab>();
  Benchmark bench;
  bench.split.resize(num_rel);

  std::vector<std::vector<double>> prototypes(num_rel);
  std::vector<std::vector<double>> centres;
  std::vector<Matrix> rotations;
  for (std::size_t t = 0; t < cfg.tasks; ++t) {
    const auto centre = gaussian(d, 1.0, rng);
    centres.push_back(centre);
    rotations.push_back(random_rotation(d, rng));
    for (std::size_t r = 0; r < cfg.relations_per_task; ++r) {
      const std::size_t id = t * cfg.relations_per_task + r;
      auto p = gaussian(d, cfg.relation_spread, rng);
      for (std::size_t j = 0; j < d; ++j) p[j] += centre[j];
      prototypes[id] = std::move(p);
      bench.split[id] = t;
    }
  }

  // Relation names sit next to their prototypes.
  for (std::size_t id = 0; id < num_rel; ++id) {
    auto e = gaussian(d, 0.05, rng);
    for (std::size_t j = 0; j < d; ++j) e[j] += prototypes[id][j];
    const std::string name = "rel" + std::to_string(id);
    vocab->add(name, e);
  }
  for (std::size_t id = 0; id < num_rel; ++id) relations->add("rel" + std::to_string(id), *vocab);

  // Sentence token pools, one per (relation, mode): the rotated offset from
  // the task centre plus a mode offset, a scaled copy of the centre, and noise.
  const std::size_t modes = std::max<std::size_t>(1, cfg.modes_per_relation);
  std::vector<std::vector<std::vector<TokenId>>> pools(num_rel);
  for (std::size_t id = 0; id < num_rel; ++id) {
    const auto& centre = centres[bench.split[id]];
    for (std::size_t mode = 0; mode < modes; ++mode) {
      std::vector<double> offset(d);
      const auto shift = gaussian(d, modes > 1 ? cfg.mode_spread : 0.0, rng);
      for (std::size_t j = 0; j < d; ++j) offset[j] = prototypes[id][j] - centre[j] + shift[j];
      auto rotated = matvec(rotations[bench.split[id]], offset);
      for (std::size_t j = 0; j < d; ++j) rotated[j] += cfg.task_signal * centre[j];
      std::vector<TokenId> pool;
      for (std::size_t k = 0; k < cfg.pool_tokens_per_relation; ++k) {
        auto e = gaussian(d, cfg.noise, rng);
        for (std::size_t j = 0; j < d; ++j) e[j] += rotated[j];
        std::string token = "w" + std::to_string(id) + "x" + std::to_string(k);
        if (modes > 1) token += "m" + std::to_string(mode);
        pool.push_back(vocab->add(std::move(token), e));
      }
      pools[id].push_back(std::move(pool));
    }
  }

  // Mode m of a relation is drawn with weight 1 / (m + 1).
  std::vector<double> mode_cdf(modes);
  double acc = 0.0;
  for (std::size_t m = 0; m < modes; ++m) mode_cdf[m] = acc += 1.0 / static_cast<double>(m + 1);
  for (auto& c : mode_cdf) c /= acc;

  std::vector<LabelId> all_labels(num_rel);
  std::iota(all_labels.begin(), all_labels.end(), 0);
  for (std::size_t id = 0; id < num_rel; ++id) {
    for (std::size_t s = 0; s < cfg.samples_per_relation; ++s) {
      Sample sample;
      sample.gold = static_cast<LabelId>(id);
      std::size_t mode = 0;
      if (modes > 1) {
        const double u = uniform01(rng);
        while (mode + 1 < modes && u >= mode_cdf[mode]) ++mode;
      }
      const auto& pool = pools[id][mode];
      for (std::size_t k = 0; k < cfg.tokens_per_sample; ++k) {
        sample.tokens.push_back(pool[uniform_index(rng, pool.size())]);
      }
      sample.candidates = draw_candidates(sample.gold, all_labels, rng);
      bench.samples.push_back(std::move(sample));
    }
  }

  bench.vocab = std::move(vocab);
  bench.relations = std::move(relations);
  return bench;
}

namespace {

std::string where(const std::string& source, std::size_t line) {
  return source + ":" + std::to_string(line) + ": ";
}

bool parse_double(std::string_view text, double& out) {
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

VocabEmbedding read_embeddings(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::pair<std::string, std::vector<double>>> rows;
  std::size_t dim = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto fields = split_ws(line);
    if (fields.empty()) continue;
    if (lineno == 1 && fields.size() == 2) {
      double a = 0, b = 0;
      if (parse_double(fields[0], a) && parse_double(fields[1], b) && a == std::floor(a) && b == std::floor(b)) {
        continue;  // word2vec-style "count dim" header
      }
    }
    if (fields.size() < 2) throw FormatError(where(source, lineno) + "expected a token followed by values");
    std::vector<double> v;
    v.reserve(fields.size() - 1);
    for (std::size_t i = 1; i < fields.size(); ++i) {
      double x = 0;
      if (!parse_double(fields[i], x)) {
        throw FormatError(where(source, lineno) + "invalid number '" + std::string(fields[i]) + "'");
      }
      v.push_back(x);
    }
    if (dim == 0) {
      dim = v.size();
    } else if (v.size() != dim) {
      throw FormatError(where(source, lineno) + "inconsistent dimension " + std::to_string(v.size()) +
                        " (expected " + std::to_string(dim) + ")");
    }
    rows.emplace_back(std::string(fields[0]), std::move(v));
  }
  if (rows.empty()) throw FormatError(source + ": no embeddings found");
  VocabEmbedding vocab(dim);
  std::size_t idx = 0;
  for (auto& [tok, v] : rows) {
    ++idx;
    if (vocab.lookup(tok) != VocabEmbedding::kUnk || tok == VocabEmbedding::kUnkToken) {
      throw FormatError(source + ": duplicate token '" + tok + "' (entry " + std::to_string(idx) + ")");
    }
    vocab.add(std::move(tok), v);
  }
  return vocab;
}

void write_embeddings(const VocabEmbedding& vocab, std::ostream& out) {
  for (std::size_t id = 1; id < vocab.size(); ++id) {
    out << vocab.token(static_cast<TokenId>(id));
    for (double v : vocab.row(static_cast<TokenId>(id))) out << ' ' << format_double(v);
    out << '\n';
  }
}

void write_samples_jsonl(std::span<const Sample> samples, const VocabEmbedding& vocab, std::ostream& out) {
  for (const auto& s : samples) {
    std::vector<std::string> tokens;
    tokens.reserve(s.tokens.size());
    for (TokenId t : s.tokens) tokens.push_back(vocab.token(t));
    out << nlohmann::json{{"tokens", tokens}, {"relation", s.gold}, {"candidates", s.candidates}}.dump() << '\n';
  }
}

void write_relations_tsv(const RelationVocab& relations, std::ostream& out) {
  for (std::size_t i = 0; i < relations.size(); ++i) out << i << '\t' << relations.names[i] << '\n';
}

void write_stream_manifest(const TaskStream& stream, std::ostream& out) {
  nlohmann::json tasks = nlohmann::json::array();
  for (std::size_t i = 0; i < stream.size(); ++i) {
    const auto& t = stream.tasks[i];
    tasks.push_back({{"index", i},
                     {"labels", t.labels},
                     {"train", t.train.size()},
                     {"valid", t.valid.size()},
                     {"test", t.test.size()}});
  }
  out << nlohmann::json{{"tasks", tasks}}.dump(2) << '\n';
}

void write_benchmark(const Benchmark& bench, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
    return f;
  };
  {
    auto f = open("samples.jsonl");
    write_samples_jsonl(bench.samples, *bench.vocab, f);
  }
  {
    auto f = open("embeddings.txt");
    write_embeddings(*bench.vocab, f);
  }
  {
    auto f = open("relations.tsv");
    write_relations_tsv(*bench.relations, f);
  }
  {
    auto f = open("manifest.json");
    write_stream_manifest(build_stream(bench.samples, bench.split, 0), f);
  }
}

LoadedDataset load_relation_dataset(const std::filesystem::path& samples_path,
                                    const std::filesystem::path& embeddings_path,
                                    const std::filesystem::path& relations_path) {
  LoadedDataset out;
  std::ifstream emb(embeddings_path);
  if (!emb) throw FormatError("cannot open " + embeddings_path.string());
  auto vocab = std::make_shared<VocabEmbedding>(read_embeddings(emb, embeddings_path.string()));

  std::ifstream rel(relations_path);
  if (!rel) throw FormatError("cannot open " + relations_path.string());
  std::vector<std::string> names;
  std::vector<bool> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(rel, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    std::size_t id = 0;
    const auto* end = line.data() + (tab == std::string::npos ? 0 : tab);
    if (tab == std::string::npos || std::from_chars(line.data(), end, id).ptr != end) {
      throw FormatError(where(relations_path.string(), lineno) + "expected '<id>\\t<name>'");
    }
    if (id >= names.size()) {
      names.resize(id + 1);
      seen.resize(id + 1, false);
    }
    if (seen[id]) throw FormatError(where(relations_path.string(), lineno) + "duplicate relation id");
    seen[id] = true;
    names[id] = line.substr(tab + 1);
  }
  if (names.empty()) throw FormatError(relations_path.string() + ": no relations found");
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (!seen[i]) throw FormatError(relations_path.string() + ": relation id " + std::to_string(i) + " missing");
  }
  auto relations = std::make_shared<RelationVocab>();
  for (auto& n : names) relations->add(std::move(n), *vocab);

  std::ifstream in(samples_path);
  if (!in) throw FormatError("cannot open " + samples_path.string());
  lineno = 0;
  const auto num_rel = static_cast<LabelId>(relations->size());
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto here = where(samples_path.string(), lineno);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(here + "invalid JSON: " + e.what());
    }
    Sample s;
    try {
      const auto tokens = j.at("tokens").get<std::vector<std::string>>();
      s.tokens = vocab->lookup_all(tokens);
      s.gold = j.at("relation").get<LabelId>();
      s.candidates = j.at("candidates").get<std::vector<LabelId>>();
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(here + "bad sample fields: " + e.what());
    }
    if (s.tokens.empty()) throw FormatError(here + "empty token list");
    if (s.candidates.empty()) throw FormatError(here + "empty candidate list");
    if (s.gold < 0 || s.gold >= num_rel) throw FormatError(here + "unknown relation id " + std::to_string(s.gold));
    for (LabelId c : s.candidates) {
      if (c < 0 || c >= num_rel) throw FormatError(here + "unknown candidate id " + std::to_string(c));
    }
    if (std::find(s.candidates.begin(), s.candidates.end(), s.gold) == s.candidates.end()) {
      throw FormatError(here + "candidate set does not contain the gold relation");
    }
    out.samples.push_back(std::move(s));
  }
  if (out.samples.empty()) throw FormatError(samples_path.string() + ": no samples found");
  out.relations = std::move(relations);
  out.vocab = std::move(vocab);
  return out;
}

}  // namespace lifelong
