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
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>
#include <sstream>

#include "lifelong/cli/commands.hpp"
#include "lifelong/gproject.hpp"
#include "lifelong/memory.hpp"
#include "lifelong/model.hpp"
#include "lifelong/oracles.hpp"
#include "lifelong/rng.hpp"

namespace lifelong::cli {

namespace {

using Clock = std::chrono::steady_clock;

std::vector<double> normal_vector(std::size_t n, double sd, Rng& rng) {
  std::normal_distribution<double> dist(0.0, sd);
  std::vector<double> v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

std::size_t between(Rng& rng, std::size_t lo, std::size_t hi) { return lo + uniform_index(rng, hi - lo + 1); }

double l2(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(acc);
}

SuiteResult finish(std::string name, bool passed, const std::string& detail, Clock::time_point start) {
  return {std::move(name), passed, detail, std::chrono::duration<double>(Clock::now() - start).count()};
}

/// Loss of one sample evaluated with the tape-free kernels.
double plain_loss(const RelModel& m, const Sample& s, std::span<const LabelId> negatives, double margin, bool align) {
  const auto sentence = encode_sentence(m, s.tokens, align);
  const double pos = cosine(sentence, encode_label(m, s.gold, align));
  double total = 0.0;
  for (auto neg : negatives) total += margin_rank_loss(pos, cosine(sentence, encode_label(m, neg, align)), margin);
  return total;
}

bool near_hinge_kink(const RelModel& m, const Sample& s, std::span<const LabelId> negatives, double margin,
                     bool align) {
  const auto sentence = encode_sentence(m, s.tokens, align);
  const double pos = cosine(sentence, encode_label(m, s.gold, align));
  for (auto neg : negatives) {
    if (std::abs(margin - pos + cosine(sentence, encode_label(m, neg, align))) < 1e-3) return true;
  }
  return false;
}

}  // namespace

SuiteResult suite_finite_difference(std::size_t instances, std::uint64_t seed) {
  const auto start = Clock::now();
  Rng rng(derive_seed(seed, {0xfd}));
  double worst = 0.0;
  std::size_t done = 0;
  std::size_t attempts = 0;
  while (done < instances && attempts < instances * 20) {
    ++attempts;
    const std::size_t d_emb = between(rng, 2, 5);
    const std::size_t d_hid = between(rng, 2, 5);
    auto vocab = std::make_shared<VocabEmbedding>(d_emb);
    const std::size_t words = between(rng, 3, 7);
    for (std::size_t w = 0; w < words; ++w) vocab->add("w" + std::to_string(w), normal_vector(d_emb, 1.0, rng));
    auto relations = std::make_shared<RelationVocab>();
    const std::size_t num_rel = between(rng, 2, 5);
    for (std::size_t r = 0; r < num_rel; ++r) {
      std::string name = "w" + std::to_string(uniform_index(rng, words));
      if (uniform01(rng) < 0.5) name += "_w" + std::to_string(uniform_index(rng, words));
      name += "_r" + std::to_string(r);  // unknown token, exercises UNK
      relations->add(name, *vocab);
    }
    RelModel model(vocab, relations, d_hid, rng());
    {
      auto values = model.params().mutable_values();
      const auto noise = normal_vector(values.size(), 0.6, rng);
      std::copy(noise.begin(), noise.end(), values.begin());
    }
    Sample s;
    const std::size_t len = between(rng, 1, 4);
    for (std::size_t t = 0; t < len; ++t) s.tokens.push_back(static_cast<TokenId>(uniform_index(rng, words + 1)));
    s.gold = static_cast<LabelId>(uniform_index(rng, num_rel));
    std::vector<LabelId> negatives;
    for (std::size_t r = 0; r < num_rel; ++r) {
      if (static_cast<LabelId>(r) != s.gold) negatives.push_back(static_cast<LabelId>(r));
    }
    const double margin = 0.05 + 2.5 * uniform01(rng);
    const bool align = uniform01(rng) < 0.7;
    if (near_hinge_kink(model, s, negatives, margin, align) || plain_loss(model, s, negatives, margin, align) == 0.0) {
      continue;
    }

    Tape tape(model.params());
    const auto loss = training_loss(model, s, negatives, margin, tape, align);
    const auto analytic = tape.backward(loss);

    RelModel probe = model;
    const auto fd = oracles::central_difference(
        [&](std::span<const double> x) {
          auto values = probe.params().mutable_values();
          std::copy(x.begin(), x.end(), values.begin());
          return plain_loss(probe, s, negatives, margin, align);
        },
        model.params().values(), 1e-5);
    const double scale = std::max(norm(analytic.values()) + norm(fd), 1e-8);
    worst = std::max(worst, l2(analytic.values(), fd) / scale);
    ++done;
  }
  std::ostringstream detail;
  detail << done << " models, worst relative error " << worst;
  return finish("finite-difference", done == instances && worst < 1e-4, detail.str(), start);
}

SuiteResult suite_qp_bruteforce(std::size_t instances, std::uint64_t seed, double gem_tol) {
  const auto start = Clock::now();
  Rng rng(derive_seed(seed, {0x9b}));
  double worst_gap = 0.0;
  double worst_violation = 0.0;
  std::size_t active = 0;
  for (std::size_t i = 0; i < instances; ++i) {
    const std::size_t dim = between(rng, 1, 10);
    const std::size_t k = between(rng, 1, 5);
    const auto g = normal_vector(dim, 1.0, rng);
    ConstraintSet constraints(dim);
    for (std::size_t j = 0; j < k; ++j) {
      if (j > 0 && uniform01(rng) < 0.15) {
        auto row = constraints.rows[uniform_index(rng, j)];
        const double factor = 0.5 + uniform01(rng);
        for (auto& x : row) x *= factor;
        constraints.add(std::move(row));
      } else {
        constraints.add(normal_vector(dim, 1.0, rng));
      }
    }
    const auto result = gem_project(g, constraints, gem_tol);
    const auto expected = oracles::gem_projection_bruteforce(g, constraints.rows);
    worst_gap = std::max(worst_gap, l2(result.g_tilde, expected));
    for (const auto& row : constraints.rows) worst_violation = std::max(worst_violation, -dot(result.g_tilde, row));
    if (l2(g, expected) > 0.0) ++active;
  }
  std::ostringstream detail;
  detail << instances << " instances (" << active << " projected), worst |gem - oracle| " << worst_gap
         << ", worst violation " << worst_violation;
  return finish("qp-bruteforce", worst_gap <= 1e-4 && worst_violation <= 1e-6, detail.str(), start);
}

SuiteResult suite_agem_closed_form(std::size_t instances, std::uint64_t seed) {
  const auto start = Clock::now();
  Rng rng(derive_seed(seed, {0xa9}));
  double worst = 0.0;
  std::size_t identity_breaks = 0;
  std::size_t projected = 0;
  for (std::size_t i = 0; i < instances; ++i) {
    const std::size_t dim = between(rng, 1, 12);
    const auto g = normal_vector(dim, 1.0, rng);
    const auto ref = normal_vector(dim, 1.0, rng);
    const auto r = agem_project(g, ref);
    double gr = 0.0;
    double rr = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
      gr += g[d] * ref[d];
      rr += ref[d] * ref[d];
    }
    if (gr >= 0.0) {
      if (r.g_tilde != g || r.projected) ++identity_breaks;
      continue;
    }
    ++projected;
    for (std::size_t d = 0; d < dim; ++d) worst = std::max(worst, std::abs(r.g_tilde[d] - (g[d] - gr / rr * ref[d])));
  }
  std::ostringstream detail;
  detail << projected << " violating, " << (instances - projected) << " feasible, worst deviation " << worst;
  return finish("agem-closed-form", worst <= 1e-12 && identity_breaks == 0, detail.str(), start);
}

SuiteResult suite_herding(std::size_t instances, std::uint64_t seed) {
  const auto start = Clock::now();
  Rng rng(derive_seed(seed, {0x4e}));
  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < instances; ++i) {
    const std::size_t n = between(rng, 1, 30);
    const std::size_t d = between(rng, 1, 6);
    const std::size_t b = between(rng, 1, n);
    std::vector<std::vector<double>> points;
    for (std::size_t p = 0; p < n; ++p) points.push_back(normal_vector(d, 1.0, rng));
    if (select_icarl(points, b).indices != oracles::herding_reference(points, b)) ++mismatches;
  }
  std::ostringstream detail;
  detail << instances << " instances, " << mismatches << " mismatches";
  return finish("herding", mismatches == 0, detail.str(), start);
}

SuiteResult suite_kmeans_partition(std::size_t instances, std::uint64_t seed) {
  const auto start = Clock::now();
  Rng rng(derive_seed(seed, {0x6b}));
  std::size_t failures = 0;
  double worst_planted_gap = 0.0;
  for (std::size_t i = 0; i < instances; ++i) {
    const std::size_t n = between(rng, 4, 12);
    const std::size_t d = between(rng, 1, 3);
    const bool planted = i % 2 == 0;
    std::vector<std::vector<double>> points;
    std::vector<std::size_t> truth;
    for (std::size_t p = 0; p < n; ++p) {
      const std::size_t side = planted ? (p < n / 2 ? 0 : 1) : 0;
      auto x = normal_vector(d, planted ? 0.3 : 1.0, rng);
      if (planted) x[0] += side == 0 ? -5.0 : 5.0;
      points.push_back(std::move(x));
      truth.push_back(side);
    }
    const auto fit = kmeans(points, 2, rng());
    const double inertia = fit.inertia(points);
    const double best = oracles::best_two_partition_inertia(points);
    bool ok = inertia >= best - 1e-9 * std::max(1.0, best);
    ok = ok && std::is_sorted(fit.inertia_trace.rbegin(), fit.inertia_trace.rend());
    ok = ok && std::count(fit.assignment.begin(), fit.assignment.end(), 0u) > 0 &&
         std::count(fit.assignment.begin(), fit.assignment.end(), 1u) > 0;
    if (planted) {
      worst_planted_gap = std::max(worst_planted_gap, inertia - best);
      ok = ok && inertia - best <= 1e-9 * std::max(1.0, best) &&
           oracles::adjusted_rand_index(fit.assignment, truth) == 1.0;
    }
    if (!ok) ++failures;
  }
  std::ostringstream detail;
  detail << instances << " point sets, " << failures << " failures, worst planted gap " << worst_planted_gap;
  return finish("kmeans-partition", failures == 0, detail.str(), start);
}

std::vector<SuiteResult> run_selftest(const SelftestOptions& options) {
  return {suite_finite_difference(100, options.seed), suite_qp_bruteforce(500, options.seed, options.gem_tol),
          suite_agem_closed_form(500, options.seed), suite_herding(100, options.seed),
          suite_kmeans_partition(200, options.seed)};
}

int cmd_selftest(const SelftestOptions& options, std::ostream& log) {
  bool all = true;
  for (const auto& r : run_selftest(options)) {
    char line[96];
    std::snprintf(line, sizeof line, "%s %-18s %7.2fs  ", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.seconds);
    log << line << r.detail << "\n";
    all = all && r.passed;
  }
  return all ? kExitOk : kExitPartial;
}

}  // namespace lifelong::cli
