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


#include <cmath>
#include <limits>
#include <memory>
#include <random>

#include <doctest.h>

#include "lifelong/numgrad.hpp"
#include "lifelong/oracles.hpp"

using namespace lifelong;

namespace {

struct Linear {
  std::shared_ptr<ParamLayout> layout = std::make_shared<ParamLayout>();
  std::size_t w = 0;
  std::size_t b = 0;
  ParamVector params;

  Linear(std::size_t rows, std::size_t cols, std::vector<double> weight, std::vector<double> bias) {
    w = layout->add("w", rows, cols);
    b = layout->add("b", rows, 1);
    params = ParamVector(layout);
    auto ws = params.mutable_segment(w);
    std::copy(weight.begin(), weight.end(), ws.begin());
    auto bs = params.mutable_segment(b);
    std::copy(bias.begin(), bias.end(), bs.begin());
  }
};

}  // namespace

TEST_CASE("affine forward") {
  SUBCASE("identity") {
    Linear l(2, 2, {1, 0, 0, 1}, {0, 0});
    Tape tape(l.params);
    const auto y = tape.affine(l.w, l.b, tape.constant({3, -1}));
    CHECK(tape.value(y)[0] == 3.0);
    CHECK(tape.value(y)[1] == -1.0);
  }
  SUBCASE("general matrix") {
    Linear l(2, 2, {1, 2, 0, 1}, {1, 0});
    Tape tape(l.params);
    const auto y = tape.affine(l.w, l.b, tape.constant({1, 1}));
    CHECK(tape.value(y)[0] == 4.0);
    CHECK(tape.value(y)[1] == 1.0);
  }
  SUBCASE("dimension mismatch") {
    Linear l(2, 3, {1, 2, 3, 4, 5, 6}, {0, 0});
    Tape tape(l.params);
    CHECK_THROWS_AS(tape.affine(l.w, l.b, tape.constant({1, 1})), ContractViolation);
    std::vector<double> out(2);
    CHECK_THROWS_AS(affine_apply(l.params.segment(l.w), 2, 3, l.params.segment(l.b), std::vector<double>{1, 1}, out),
                    ContractViolation);
  }
}

TEST_CASE("cosine") {
  CHECK(cosine(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2, 3}) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(cosine(std::vector<double>{1, 0}, std::vector<double>{0, 1}) == 0.0);
  CHECK(cosine(std::vector<double>{1, 1}, std::vector<double>{1, 0}) == doctest::Approx(0.70710678).epsilon(1e-6));

  SUBCASE("zero norm yields 0 and a warning") {
    reset_numeric_warnings();
    CHECK(cosine(std::vector<double>{0, 0}, std::vector<double>{1, 0}) == 0.0);
    CHECK(numeric_warnings().zero_norm_cosine == 1);
  }
  SUBCASE("scale invariance and self-similarity") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd;
    for (int i = 0; i < 200; ++i) {
      std::vector<double> u(5);
      std::vector<double> v(5);
      for (auto& x : u) x = nd(rng);
      for (auto& x : v) x = nd(rng);
      std::vector<double> su(u);
      for (auto& x : su) x *= 3.7;
      CHECK(cosine(u, u) == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(cosine(su, v) == doctest::Approx(cosine(u, v)).epsilon(1e-12));
      CHECK(std::abs(cosine(u, v)) <= 1.0);
    }
  }
}

TEST_CASE("margin rank loss") {
  CHECK(margin_rank_loss(1.0, 0.0, 0.2) == 0.0);
  CHECK(margin_rank_loss(0.1, 0.3, 0.2) == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(margin_rank_loss(0.5, 0.5, 0.2) == doctest::Approx(0.2).epsilon(1e-12));
  CHECK_THROWS_AS(margin_rank_loss(0.1, 0.3, 0.0), ContractViolation);
  for (double pos : {-1.0, -0.3, 0.0, 0.4, 1.0}) {
    for (double neg : {-1.0, -0.2, 0.0, 0.5, 1.0}) {
      const double l = margin_rank_loss(pos, neg, 0.2);
      CHECK(l >= 0.0);
      CHECK((l == 0.0) == (pos >= neg + 0.2));
    }
  }
}

TEST_CASE("backward") {
  SUBCASE("half squared norm of Wx, W = I1, x = 2") {
    Linear l(1, 1, {1}, {0});
    Tape tape(l.params);
    const auto y = tape.affine(l.w, l.b, tape.constant({2}));
    const auto loss = tape.scale(tape.squared_distance(y, {0}), 0.5);
    const auto g = tape.backward(loss);
    CHECK(g.segment(l.w)[0] == 4.0);
  }
  SUBCASE("untouched parameters get zero") {
    auto layout = std::make_shared<ParamLayout>();
    const auto w = layout->add("w", 1, 2);
    const auto b = layout->add("b", 1, 1);
    const auto unused = layout->add("unused", 3, 1);
    ParamVector p(layout);
    for (auto& v : p.mutable_values()) v = 0.5;
    Tape tape(p);
    const auto loss = tape.squared_distance(tape.affine(w, b, tape.constant({1, 2})), {0});
    const auto g = tape.backward(loss);
    for (double v : g.segment(unused)) CHECK(v == 0.0);
    CHECK(g.segment(w)[0] != 0.0);
  }
  SUBCASE("parameters mutated after the forward pass") {
    Linear l(1, 1, {1}, {0});
    Tape tape(l.params);
    const auto loss = tape.squared_distance(tape.affine(l.w, l.b, tape.constant({2})), {0});
    l.params.mutable_values()[0] = 2.0;
    CHECK_THROWS_AS(tape.backward(loss), ContractViolation);
  }
  SUBCASE("tape extended after the loss") {
    Linear l(1, 1, {1}, {0});
    Tape tape(l.params);
    const auto loss = tape.squared_distance(tape.affine(l.w, l.b, tape.constant({2})), {0});
    tape.constant({1});
    CHECK_THROWS_AS(tape.backward(loss), ContractViolation);
  }
  SUBCASE("deterministic replay") {
    Linear l(2, 2, {0.3, -0.1, 0.2, 0.5}, {0.1, -0.2});
    Tape tape(l.params);
    const auto x = tape.tanh(tape.affine(l.w, l.b, tape.constant({1, -2})));
    const auto loss = tape.hinge(tape.cosine(x, tape.constant({1, 0})), tape.cosine(x, tape.constant({0, 1})), 0.9);
    const auto g1 = tape.backward(loss);
    const auto g2 = tape.backward(loss);
    CHECK(std::equal(g1.values().begin(), g1.values().end(), g2.values().begin()));
  }
}

TEST_CASE("every tape op matches central differences") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + trial % 4;
    auto layout = std::make_shared<ParamLayout>();
    const auto w1 = layout->add("w1", n, n);
    const auto b1 = layout->add("b1", n, 1);
    const auto w2 = layout->add("w2", n, n);
    const auto b2 = layout->add("b2", n, 1);
    ParamVector p(layout);
    for (auto& v : p.mutable_values()) v = nd(rng);
    std::vector<double> x(n);
    std::vector<double> target(n);
    std::vector<double> anchor(n);
    for (auto& v : x) v = nd(rng);
    for (auto& v : target) v = nd(rng);
    for (auto& v : anchor) v = nd(rng);

    auto build = [&](Tape& tape) {
      const auto h = tape.tanh(tape.affine(w1, b1, tape.constant(x)));
      const auto z = tape.affine(w2, b2, h);
      const auto c1 = tape.cosine(z, tape.constant(anchor));
      const auto c2 = tape.cosine(h, z);
      std::vector<Var> terms{tape.hinge(c1, c2, 3.0), tape.scale(tape.squared_distance(z, target), 0.25)};
      return tape.sum(terms);
    };
    Tape tape(p);
    const auto loss = build(tape);
    const auto analytic = tape.backward(loss);
    const auto fd = oracles::central_difference(
        [&](std::span<const double> theta) {
          ParamVector q(layout);
          auto qv = q.mutable_values();
          std::copy(theta.begin(), theta.end(), qv.begin());
          Tape t(q);
          return t.scalar(build(t));
        },
        p.values(), 1e-5);
    for (std::size_t i = 0; i < fd.size(); ++i) {
      const double a = analytic.values()[i];
      const double scale = std::max(std::abs(a) + std::abs(fd[i]), 1e-2);
      CHECK(std::abs(a - fd[i]) / scale < 1e-6);
    }
  }
}

TEST_CASE("sgd step") {
  Linear l(1, 1, {1}, {1});
  GradVector g(l.layout);
  sgd_step(l.params, g, 0.1);
  CHECK(l.params.values()[0] == 1.0);
  CHECK(l.params.values()[1] == 1.0);

  g.values()[0] = 1.0;
  g.values()[1] = -1.0;
  sgd_step(l.params, g, 0.5);
  CHECK(l.params.values()[0] == 0.5);
  CHECK(l.params.values()[1] == 1.5);

  g.values()[0] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(sgd_step(l.params, g, 0.5), NumericError);
  CHECK(l.params.values()[0] == 0.5);
  CHECK_THROWS_AS(sgd_step(l.params, GradVector(l.layout), 0.0), ContractViolation);
}

TEST_CASE("layouts") {
  ParamLayout layout;
  CHECK(layout.add("a", 2, 3) == 0);
  CHECK(layout.add("b", 4, 1) == 1);
  CHECK(layout.total() == 10);
  CHECK(layout.segment(1).offset == 6);
  CHECK(layout.find("b") == 1);
  CHECK_THROWS_AS(layout.add("a", 1, 1), ContractViolation);
  CHECK_THROWS_AS(layout.find("c"), ContractViolation);
  CHECK_THROWS_AS(Matrix(2, 2, {1, 2, 3}), ContractViolation);
}
