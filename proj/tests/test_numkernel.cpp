// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <numeric>

#include <catch_amalgamated.hpp>

#include "seqrec/gradcheck.hpp"
#include "seqrec/tape.hpp"
#include "testing.hpp"

using namespace seqrec;
using seqrec::testing::project;
using seqrec::testing::random_matrix;
using seqrec::testing::random_param;
using seqrec::testing::random_vector;

namespace {

Tensor<double> naive_matmul(const Tensor<double>& a, const Tensor<double>& b) {
  auto out = Tensor<double>::matrix(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      out(i, j) = s;
    }
  return out;
}

}  // namespace

TEST_CASE("matmul identity and projector") {
  Tape<double> tape;
  auto eye = tape.constant(Tensor<double>::from_rows({{1, 0}, {0, 1}}));
  auto m = tape.constant(Tensor<double>::from_rows({{1, 2}, {3, 4}}));
  CHECK(matmul(eye, m).value() == m.value());
  auto p = tape.constant(Tensor<double>::from_rows({{1, 0}, {0, 0}}));
  auto v = tape.constant(Tensor<double>::from_rows({{5}, {7}}));
  CHECK(matmul(p, v).value() == Tensor<double>::from_rows({{5}, {0}}));
}

TEST_CASE("matmul agrees with triple loop on random shapes") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = 1 + uniform_index(rng, 16), k = 1 + uniform_index(rng, 16), n = 1 + uniform_index(rng, 16);
    Tape<double> tape;
    auto a = random_matrix(rng, m, k), b = random_matrix(rng, k, n);
    const auto got = matmul(tape.constant(a), tape.constant(b)).value();
    const auto want = naive_matmul(a, b);
    for (std::size_t i = 0; i < got.size(); ++i) {
      REQUIRE(std::abs(got[i] - want[i]) <= 1e-12 * std::max(1.0, std::abs(want[i])));
    }
  }
}

TEST_CASE("matmul shape mismatch names both shapes") {
  Tape<double> tape;
  auto a = tape.constant(Tensor<double>::matrix(2, 3));
  auto b = tape.constant(Tensor<double>::matrix(2, 3));
  REQUIRE_THROWS_AS(matmul(a, b), DimensionError);
  try {
    matmul(a, b);
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("[2x3]") != std::string::npos);
  }
  CHECK_THROWS_AS(add(a, tape.constant(Tensor<double>::matrix(3, 2))), DimensionError);
}

TEST_CASE("elementwise hand values") {
  Tape<double> tape;
  CHECK(sigmoid(tape.constant(Tensor<double>::scalar(0))).value().item() == 0.5);
  CHECK(tanh(tape.constant(Tensor<double>::scalar(0))).value().item() == 0.0);
  auto prod = mul(tape.constant(Tensor<double>::vector({1, -2})), tape.constant(Tensor<double>::vector({3, 4})));
  CHECK(prod.value() == Tensor<double>::vector({3, -8}));
}

TEST_CASE("softmax values and stability") {
  Tape<double> tape;
  auto u = softmax(tape.constant(Tensor<double>::vector({0, 0, 0, 0}))).value();
  for (auto v : u.values()) CHECK(v == 0.25);
  auto big = softmax(tape.constant(Tensor<double>::vector({1000, 0}))).value();
  CHECK(big[0] == Catch::Approx(1.0));
  CHECK(big[1] >= 0.0);
  CHECK(big[1] < 1e-300);
  CHECK(big.all_finite());
  auto s = softmax(tape.constant(Tensor<double>::vector({1, 2, 3}))).value();
  const double z = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
  for (int i = 0; i < 3; ++i) CHECK(std::abs(s[i] - std::exp(i + 1.0) / z) < 1e-15);
}

TEST_CASE("softmax sums to one, preserves order and commutes with permutations") {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + uniform_index(rng, 30);
    auto x = random_vector(rng, n, -20, 20);
    Tape<double> tape;
    auto p = softmax(tape.constant(x)).value();
    CHECK(std::abs(std::accumulate(p.values().begin(), p.values().end(), 0.0) - 1.0) < 1e-6);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    shuffle(std::span(perm), rng);
    Tensor<double> px(Shape{n});
    for (std::size_t i = 0; i < n; ++i) px[i] = x[perm[i]];
    auto pp = softmax(tape.constant(px)).value();
    for (std::size_t i = 0; i < n; ++i) REQUIRE(std::abs(pp[i] - p[perm[i]]) <= 1e-15 * p[perm[i]]);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (x[i] < x[j]) REQUIRE(p[i] <= p[j]);
  }
}

TEST_CASE("backward linear map and sigmoid slope") {
  Tape<double> tape;
  Parameter<double> w("w", Tensor<double>::from_rows({{1, 2, 3}, {4, 5, 6}}));
  auto x = tape.constant(Tensor<double>::from_rows({{7}, {8}, {9}}));
  tape.backward(sum(matmul(tape.param(w), x)));
  CHECK(w.grad == Tensor<double>::from_rows({{7, 8, 9}, {7, 8, 9}}));

  Parameter<double> s("s", Tensor<double>::scalar(0));
  Tape<double> t2;
  t2.backward(sigmoid(t2.param(s)));
  CHECK(s.grad.item() == 0.25);
}

TEST_CASE("backward accumulates until reset") {
  Parameter<double> w("w", Tensor<double>::vector({2.0}));
  for (int i = 0; i < 3; ++i) {
    Tape<double> tape;
    tape.backward(sum(tape.param(w) * tape.param(w)));
  }
  CHECK(w.grad[0] == 12.0);
  w.zero_grad();
  CHECK(w.grad[0] == 0.0);
}

TEST_CASE("backward usage errors") {
  Tape<double> tape;
  auto v = tape.constant(Tensor<double>::vector({1, 2}));
  CHECK_THROWS_AS(tape.backward(v), UsageError);
  Tape<double> other;
  auto foreign = other.constant(Tensor<double>::scalar(1));
  CHECK_THROWS_AS(tape.backward(foreign), UsageError);
  Tape<double> frozen(false);
  Parameter<double> w("w", Tensor<double>::scalar(1));
  CHECK_THROWS_AS(frozen.backward(frozen.param(w)), UsageError);
}

TEST_CASE("reverse replay visits each node once") {
  Tape<double> tape;
  Parameter<double> w("w", Tensor<double>::vector({0.3, -0.1}));
  auto a = tape.param(w);
  auto b = tanh(a);
  auto c = b * b;
  auto loss = sum(c + a);
  CHECK(tape.backward(loss) == tape.size());
}

TEST_CASE("gradient check rejects bad eps and non-finite loss") {
  Parameter<double> w("w", Tensor<double>::vector({1.0}));
  std::vector<Parameter<double>*> ps{&w};
  auto f = [&](Tape<double>& t) { return sum(t.param(w)); };
  CHECK_THROWS_AS(gradient_check(f, ps, 1e-3), CheckError);
  CHECK_THROWS_AS(gradient_check(f, ps, 1e-8), CheckError);
  auto bad = [&](Tape<double>& t) {
    return sum(scale(t.param(w), std::numeric_limits<double>::infinity()));
  };
  CHECK_THROWS_AS(gradient_check(bad, ps), CheckError);
}

TEST_CASE("linear layer with softmax-NLL passes gradient check") {
  Rng rng(3);
  auto w = random_param(rng, "w", 6, 4);
  Parameter<double> b("b", random_vector(rng, 6));
  auto x = random_matrix(rng, 3, 4);
  std::vector<std::uint32_t> targets{1, 5, 0};
  std::vector<std::uint8_t> mask{1, 1, 1};
  std::vector<Parameter<double>*> ps{&w, &b};
  auto f = [&](Tape<double>& t) {
    return softmax_nll(add_row_bias(matmul_nt(t.constant(x), t.param(w)), t.param(b)), std::span(targets),
                       std::span(mask));
  };
  CHECK(gradient_check(f, ps, 1e-5) < 1e-6);
}

TEST_CASE("every differentiable op matches finite differences over 100 seeds") {
  using Builder = std::function<Var<double>(Tape<double>&, std::vector<Parameter<double>>&)>;
  struct Case {
    const char* name;
    std::vector<std::pair<std::size_t, std::size_t>> shapes;
    Builder build;
  };
  auto P = [](Tape<double>& t, std::vector<Parameter<double>>& p, std::size_t i) { return t.param(p[i]); };
  std::vector<std::uint32_t> rows{2, 0, 2, 1};
  std::vector<std::uint32_t> targets{3, 0, 4};
  std::vector<std::uint8_t> mask{1, 0, 1};
  std::vector<Case> cases{
      {"matmul", {{3, 4}, {4, 2}}, [&](auto& t, auto& p) { return project(matmul(P(t, p, 0), P(t, p, 1)), 1); }},
      {"matmul_nt", {{3, 4}, {5, 4}}, [&](auto& t, auto& p) { return project(matmul_nt(P(t, p, 0), P(t, p, 1)), 2); }},
      {"add", {{3, 4}, {3, 4}}, [&](auto& t, auto& p) { return project(P(t, p, 0) + P(t, p, 1), 3); }},
      {"sub", {{3, 4}, {3, 4}}, [&](auto& t, auto& p) { return project(P(t, p, 0) - P(t, p, 1), 4); }},
      {"mul", {{3, 4}, {3, 4}}, [&](auto& t, auto& p) { return project(P(t, p, 0) * P(t, p, 1), 5); }},
      {"sigmoid", {{3, 4}}, [&](auto& t, auto& p) { return project(sigmoid(P(t, p, 0)), 6); }},
      {"tanh", {{3, 4}}, [&](auto& t, auto& p) { return project(tanh(P(t, p, 0)), 7); }},
      {"one_minus", {{3, 4}}, [&](auto& t, auto& p) { return project(one_minus(P(t, p, 0)), 8); }},
      {"scale", {{3, 4}}, [&](auto& t, auto& p) { return project(scale(P(t, p, 0), -1.7), 9); }},
      {"add_row_bias", {{3, 4}, {1, 4}}, [&](auto& t, auto& p) { return project(add_row_bias(P(t, p, 0), P(t, p, 1)), 10); }},
      {"scale_rows", {{3, 4}, {3, 1}}, [&](auto& t, auto& p) { return project(scale_rows(P(t, p, 0), P(t, p, 1)), 11); }},
      {"gather_rows", {{3, 4}}, [&](auto& t, auto& p) { return project(gather_rows(P(t, p, 0), std::span<const std::uint32_t>(rows)), 12); }},
      {"softmax", {{3, 5}}, [&](auto& t, auto& p) { return project(softmax(P(t, p, 0)), 13); }},
      {"layer_norm", {{3, 5}, {1, 5}, {1, 5}}, [&](auto& t, auto& p) { return project(layer_norm(P(t, p, 0), P(t, p, 1), P(t, p, 2), 1e-5), 14); }},
      {"softmax_nll", {{3, 5}}, [&](auto& t, auto& p) { return softmax_nll(P(t, p, 0), std::span<const std::uint32_t>(targets), std::span<const std::uint8_t>(mask)); }},
      {"hard_sigmoid", {{3, 4}}, [&](auto& t, auto& p) { return project(hard_sigmoid(P(t, p, 0)), 15); }},
  };
  for (const auto& c : cases) {
    INFO(c.name);
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      Rng rng(seed * 7919 + 1);
      std::vector<Parameter<double>> params;
      for (auto [r, k] : c.shapes) params.push_back(random_param(rng, "p", r, k));
      if (std::string(c.name) == "hard_sigmoid") {
        for (auto& v : params[0].value.values()) v = uniform_real(rng, -0.95, 0.95);
      }
      std::vector<Parameter<double>*> ptrs;
      for (auto& p : params) ptrs.push_back(&p);
      const double err = gradient_check([&](Tape<double>& t) { return c.build(t, params); }, ptrs, 1e-5);
      REQUIRE(err < 1e-4);
    }
  }
}

TEST_CASE("binarize passes gradient straight through") {
  Tape<double> tape;
  Parameter<double> x("x", Tensor<double>::from_rows({{0.2}, {0.7}, {0.5}}));
  auto z = binarize_ste(tape.param(x));
  CHECK(z.value() == Tensor<double>::from_rows({{0}, {1}, {1}}));
  tape.backward(project(z, 4));
  Tape<double> ref;
  Parameter<double> y("y", x.value);
  ref.backward(project(ref.param(y), 4));
  CHECK(x.grad == y.grad);
}

TEST_CASE("hm_blend selects rows and routes gradients") {
  Tape<double> tape;
  Parameter<double> a("a", Tensor<double>::from_rows({{1, 1}, {1, 1}, {1, 1}}));
  Parameter<double> b("b", Tensor<double>::from_rows({{2, 2}, {2, 2}, {2, 2}}));
  Parameter<double> c("c", Tensor<double>::from_rows({{3, 3}, {3, 3}, {3, 3}}));
  auto flush = tape.constant(Tensor<double>::from_rows({{1}, {0}, {0}}));
  auto below = tape.constant(Tensor<double>::from_rows({{0}, {1}, {0}}));
  auto out = hm_blend(tape.param(a), tape.param(b), tape.param(c), flush, below);
  CHECK(out.value() == Tensor<double>::from_rows({{1, 1}, {2, 2}, {3, 3}}));
  tape.backward(sum(out));
  CHECK(a.grad == Tensor<double>::from_rows({{1, 1}, {0, 0}, {0, 0}}));
  CHECK(b.grad == Tensor<double>::from_rows({{0, 0}, {1, 1}, {0, 0}}));
  CHECK(c.grad == Tensor<double>::from_rows({{0, 0}, {0, 0}, {1, 1}}));
}

TEST_CASE("gather_rows bounds check") {
  Tape<double> tape;
  auto table = tape.constant(Tensor<double>::matrix(3, 2));
  std::vector<std::uint32_t> idx{3};
  CHECK_THROWS_AS(gather_rows(table, std::span<const std::uint32_t>(idx)), VocabularyError);
}

TEST_CASE("tape replay is deterministic") {
  auto run = [] {
    Rng rng(99);
    auto w = random_param(rng, "w", 4, 4);
    auto x = random_matrix(rng, 2, 4);
    std::vector<double> losses;
    for (int step = 0; step < 5; ++step) {
      Tape<double> tape;
      auto loss = project(tanh(matmul_nt(tape.constant(x), tape.param(w))), 17);
      losses.push_back(loss.value().item());
      tape.backward(loss);
      for (std::size_t i = 0; i < w.value.size(); ++i) w.value[i] -= 0.1 * w.grad[i];
      w.zero_grad();
    }
    return losses;
  };
  CHECK(run() == run());
}

TEST_CASE("tensor invariants") {
  CHECK_THROWS_AS(Tensor<double>(Shape{2, 0}), DimensionError);
  CHECK_THROWS_AS(Tensor<double>(Shape{2, 2, 2}), DimensionError);
  CHECK_THROWS_AS(Tensor<double>(Shape{2, 2}, std::vector<double>{1, 2, 3}), DimensionError);
  Parameter<double> p("p", Tensor<double>::matrix(2, 3, 1.5));
  CHECK(p.grad.shape() == p.value.shape());
  p.grad.fill(2.0);
  p.zero_grad();
  for (auto v : p.grad.values()) CHECK(v == 0.0);
}
