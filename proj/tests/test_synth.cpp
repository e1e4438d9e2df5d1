// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <map>
#include <set>

#include <catch_amalgamated.hpp>

#include "seqrec/errors.hpp"
#include "seqrec/eval.hpp"
#include "seqrec/scorers.hpp"
#include "seqrec/synth.hpp"

using namespace seqrec;

namespace {

SynthConfig markov2_config() {
  SynthConfig c;
  c.order = SynthOrder::markov2;
  c.n_items = 400;
  c.labels = 2;
  c.successors = 20;
  c.seed = 3;
  return c;
}

double mass(const ItemDistribution& d) {
  double s = 0.0;
  for (auto [i, p] : d) s += p;
  return s;
}

}  // namespace

TEST_CASE("generation is seeded and well formed") {
  SynthConfig c;
  c.n_items = 200;
  c.n_sequences = 300;
  c.n_valid = 20;
  c.n_test = 30;
  c.min_length = 3;
  c.max_length = 9;
  const auto a = synth_generate(c);
  const auto b = synth_generate(c);
  CHECK(a == b);
  c.seed = 2;
  CHECK_FALSE(synth_generate(c) == a);
  CHECK(a.train.sequences.size() == 300);
  CHECK(a.valid.sequences.size() == 20);
  CHECK(a.test.sequences.size() == 30);
  CHECK(a.vocabulary.size() == 200);
  CHECK(a.vocabulary.id(17) == "17");
  std::set<std::size_t> lengths;
  for (const auto& s : a.train.sequences) {
    lengths.insert(s.size());
    for (ItemIndex i : s) CHECK(i < 200);
  }
  CHECK(*lengths.begin() == 3);
  CHECK(*lengths.rbegin() == 9);
  CHECK_FALSE(a.train.sequences == a.test.sequences);
}

TEST_CASE("invalid synthetic configs") {
  SynthConfig c;
  c.min_length = 1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.strong = 990;
  c.weak = 20;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = markov2_config();
  c.n_items = 401;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK_THROWS_AS(parse_synth_order("markov3"), ConfigError);
  CHECK(parse_synth_order("markov2") == SynthOrder::markov2);
}

TEST_CASE("markov1 rows are normalised blocks") {
  SynthConfig c;
  c.n_items = 1000;
  TransitionTable t(c);
  std::map<std::vector<ItemIndex>, int> blocks;
  for (ItemIndex i = 0; i < 1000; ++i) {
    const Sequence prefix{i};
    const auto row = t.next(prefix);
    CHECK(row.size() == 25);
    CHECK(std::abs(mass(row) - 1.0) < 1e-12);
    std::vector<ItemIndex> support;
    for (auto [j, p] : row) support.push_back(j);
    ++blocks[support];
  }
  // 40 blocks, each used by 25 sources.
  CHECK(blocks.size() == 40);
  for (const auto& [k, v] : blocks) CHECK(v == 25);
}

TEST_CASE("markov2 history optima") {
  const auto c = markov2_config();
  TransitionTable t(c);
  for (ItemIndex i = 0; i < 400; i += 37) {
    const Sequence one{i};
    const auto mixed = t.next(one);
    CHECK(mixed.size() == 40);
    CHECK(std::abs(mass(mixed) - 1.0) < 1e-12);
    std::set<ItemIndex> seen;
    for (ItemIndex prev : {ItemIndex{0}, ItemIndex{1}}) {
      const Sequence two{prev, i};
      const auto row = t.next(two);
      CHECK(row.size() == 20);
      for (auto [j, p] : row) CHECK(seen.insert(j).second);
      CHECK(t.next(two, 1) == mixed);
    }
  }
  const auto seqs = t.sample(300, 2, 30, 8);
  // Only the first transition of a sequence lacks the second item of history.
  double pts = 0.0, firsts = 0.0;
  for (const auto& q : seqs) {
    pts += static_cast<double>(q.size() - 1);
    firsts += 1.0;
  }
  CHECK(std::abs(expected_optimal_recall(t, seqs, 20, 2) - (pts - 0.5 * firsts) / pts) < 1e-12);
  CHECK(std::abs(expected_optimal_recall(t, seqs, 20, 1) - 0.5) < 1e-12);
}

TEST_CASE("markov2 items are entered equally often from both source labels") {
  const auto c = markov2_config();
  TransitionTable t(c);
  std::vector<std::array<int, 2>> reach(400, {0, 0});
  for (ItemIndex i = 0; i < 400; ++i) {
    for (ItemIndex g = 0; g < 2; ++g) {
      const Sequence two{g, i};
      for (auto [j, p] : t.next(two)) ++reach[j][i % 2];
    }
  }
  for (const auto& r : reach) {
    CHECK(r[0] == 20);
    CHECK(r[1] == 20);
  }
}

TEST_CASE("empirical transitions follow the table") {
  SynthConfig c;
  c.n_items = 50;
  c.strong = 4;
  c.weak = 1;
  c.seed = 12;
  TransitionTable t(c);
  const auto seqs = t.sample(4000, 20, 20, 5);
  std::vector<std::map<ItemIndex, double>> counts(50);
  std::vector<double> totals(50, 0.0);
  for (const auto& s : seqs) {
    for (std::size_t k = 1; k < s.size(); ++k) {
      counts[s[k - 1]][s[k]] += 1;
      totals[s[k - 1]] += 1;
    }
  }
  for (ItemIndex i = 0; i < 50; ++i) {
    const Sequence prefix{i};
    for (auto [j, p] : t.next(prefix)) {
      const double freq = counts[i][j] / totals[i];
      CHECK(std::abs(freq - p) < 5.0 * std::sqrt(p * (1 - p) / totals[i]) + 1e-3);
    }
  }
}

TEST_CASE("oracle realised recall tracks the expected optimum") {
  SynthConfig c;
  c.n_items = 300;
  c.n_sequences = 0;
  c.n_test = 3000;
  c.seed = 21;
  TransitionTable t(c);
  const auto data = synth_generate(c);
  const double expected = expected_optimal_recall(t, data.test.sequences, 20, 1);
  OracleScorer oracle(t, 1);
  EvalOptions opt;
  const double realised = evaluate(oracle, data.test.sequences, opt).recall(0);
  CHECK(std::abs(realised - expected) < 0.01);

  // One-step oracle on second-order data: the mixture must be the true
  // posterior, so realised and expected recall agree here too.
  auto c2 = markov2_config();
  c2.n_sequences = 0;
  c2.n_test = 3000;
  TransitionTable t2(c2);
  const auto d2 = synth_generate(c2);
  OracleScorer one_step(t2, 1);
  const double r1 = evaluate(one_step, d2.test.sequences, opt).recall(0);
  CHECK(std::abs(r1 - 0.5) < 0.01);
  OracleScorer two_step(t2, 2);
  const double r2 = evaluate(two_step, d2.test.sequences, opt).recall(0);
  const double e2 = expected_optimal_recall(t2, d2.test.sequences, 20, 2);
  CHECK(std::abs(r2 - e2) < 0.01);
  CHECK(e2 - 0.5 > 0.10);
}

TEST_CASE("distribution top-k fills with zero-probability items") {
  const ItemDistribution d{{4, 0.5}, {2, 0.5}, {7, 0.0}};
  CHECK(distribution_top_k(d, 4, 8) == std::vector<ItemIndex>{2, 4, 0, 1});
  CHECK(distribution_top_k(d, 20, 8).size() == 8);
}
