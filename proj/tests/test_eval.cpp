// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include <catch_amalgamated.hpp>

#include "seqrec/baselines.hpp"
#include "seqrec/errors.hpp"
#include "seqrec/eval.hpp"
#include "seqrec/random.hpp"
#include "seqrec/scorers.hpp"
#include "seqrec/synth.hpp"

using namespace seqrec;

namespace {

// Scores are a deterministic function of the prefix and take few distinct
// values so that ties are common.
class HashScorer final : public NextItemScorer {
 public:
  HashScorer(std::size_t n, std::uint64_t levels, std::size_t block) : n_(n), levels_(levels), block_(block) {}
  std::size_t num_items() const override { return n_; }
  std::size_t block_size() const override { return block_; }
  void score(std::span<const Sequence* const> block, const ScoreSink& sink) const override {
    std::vector<double> buf(n_);
    for (std::size_t r = 0; r < block.size(); ++r) {
      const Sequence& s = *block[r];
      for (std::size_t t = 1; t < s.size(); ++t) {
        fill(std::span(s).first(t), buf);
        sink(r, t, buf);
      }
    }
  }
  void fill(std::span<const ItemIndex> prefix, std::vector<double>& buf) const {
    std::uint64_t h = 0x1234;
    for (ItemIndex i : prefix) h = mix64(h ^ i);
    for (std::size_t i = 0; i < n_; ++i) buf[i] = static_cast<double>(mix64(h + i) % levels_);
  }

 private:
  std::size_t n_;
  std::uint64_t levels_;
  std::size_t block_;
};

std::vector<Sequence> random_sequences(std::size_t count, std::size_t n_items, std::size_t max_len, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Sequence> out;
  for (std::size_t i = 0; i < count; ++i) {
    Sequence s(2 + uniform_index(rng, max_len - 1));
    // Small alphabet per sequence so the relevant window contains repeats.
    for (auto& x : s) x = static_cast<ItemIndex>(uniform_index(rng, n_items));
    if (i % 3 == 0) {
      for (std::size_t t = 1; t < s.size(); t += 2) s[t] = s[t - 1];
    }
    out.push_back(std::move(s));
  }
  return out;
}

// Brute-force reference: full sort of (score, index) pairs and std::set relevance.
std::vector<ItemIndex> brute_rank(const std::vector<double>& scores, std::size_t k) {
  std::vector<std::pair<double, ItemIndex>> all;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double s = std::isnan(scores[i]) ? -std::numeric_limits<double>::infinity() : scores[i];
    all.emplace_back(-s, static_cast<ItemIndex>(i));
  }
  std::sort(all.begin(), all.end());
  std::vector<ItemIndex> out;
  for (std::size_t i = 0; i < std::min(k, all.size()); ++i) out.push_back(all[i].second);
  return out;
}

struct BruteResult {
  double recall = 0.0;
  std::vector<double> offsets;
};

BruteResult brute_eval(const HashScorer& scorer, const std::vector<Sequence>& seqs, std::size_t k, std::size_t n,
                       std::size_t max_offset) {
  double total = 0.0;
  std::size_t points = 0;
  std::vector<double> hits(max_offset, 0.0), pts(max_offset, 0.0);
  std::vector<double> buf(scorer.num_items());
  for (const auto& s : seqs) {
    for (std::size_t t = 1; t < s.size(); ++t) {
      scorer.fill(std::span(s).first(t), buf);
      const auto rec = brute_rank(buf, k);
      const std::set<ItemIndex> recset(rec.begin(), rec.end());
      std::set<ItemIndex> rel;
      for (std::size_t j = t; j < s.size() && j < t + n; ++j) rel.insert(s[j]);
      std::size_t h = 0;
      for (ItemIndex r : rel) h += recset.count(r);
      total += static_cast<double>(h) / static_cast<double>(rel.size());
      ++points;
      for (std::size_t d = 0; d < max_offset; ++d) {
        if (t + d >= s.size()) break;
        pts[d] += 1;
        hits[d] += static_cast<double>(recset.count(s[t + d]));
      }
    }
  }
  BruteResult r;
  r.recall = total / static_cast<double>(points);
  for (std::size_t d = 0; d < max_offset; ++d) r.offsets.push_back(pts[d] > 0 ? hits[d] / pts[d] : 0.0);
  return r;
}

}  // namespace

TEST_CASE("top_k orders by score then index") {
  const std::vector<double> s{0.5, 2.0, 2.0, -1.0, 0.5};
  CHECK(top_k(s, 3) == std::vector<ItemIndex>{1, 2, 0});
  CHECK(top_k(s, 10).size() == 5);
  CHECK(top_k(s, 0).empty());
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const std::vector<double> withnan{nan, -5.0, nan, -7.0};
  CHECK(top_k(withnan, 4) == std::vector<ItemIndex>{1, 3, 0, 2});
}

TEST_CASE("recall_k_n counts distinct relevant items") {
  const std::vector<ItemIndex> rec{1, 2, 3};
  CHECK(recall_k_n(rec, std::vector<ItemIndex>{2}) == 1.0);
  CHECK(recall_k_n(rec, std::vector<ItemIndex>{9}) == 0.0);
  CHECK(recall_k_n(rec, std::vector<ItemIndex>{2, 9}) == 0.5);
  CHECK(recall_k_n(rec, std::vector<ItemIndex>{2, 2, 9}) == 0.5);
  CHECK(recall_k_n(rec, std::vector<ItemIndex>{2, 3, 3}) == 1.0);
  CHECK_THROWS_AS(recall_k_n(rec, std::vector<ItemIndex>{}), ContractError);
}

TEST_CASE("evaluate matches a brute-force reference") {
  const auto seqs = random_sequences(200, 30, 25, 7);
  const std::pair<std::size_t, std::size_t> grid[] = {{1, 1}, {5, 3}, {20, 1}, {20, 5}, {20, 20}};
  for (std::size_t block : {std::size_t{1}, std::size_t{7}}) {
    HashScorer scorer(30, 4, block);
    for (auto [k, n] : grid) {
      EvalOptions opt;
      opt.k = k;
      opt.ns = {n};
      opt.max_offset = 6;
      const auto got = evaluate(scorer, seqs, opt);
      const auto want = brute_eval(scorer, seqs, k, n, 6);
      CHECK(std::abs(got.recall(0) - want.recall) <= 1e-12);
      const auto curve = got.offset_curve();
      for (std::size_t d = 0; d < 6; ++d) CHECK(std::abs(curve[d] - want.offsets[d]) <= 1e-12);
      const auto standalone = per_offset_recall(scorer, seqs, k, 6);
      CHECK(standalone == curve);
    }
  }
}

TEST_CASE("offset 0 equals Recall@K,1 bit for bit") {
  const auto seqs = random_sequences(150, 40, 30, 11);
  HashScorer scorer(40, 5, 3);
  for (std::size_t k : {1, 5, 20}) {
    EvalOptions opt;
    opt.k = k;
    opt.ns = {1, 5};
    const double r1 = evaluate(scorer, seqs, opt).recall_for(1);
    const double off0 = per_offset_recall(scorer, seqs, k, 4)[0];
    CHECK(std::bit_cast<std::uint64_t>(r1) == std::bit_cast<std::uint64_t>(off0));
  }
}

TEST_CASE("evaluation points and thread invariance") {
  const auto seqs = random_sequences(97, 25, 20, 3);
  HashScorer scorer(25, 3, 4);
  EvalOptions opt;
  opt.ns = {1, 5, 20};
  opt.max_offset = 5;
  opt.buckets = {{2, 5}, {6, 25}};
  const auto one = evaluate(scorer, seqs, opt);
  std::size_t expected = 0;
  for (const auto& s : seqs) expected += s.size() - 1;
  CHECK(one.points() == expected);
  for (std::size_t threads : {2, 3, 8}) {
    opt.threads = threads;
    const auto many = evaluate(scorer, seqs, opt);
    for (std::size_t i = 0; i < 3; ++i) CHECK(std::bit_cast<std::uint64_t>(many.recall(i)) == std::bit_cast<std::uint64_t>(one.recall(i)));
    CHECK(many.offset_curve() == one.offset_curve());
  }
}

TEST_CASE("evaluate rejects bad inputs") {
  HashScorer scorer(10, 3, 1);
  std::vector<Sequence> seqs{{1, 2, 3}};
  EvalOptions opt;
  opt.ns = {0};
  CHECK_THROWS_AS(evaluate(scorer, seqs, opt), ConfigError);
  opt.ns = {1};
  opt.k = 0;
  CHECK_THROWS_AS(evaluate(scorer, seqs, opt), ConfigError);
  opt.k = 5;
  std::vector<Sequence> bad{{1, 12}};
  CHECK_THROWS_AS(evaluate(scorer, bad, opt), VocabularyError);
  CHECK_THROWS_AS(per_offset_recall(scorer, seqs, 5, 0), ConfigError);
}

TEST_CASE("length buckets") {
  SECTION("parsing and defaults") {
    const auto b = parse_buckets("2-5,6-25,26-200");
    REQUIRE(b.size() == 3);
    CHECK(b[2].hi == 200);
    const auto d = default_buckets(true);
    std::vector<std::string> labels;
    for (const auto& x : d) labels.push_back(x.label());
    CHECK(labels == std::vector<std::string>{"2-5", "6-25", "26-200"});
    CHECK(default_buckets(false)[2].label() == "26-40");
    CHECK_THROWS_AS(parse_buckets("2-5,5-9"), ConfigError);
    CHECK_THROWS_AS(parse_buckets("2-x"), ConfigError);
    CHECK_THROWS_AS(parse_buckets("7"), ConfigError);
    CHECK_THROWS_AS(parse_buckets("9-3"), ConfigError);
  }
  SECTION("a length-4 sequence lands in 2-5") {
    HashScorer scorer(10, 3, 1);
    std::vector<Sequence> seqs{{1, 2, 3, 4}};
    EvalOptions opt;
    opt.buckets = default_buckets(true);
    const auto rows = evaluate(scorer, seqs, opt).bucket_rows();
    CHECK(rows[0].points == 3);
    CHECK(rows[0].sequences == 1);
    CHECK(rows[1].points == 0);
    CHECK(rows[2].points == 0);
  }
  SECTION("bucket means equal recomputation on each subset") {
    const auto seqs = random_sequences(120, 20, 30, 5);
    HashScorer scorer(20, 3, 2);
    EvalOptions opt;
    opt.ns = {1, 5};
    opt.buckets = {{2, 5}, {6, 25}, {26, 200}};
    const auto rows = evaluate(scorer, seqs, opt).bucket_rows();
    for (const auto& row : rows) {
      std::vector<Sequence> subset;
      for (const auto& s : seqs) {
        if (s.size() >= row.bucket.lo && s.size() <= row.bucket.hi) subset.push_back(s);
      }
      if (subset.empty()) continue;
      EvalOptions sub = opt;
      sub.buckets.clear();
      const auto part = evaluate(scorer, subset, sub);
      CHECK(part.points() == row.points);
      CHECK(std::abs(part.recall(0) - row.recall[0]) < 1e-12);
      CHECK(std::abs(part.recall(1) - row.recall[1]) < 1e-12);
    }
  }
}

TEST_CASE("uplift confidence intervals") {
  Rng rng(3);
  std::vector<double> base, model;
  std::vector<std::size_t> pts;
  for (int i = 0; i < 300; ++i) {
    const std::size_t p = 1 + uniform_index(rng, 10);
    double b = 0.0;
    for (std::size_t j = 0; j < p; ++j) b += uniform_unit(rng) < 0.3 ? 1.0 : 0.0;
    pts.push_back(p);
    base.push_back(b);
    model.push_back(b + 0.1 * static_cast<double>(p));
  }
  SECTION("self comparison") {
    const auto r = uplift_ci(base, base, pts, 1000, 1);
    CHECK(r.uplift == 0.0);
    CHECK(r.lo <= 0.0);
    CHECK(r.hi >= 0.0);
  }
  SECTION("constant improvement excludes zero") {
    const auto r = uplift_ci(model, base, pts, 1000, 1);
    CHECK(r.uplift > 0.0);
    CHECK(r.lo > 0.0);
    CHECK(r.lo <= r.uplift);
    CHECK(r.uplift <= r.hi);
    CHECK(std::abs(r.uplift - (r.model_recall - r.baseline_recall) / r.baseline_recall * 100.0) < 1e-12);
  }
  SECTION("seed reproducible") {
    const auto a = uplift_ci(model, base, pts, 500, 42);
    const auto b = uplift_ci(model, base, pts, 500, 42);
    const auto c = uplift_ci(model, base, pts, 500, 43);
    CHECK(a.lo == b.lo);
    CHECK(a.hi == b.hi);
    CHECK((a.lo != c.lo || a.hi != c.hi));
  }
  SECTION("zero baseline") {
    std::vector<double> zero(base.size(), 0.0);
    CHECK_THROWS_AS(uplift_ci(model, zero, pts, 100, 1), UndefinedUpliftError);
  }
  SECTION("mismatched reports") {
    const auto seqs = random_sequences(10, 10, 8, 2);
    auto fewer = seqs;
    fewer.pop_back();
    HashScorer scorer(10, 3, 1);
    EvalOptions opt;
    CHECK_THROWS_AS(uplift_ci(evaluate(scorer, seqs, opt), evaluate(scorer, fewer, opt), 0), ContractError);
  }
}

TEST_CASE("POP on uniform synthetic data is at chance level") {
  SynthConfig cfg;
  cfg.order = SynthOrder::uniform;
  cfg.n_items = 1000;
  cfg.n_sequences = 5000;
  cfg.n_test = 2000;
  cfg.seed = 9;
  const auto data = synth_generate(cfg);
  const auto pop = PopModel::fit(data.train.sequences, 1000);
  PopScorer scorer(pop);
  EvalOptions opt;
  opt.max_offset = 5;
  const auto r = evaluate(scorer, data.test.sequences, opt);
  CHECK(std::abs(r.recall(0) - 0.02) < 0.005);
  // Constant prediction on a stationary process: flat curve.
  for (double v : r.offset_curve()) CHECK(std::abs(v - 0.02) < 0.005);
}

TEST_CASE("oracle on a deterministic cycle") {
  SynthConfig cfg;
  cfg.order = SynthOrder::cycle;
  cfg.n_items = 50;
  cfg.n_sequences = 0;
  cfg.n_test = 200;
  cfg.seed = 4;
  const auto data = synth_generate(cfg);
  TransitionTable table(cfg);
  OracleScorer oracle(table, 1);
  EvalOptions opt;
  opt.k = 20;
  opt.max_offset = 4;
  const auto r = evaluate(oracle, data.test.sequences, opt);
  const auto curve = r.offset_curve();
  CHECK(curve[0] == 1.0);
  // Later offsets are hit exactly when the future item sits in the oracle's
  // top-K: the successor plus the lowest-index filler items.
  for (std::size_t d = 1; d < 4; ++d) {
    std::size_t hits = 0, pts = 0;
    for (const auto& s : data.test.sequences) {
      for (std::size_t t = 1; t + d < s.size(); ++t) {
        const auto top = distribution_top_k(table.next(std::span(s).first(t)), 20, 50);
        ++pts;
        hits += std::count(top.begin(), top.end(), s[t + d]);
      }
    }
    CHECK(curve[d] == static_cast<double>(hits) / static_cast<double>(pts));
  }
}
