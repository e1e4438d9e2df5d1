// SPDX-License-Identifier: Apache-2.0
#include "seqrec/eval.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "seqrec/errors.hpp"
#include "seqrec/random.hpp"

namespace seqrec {

std::vector<ItemIndex> top_k(std::span<const double> scores, std::size_t k) {
  const std::size_t n = scores.size();
  k = std::min(k, n);
  auto key = [&](std::size_t i) {
    const double s = scores[i];
    return std::isnan(s) ? -std::numeric_limits<double>::infinity() : s;
  };
  auto better = [&](ItemIndex a, ItemIndex b) {
    const double ka = key(a), kb = key(b);
    return ka != kb ? ka > kb : a < b;
  };
  std::vector<ItemIndex> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = static_cast<ItemIndex>(i);
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(), better);
  idx.resize(k);
  return idx;
}

double recall_k_n(std::span<const ItemIndex> recommended, std::span<const ItemIndex> relevant) {
  std::vector<ItemIndex> rel(relevant.begin(), relevant.end());
  std::sort(rel.begin(), rel.end());
  rel.erase(std::unique(rel.begin(), rel.end()), rel.end());
  if (rel.empty()) throw ContractError("recall needs a non-empty relevant set");
  std::size_t hits = 0;
  for (ItemIndex r : rel) {
    if (std::find(recommended.begin(), recommended.end(), r) != recommended.end()) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(rel.size());
}

std::string LengthBucket::label() const { return fmt::format("{}-{}", lo, hi); }

void validate_buckets(std::span<const LengthBucket> buckets) {
  for (std::size_t i = 0; i < buckets.size(); ++i) {
    if (buckets[i].lo > buckets[i].hi) throw ConfigError("empty length bucket " + buckets[i].label());
    for (std::size_t j = 0; j < i; ++j) {
      if (buckets[i].lo <= buckets[j].hi && buckets[j].lo <= buckets[i].hi) {
        throw ConfigError(fmt::format("overlapping length buckets {} and {}", buckets[j].label(), buckets[i].label()));
      }
    }
  }
}

std::vector<LengthBucket> parse_buckets(const std::string& text) {
  std::vector<LengthBucket> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    const auto dash = part.find('-');
    if (dash == std::string::npos) throw ConfigError("bucket must look like lo-hi: " + part);
    try {
      std::size_t used = 0;
      LengthBucket b;
      const std::string lo = part.substr(0, dash), hi = part.substr(dash + 1);
      b.lo = std::stoul(lo, &used);
      if (used != lo.size()) throw std::invalid_argument(lo);
      b.hi = std::stoul(hi, &used);
      if (used != hi.size()) throw std::invalid_argument(hi);
      out.push_back(b);
    } catch (const std::logic_error&) {
      throw ConfigError("bucket must look like lo-hi: " + part);
    }
  }
  if (out.empty()) throw ConfigError("no buckets given");
  validate_buckets(out);
  return out;
}

std::vector<LengthBucket> default_buckets(bool long_tail_200) {
  return {{2, 5}, {6, 25}, {26, long_tail_200 ? std::size_t{200} : std::size_t{40}}};
}

std::size_t EvalResult::points() const {
  std::size_t p = 0;
  for (const auto& s : per_sequence) p += s.points;
  return p;
}

double EvalResult::recall(std::size_t n_index) const {
  if (n_index >= options.ns.size()) throw ContractError("N index out of range");
  double sum = 0.0;
  std::size_t pts = 0;
  for (const auto& s : per_sequence) {
    sum += s.recall_sum[n_index];
    pts += s.points;
  }
  return pts ? sum / static_cast<double>(pts) : 0.0;
}

double EvalResult::recall_for(std::size_t n) const {
  for (std::size_t i = 0; i < options.ns.size(); ++i) {
    if (options.ns[i] == n) return recall(i);
  }
  throw ContractError(fmt::format("Recall@{},{} was not computed", options.k, n));
}

std::vector<double> EvalResult::offset_curve() const {
  std::vector<double> curve(options.max_offset, 0.0);
  for (std::size_t d = 0; d < options.max_offset; ++d) {
    std::size_t hits = 0, pts = 0;
    for (const auto& s : per_sequence) {
      hits += s.offset_hits[d];
      pts += s.offset_points[d];
    }
    curve[d] = pts ? static_cast<double>(hits) / static_cast<double>(pts) : 0.0;
  }
  return curve;
}

std::vector<BucketRow> EvalResult::bucket_rows() const {
  std::vector<BucketRow> rows;
  for (const auto& b : options.buckets) {
    BucketRow row;
    row.bucket = b;
    std::vector<double> sums(options.ns.size(), 0.0);
    for (const auto& s : per_sequence) {
      if (s.length < b.lo || s.length > b.hi) continue;
      ++row.sequences;
      row.points += s.points;
      for (std::size_t i = 0; i < sums.size(); ++i) sums[i] += s.recall_sum[i];
    }
    for (double v : sums) row.recall.push_back(row.points ? v / static_cast<double>(row.points) : 0.0);
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

void evaluate_range(const NextItemScorer& scorer, std::span<const Sequence> sequences, const EvalOptions& options,
                    std::size_t begin, std::size_t end, std::vector<SequenceEval>& out) {
  const std::size_t block = std::max<std::size_t>(1, scorer.block_size());
  const std::size_t n_items = scorer.num_items();
  std::vector<const Sequence*> ptrs;
  for (std::size_t start = begin; start < end; start += block) {
    const std::size_t stop = std::min(end, start + block);
    ptrs.clear();
    for (std::size_t i = start; i < stop; ++i) ptrs.push_back(&sequences[i]);
    scorer.score(ptrs, [&](std::size_t row, std::size_t t, std::span<const double> scores) {
      if (scores.size() != n_items) {
        throw DimensionError(fmt::format("scorer returned {} scores for {} items", scores.size(), n_items));
      }
      const Sequence& s = *ptrs[row];
      if (t < 1 || t >= s.size()) throw ContractError(fmt::format("scorer emitted invalid position {}", t));
      SequenceEval& ev = out[start + row];
      const auto rec = top_k(scores, options.k);
      ++ev.points;
      for (std::size_t i = 0; i < options.ns.size(); ++i) {
        const std::size_t stop_t = std::min(s.size(), t + options.ns[i]);
        ev.recall_sum[i] += recall_k_n(rec, std::span(s).subspan(t, stop_t - t));
      }
      for (std::size_t d = 0; d < options.max_offset && t + d < s.size(); ++d) {
        ++ev.offset_points[d];
        if (std::find(rec.begin(), rec.end(), s[t + d]) != rec.end()) ++ev.offset_hits[d];
      }
    });
  }
}

}  // namespace

EvalResult evaluate(const NextItemScorer& scorer, std::span<const Sequence> sequences, const EvalOptions& options) {
  if (options.k == 0) throw ConfigError("K must be positive");
  if (options.ns.empty()) throw ConfigError("at least one N is required");
  for (std::size_t n : options.ns) {
    if (n == 0) throw ConfigError("N must be positive");
  }
  validate_buckets(options.buckets);
  EvalResult result;
  result.options = options;
  result.per_sequence.resize(sequences.size());
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    auto& ev = result.per_sequence[i];
    ev.length = sequences[i].size();
    ev.recall_sum.assign(options.ns.size(), 0.0);
    ev.offset_hits.assign(options.max_offset, 0);
    ev.offset_points.assign(options.max_offset, 0);
    for (ItemIndex item : sequences[i]) {
      if (item >= scorer.num_items()) throw VocabularyError(fmt::format("item {} outside the model vocabulary", item));
    }
  }
  // Each sequence is owned by exactly one worker and the reduction happens
  // later in sequence order, so the result does not depend on thread count.
  const std::size_t threads = std::max<std::size_t>(1, std::min(options.threads, sequences.size()));
  if (threads == 1) {
    evaluate_range(scorer, sequences, options, 0, sequences.size(), result.per_sequence);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    const std::size_t chunk = (sequences.size() + threads - 1) / threads;
    for (std::size_t w = 0; w < threads; ++w) {
      const std::size_t b = w * chunk, e = std::min(sequences.size(), b + chunk);
      pool.emplace_back([&, w, b, e] {
        try {
          evaluate_range(scorer, sequences, options, b, e, result.per_sequence);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& err : errors) {
      if (err) std::rethrow_exception(err);
    }
  }
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    if (result.per_sequence[i].points + 1 != std::max<std::size_t>(1, sequences[i].size())) {
      throw ContractError(fmt::format("scorer skipped positions of sequence {}", i));
    }
  }
  return result;
}

std::vector<double> per_offset_recall(const NextItemScorer& scorer, std::span<const Sequence> sequences,
                                      std::size_t k, std::size_t max_offset) {
  if (max_offset < 1) throw ConfigError("max_offset must be at least 1");
  EvalOptions options;
  options.k = k;
  options.max_offset = max_offset;
  return evaluate(scorer, sequences, options).offset_curve();
}

UpliftResult uplift_ci(std::span<const double> model_sums, std::span<const double> baseline_sums,
                       std::span<const std::size_t> points, std::size_t resamples, std::uint64_t seed) {
  if (model_sums.size() != baseline_sums.size() || model_sums.size() != points.size()) {
    throw ContractError("uplift inputs must cover the same sequences");
  }
  if (resamples == 0) throw ConfigError("bootstrap needs at least one resample");
  auto ratio = [](double s, std::size_t p) { return p ? s / static_cast<double>(p) : 0.0; };
  auto uplift = [](double m, double b) {
    if (b == 0.0) throw UndefinedUpliftError("uplift undefined: baseline recall is 0");
    return (m - b) / b * 100.0;
  };
  double ms = 0.0, bs = 0.0;
  std::size_t pts = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    ms += model_sums[i];
    bs += baseline_sums[i];
    pts += points[i];
  }
  UpliftResult r;
  r.model_recall = ratio(ms, pts);
  r.baseline_recall = ratio(bs, pts);
  r.uplift = uplift(r.model_recall, r.baseline_recall);
  r.resamples = resamples;
  Rng rng(seed);
  const std::size_t n = points.size();
  std::vector<double> draws;
  draws.reserve(resamples);
  for (std::size_t b = 0; b < resamples; ++b) {
    double m = 0.0, base = 0.0;
    std::size_t p = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j = uniform_index(rng, n);
      m += model_sums[j];
      base += baseline_sums[j];
      p += points[j];
    }
    const double br = ratio(base, p);
    // A resample whose baseline recall vanishes has infinite uplift.
    draws.push_back(br == 0.0 ? std::numeric_limits<double>::infinity() : uplift(ratio(m, p), br));
  }
  std::sort(draws.begin(), draws.end());
  auto pct = [&](double q) {
    const double pos = q * static_cast<double>(draws.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(draws.size() - 1, lo + 1);
    const double w = pos - static_cast<double>(lo);
    return w == 0.0 ? draws[lo] : draws[lo] * (1.0 - w) + draws[hi] * w;
  };
  r.lo = pct(0.025);
  r.hi = pct(0.975);
  return r;
}

UpliftResult uplift_ci(const EvalResult& model, const EvalResult& baseline, std::size_t n_index,
                       std::size_t resamples, std::uint64_t seed) {
  if (model.per_sequence.size() != baseline.per_sequence.size()) {
    throw ContractError("reports cover different sequence sets");
  }
  std::vector<double> ms, bs;
  std::vector<std::size_t> pts;
  for (std::size_t i = 0; i < model.per_sequence.size(); ++i) {
    const auto& a = model.per_sequence[i];
    const auto& b = baseline.per_sequence[i];
    if (a.points != b.points) throw ContractError("reports cover different evaluation points");
    ms.push_back(a.recall_sum.at(n_index));
    bs.push_back(b.recall_sum.at(n_index));
    pts.push_back(a.points);
  }
  return uplift_ci(ms, bs, pts, resamples, seed);
}

}  // namespace seqrec
