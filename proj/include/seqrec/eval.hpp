// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "seqrec/batch.hpp"

namespace seqrec {

/// Receives the next-item scores for (row in block, t), where t is the number
/// of items consumed so far (1 ≤ t < length).
using ScoreSink = std::function<void(std::size_t row, std::size_t t, std::span<const double> scores)>;

/// Anything that scores every item as the next element of a prefix.
/// Implementations must be safe to call concurrently from several threads.
class NextItemScorer {
 public:
  virtual ~NextItemScorer() = default;
  virtual std::size_t num_items() const = 0;
  /// Emits scores for every evaluation position of every sequence in the block.
  virtual void score(std::span<const Sequence* const> block, const ScoreSink& sink) const = 0;
  /// Preferred number of sequences per call.
  virtual std::size_t block_size() const { return 1; }
};

/// Indices of the k highest scores, ties by ascending index; NaN ranks last.
std::vector<ItemIndex> top_k(std::span<const double> scores, std::size_t k);

/// |S_rec ∩ S_rel| / |S_rel| with S_rel deduplicated. Throws ContractError on
/// an empty relevant set.
double recall_k_n(std::span<const ItemIndex> recommended, std::span<const ItemIndex> relevant);

struct LengthBucket {
  std::size_t lo = 0;
  std::size_t hi = 0;  // inclusive
  std::string label() const;
};

/// Throws ConfigError for empty or overlapping buckets.
void validate_buckets(std::span<const LengthBucket> buckets);
/// Parses "2-5,6-25,26-200".
std::vector<LengthBucket> parse_buckets(const std::string& text);
std::vector<LengthBucket> default_buckets(bool long_tail_200);

struct EvalOptions {
  std::size_t k = 20;
  std::vector<std::size_t> ns{1};
  std::size_t max_offset = 0;  // 0: no per-offset curve
  std::vector<LengthBucket> buckets;
  std::size_t threads = 1;
};

/// Sums kept per sequence so that aggregates and bootstrap resamples are
/// exact functions of these integers and partial sums.
struct SequenceEval {
  std::size_t length = 0;
  std::size_t points = 0;
  std::vector<double> recall_sum;        // per requested N
  std::vector<std::size_t> offset_hits;  // per offset
  std::vector<std::size_t> offset_points;
};

struct BucketRow {
  LengthBucket bucket;
  std::size_t sequences = 0;
  std::size_t points = 0;
  std::vector<double> recall;  // per requested N
};

struct EvalResult {
  EvalOptions options;
  std::vector<SequenceEval> per_sequence;

  std::size_t points() const;
  /// Mean Recall@K,N over all evaluation points for options.ns[n_index].
  double recall(std::size_t n_index) const;
  double recall_for(std::size_t n) const;
  /// Curve point d: mean hit rate of item t+d over points with ≥ d+1 future items.
  std::vector<double> offset_curve() const;
  std::vector<BucketRow> bucket_rows() const;
};

EvalResult evaluate(const NextItemScorer& scorer, std::span<const Sequence> sequences, const EvalOptions& options);

/// Per-offset curve only (max_offset ≥ 1).
std::vector<double> per_offset_recall(const NextItemScorer& scorer, std::span<const Sequence> sequences,
                                      std::size_t k, std::size_t max_offset);

struct UpliftResult {
  double model_recall = 0.0;
  double baseline_recall = 0.0;
  double uplift = 0.0;  // percent
  double lo = 0.0;
  double hi = 0.0;
  std::size_t resamples = 0;
};

/// Uplift of the model over the baseline in percent with a 95% interval from a
/// seeded bootstrap over whole sequences. Both inputs must cover the same
/// evaluation points (identical per-sequence point counts).
UpliftResult uplift_ci(std::span<const double> model_sums, std::span<const double> baseline_sums,
                       std::span<const std::size_t> points, std::size_t resamples = 1000, std::uint64_t seed = 1);
UpliftResult uplift_ci(const EvalResult& model, const EvalResult& baseline, std::size_t n_index,
                       std::size_t resamples = 1000, std::uint64_t seed = 1);

}  // namespace seqrec
