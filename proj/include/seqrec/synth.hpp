// SPDX-License-Identifier: Apache-2.0
#pragma once

// Planted-structure sequence generator. The generating process is kept so the
// best achievable top-K policy can be evaluated exactly.
//
//   markov1  Items are laid out on a random ring and cut into blocks of
//            `strong + weak` consecutive ring slots. Every item points at one
//            block (balanced) and moves to slot k of it with probability
//            ∝ decay^k, scaled by `weak_scale` for the last `weak` slots.
//   markov2  Item a carries the label a mod G. The successor distribution is
//            uniform over S items chosen by (label of previous item, current
//            item); the G sets of one current item are disjoint. Each item is
//            reached equally often from every label, so the current item alone
//            leaves G·S equally likely successors.
//   cycle    One random cyclic permutation, deterministic successors.
//   uniform  Every item equally likely at every step.
//
// The first item is uniform. For markov2 the label that drives the second item
// is drawn uniformly.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "seqrec/data.hpp"

namespace seqrec {

enum class SynthOrder { markov1, markov2, cycle, uniform };
std::string to_string(SynthOrder order);
SynthOrder parse_synth_order(const std::string& name);

struct SynthConfig {
  SynthOrder order = SynthOrder::markov1;
  std::size_t n_items = 1000;
  std::size_t n_sequences = 1000;
  std::size_t n_valid = 0;
  std::size_t n_test = 0;
  std::size_t min_length = 2;
  std::size_t max_length = 40;
  std::uint64_t seed = 1;
  // markov1
  std::size_t strong = 20;
  std::size_t weak = 5;
  double decay = 0.9;
  double weak_scale = 0.1;
  // markov2
  std::size_t labels = 2;
  std::size_t successors = 20;

  void validate() const;
};

using ItemDistribution = std::vector<std::pair<ItemIndex, double>>;

class TransitionTable {
 public:
  explicit TransitionTable(const SynthConfig& config);

  SynthOrder order() const { return order_; }
  std::size_t num_items() const { return n_; }
  /// Number of trailing items the process conditions on (1 or 2).
  std::size_t order_length() const { return order_ == SynthOrder::markov2 ? 2 : 1; }

  /// Exact distribution of the next item given the observed prefix (last
  /// element = current item), using at most `max_history` trailing items.
  /// Entries are sorted by item index and carry positive probability.
  ItemDistribution next(std::span<const ItemIndex> prefix, std::size_t max_history = 2) const;

  std::vector<Sequence> sample(std::size_t count, std::size_t min_length, std::size_t max_length,
                               std::uint64_t seed) const;

 private:
  ItemDistribution successors_of(ItemIndex current, std::size_t label) const;

  SynthOrder order_;
  std::size_t n_;
  std::size_t labels_ = 1;
  // markov1 / cycle: row per item; markov2: row per (label, item) at label·n + item.
  std::vector<ItemDistribution> rows_;
};

/// Train/valid/test drawn from independent streams of one transition table;
/// the vocabulary is the identity mapping.
PreparedData synth_generate(const SynthConfig& config);

/// Top-K items of a distribution over n items, by probability then ascending
/// index; zero-probability items fill the remaining slots in index order.
std::vector<ItemIndex> distribution_top_k(const ItemDistribution& dist, std::size_t k, std::size_t n);

/// Exact expected Recall@K,1 of the best policy that sees at most
/// `max_history` trailing items, averaged over every evaluation point of the
/// given sequences.
double expected_optimal_recall(const TransitionTable& table, std::span<const Sequence> sequences, std::size_t k,
                               std::size_t max_history = 2);

}  // namespace seqrec
