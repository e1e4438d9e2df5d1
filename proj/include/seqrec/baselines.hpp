// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "seqrec/eval.hpp"

namespace seqrec {

/// Global popularity: the score of an item is its training event count.
class PopModel {
 public:
  PopModel() = default;
  explicit PopModel(std::vector<std::uint64_t> counts) : counts_(std::move(counts)) {}

  static PopModel fit(std::span<const Sequence> train, std::size_t num_items);

  std::size_t num_items() const { return counts_.size(); }
  const std::vector<std::uint64_t>& counts() const { return counts_; }
  std::vector<double> scores() const;
  /// K most frequent items, ties by ascending index.
  std::vector<ItemIndex> predict(std::size_t k) const;

  friend bool operator==(const PopModel&, const PopModel&) = default;

 private:
  std::vector<std::uint64_t> counts_;
};

/// Item-to-item neighbours. sim(i, j) = cooc(i, j) / (freq(i) · freq(j)), where
/// cooc counts each unordered pair once per training sequence it appears in
/// and freq is the training event count.
class ItemKnnModel {
 public:
  struct Neighbor {
    ItemIndex item;
    std::uint64_t cooc;
    friend bool operator==(const Neighbor&, const Neighbor&) = default;
  };

  ItemKnnModel() = default;
  ItemKnnModel(std::vector<std::uint64_t> freq, std::vector<std::vector<Neighbor>> neighbors);

  static ItemKnnModel fit(std::span<const Sequence> train, std::size_t num_items);

  std::size_t num_items() const { return freq_.size(); }
  const std::vector<std::uint64_t>& freq() const { return freq_; }
  /// Sorted by item index.
  const std::vector<std::vector<Neighbor>>& neighbors() const { return neighbors_; }

  double similarity(ItemIndex a, ItemIndex b) const;
  /// Scores used for ranking: sim (> 0) for co-occurring items, then a
  /// popularity-ordered fallback in (-2, -1], and -3 for the item itself.
  /// Throws VocabularyError for items outside the vocabulary.
  void scores(ItemIndex current, std::span<double> out) const;
  std::vector<ItemIndex> predict(ItemIndex current, std::size_t k) const;

  friend bool operator==(const ItemKnnModel& a, const ItemKnnModel& b) {
    return a.freq_ == b.freq_ && a.neighbors_ == b.neighbors_;
  }

 private:
  void build_fallback();

  std::vector<std::uint64_t> freq_;
  std::vector<std::vector<Neighbor>> neighbors_;
  std::vector<double> fallback_;
};

class PopScorer final : public NextItemScorer {
 public:
  explicit PopScorer(const PopModel& model) : scores_(model.scores()) {}
  std::size_t num_items() const override { return scores_.size(); }
  void score(std::span<const Sequence* const> block, const ScoreSink& sink) const override;

 private:
  std::vector<double> scores_;
};

class KnnScorer final : public NextItemScorer {
 public:
  explicit KnnScorer(const ItemKnnModel& model) : model_(&model) {}
  std::size_t num_items() const override { return model_->num_items(); }
  void score(std::span<const Sequence* const> block, const ScoreSink& sink) const override;

 private:
  const ItemKnnModel* model_;
};

}  // namespace seqrec
