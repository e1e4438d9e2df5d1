// SPDX-License-Identifier: Apache-2.0
#include "seqrec/baselines.hpp"

#include <algorithm>
#include <numeric>

#include <fmt/format.h>

#include "seqrec/errors.hpp"

namespace seqrec {

namespace {

void check_items(std::span<const Sequence> train, std::size_t num_items) {
  if (train.empty()) throw ConfigError("baseline fit needs a non-empty training set");
  for (const auto& s : train) {
    for (ItemIndex i : s) {
      if (i >= num_items) throw VocabularyError(fmt::format("item {} outside vocabulary of {}", i, num_items));
    }
  }
}

}  // namespace

PopModel PopModel::fit(std::span<const Sequence> train, std::size_t num_items) {
  check_items(train, num_items);
  std::vector<std::uint64_t> counts(num_items, 0);
  for (const auto& s : train) {
    for (ItemIndex i : s) ++counts[i];
  }
  return PopModel(std::move(counts));
}

std::vector<double> PopModel::scores() const {
  return {counts_.begin(), counts_.end()};
}

std::vector<ItemIndex> PopModel::predict(std::size_t k) const {
  const auto s = scores();
  return top_k(s, k);
}

ItemKnnModel::ItemKnnModel(std::vector<std::uint64_t> freq, std::vector<std::vector<Neighbor>> neighbors)
    : freq_(std::move(freq)), neighbors_(std::move(neighbors)) {
  if (neighbors_.size() != freq_.size()) throw FormatError("item-KNN tables disagree on the item count");
  build_fallback();
}

ItemKnnModel ItemKnnModel::fit(std::span<const Sequence> train, std::size_t num_items) {
  check_items(train, num_items);
  std::vector<std::uint64_t> freq(num_items, 0);
  std::vector<std::vector<Neighbor>> rows(num_items);
  std::vector<ItemIndex> distinct;
  // Accumulate per-sequence distinct sets, then fold every item row.
  std::vector<std::vector<ItemIndex>> partners(num_items);
  for (const auto& s : train) {
    for (ItemIndex i : s) ++freq[i];
    distinct.assign(s.begin(), s.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    for (ItemIndex a : distinct) {
      for (ItemIndex b : distinct) {
        if (a != b) partners[a].push_back(b);
      }
    }
  }
  for (std::size_t a = 0; a < num_items; ++a) {
    auto& p = partners[a];
    std::sort(p.begin(), p.end());
    for (std::size_t i = 0; i < p.size();) {
      std::size_t j = i;
      while (j < p.size() && p[j] == p[i]) ++j;
      rows[a].push_back({p[i], static_cast<std::uint64_t>(j - i)});
      i = j;
    }
    std::vector<ItemIndex>().swap(p);
  }
  return ItemKnnModel(std::move(freq), std::move(rows));
}

void ItemKnnModel::build_fallback() {
  const std::size_t n = freq_.size();
  std::vector<ItemIndex> order(n);
  std::iota(order.begin(), order.end(), ItemIndex{0});
  std::stable_sort(order.begin(), order.end(), [&](ItemIndex a, ItemIndex b) { return freq_[a] > freq_[b]; });
  fallback_.assign(n, 0.0);
  for (std::size_t rank = 0; rank < n; ++rank) {
    fallback_[order[rank]] = -(1.0 + static_cast<double>(rank) / static_cast<double>(n + 1));
  }
}

double ItemKnnModel::similarity(ItemIndex a, ItemIndex b) const {
  if (a >= num_items() || b >= num_items()) throw VocabularyError("item outside the item-KNN vocabulary");
  const auto& row = neighbors_[a];
  auto it = std::lower_bound(row.begin(), row.end(), b, [](const Neighbor& n, ItemIndex i) { return n.item < i; });
  if (it == row.end() || it->item != b) return 0.0;
  return static_cast<double>(it->cooc) / (static_cast<double>(freq_[a]) * static_cast<double>(freq_[b]));
}

void ItemKnnModel::scores(ItemIndex current, std::span<double> out) const {
  if (current >= num_items()) throw VocabularyError(fmt::format("item {} unseen by item-KNN", current));
  if (out.size() != num_items()) throw DimensionError("score buffer does not match the item count");
  std::copy(fallback_.begin(), fallback_.end(), out.begin());
  const double fa = static_cast<double>(freq_[current]);
  for (const auto& n : neighbors_[current]) {
    out[n.item] = static_cast<double>(n.cooc) / (fa * static_cast<double>(freq_[n.item]));
  }
  out[current] = -3.0;
}

std::vector<ItemIndex> ItemKnnModel::predict(ItemIndex current, std::size_t k) const {
  std::vector<double> s(num_items());
  scores(current, s);
  return top_k(s, std::min(k, num_items() - 1));
}

void PopScorer::score(std::span<const Sequence* const> block, const ScoreSink& sink) const {
  for (std::size_t r = 0; r < block.size(); ++r) {
    for (std::size_t t = 1; t < block[r]->size(); ++t) sink(r, t, scores_);
  }
}

void KnnScorer::score(std::span<const Sequence* const> block, const ScoreSink& sink) const {
  std::vector<double> buf(model_->num_items());
  for (std::size_t r = 0; r < block.size(); ++r) {
    const Sequence& s = *block[r];
    for (std::size_t t = 1; t < s.size(); ++t) {
      model_->scores(s[t - 1], buf);
      sink(r, t, buf);
    }
  }
}

}  // namespace seqrec
