// SPDX-License-Identifier: Apache-2.0
#include "seqrec/batch.hpp"

#include <algorithm>

#include "seqrec/errors.hpp"
#include "seqrec/random.hpp"

namespace seqrec {

std::vector<ItemIndex> Batch::column(std::size_t t) const {
  std::vector<ItemIndex> out(rows);
  for (std::size_t r = 0; r < rows; ++r) out[r] = item(r, t);
  return out;
}

std::vector<std::uint8_t> Batch::mask_column(std::size_t t) const {
  std::vector<std::uint8_t> out(rows);
  for (std::size_t r = 0; r < rows; ++r) out[r] = mask[r * steps + t];
  return out;
}

Batch pack_batch(std::span<const Sequence* const> sequences, std::span<const std::size_t> source) {
  if (!source.empty() && source.size() != sequences.size()) {
    throw DimensionError("pack_batch: source ids do not match sequence count");
  }
  Batch b;
  b.rows = sequences.size();
  for (const auto* s : sequences) b.steps = std::max(b.steps, s->size());
  b.items.assign(b.rows * b.steps, 0);
  b.mask.assign(b.rows * b.steps, 0);
  b.lengths.resize(b.rows);
  b.source.resize(b.rows);
  for (std::size_t r = 0; r < b.rows; ++r) {
    const Sequence& s = *sequences[r];
    b.lengths[r] = s.size();
    b.source[r] = source.empty() ? r : source[r];
    std::copy(s.begin(), s.end(), b.items.begin() + static_cast<std::ptrdiff_t>(r * b.steps));
    std::fill_n(b.mask.begin() + static_cast<std::ptrdiff_t>(r * b.steps), s.size(), std::uint8_t{1});
  }
  return b;
}

std::vector<Batch> make_batches(std::span<const Sequence> sequences, std::size_t batch_size, std::uint64_t seed,
                                bool shuffle) {
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  constexpr std::size_t kPoolBatches = 32;
  std::vector<std::size_t> order(sequences.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  if (shuffle) seqrec::shuffle(std::span(order), rng);

  const std::size_t pool = batch_size * kPoolBatches;
  for (std::size_t start = 0; start < order.size(); start += pool) {
    const auto first = order.begin() + static_cast<std::ptrdiff_t>(start);
    const auto last = order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), start + pool));
    std::stable_sort(first, last, [&](std::size_t a, std::size_t b) {
      return sequences[a].size() < sequences[b].size();
    });
  }

  std::vector<Batch> batches;
  batches.reserve((order.size() + batch_size - 1) / batch_size);
  std::vector<const Sequence*> ptrs;
  std::vector<std::size_t> ids;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    ptrs.clear();
    ids.clear();
    for (std::size_t i = start; i < std::min(order.size(), start + batch_size); ++i) {
      ptrs.push_back(&sequences[order[i]]);
      ids.push_back(order[i]);
    }
    batches.push_back(pack_batch(ptrs, ids));
  }
  if (shuffle) seqrec::shuffle(std::span(batches), rng);
  return batches;
}

}  // namespace seqrec
