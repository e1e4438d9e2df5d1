// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace seqrec {

/// Dense item index in [0, N_O).
using ItemIndex = std::uint32_t;
using Sequence = std::vector<ItemIndex>;

/// Padded block of sequences. mask(i, t) == 1 iff t < lengths[i]; padded
/// item slots hold index 0 so that lookups stay in range.
struct Batch {
  std::size_t rows = 0;
  std::size_t steps = 0;
  std::vector<ItemIndex> items;      // rows × steps
  std::vector<std::uint8_t> mask;    // rows × steps
  std::vector<std::size_t> lengths;  // rows
  std::vector<std::size_t> source;   // row -> sequence index in the dataset

  ItemIndex item(std::size_t r, std::size_t t) const { return items[r * steps + t]; }
  bool valid(std::size_t r, std::size_t t) const { return mask[r * steps + t] != 0; }

  /// Column t of the item matrix.
  std::vector<ItemIndex> column(std::size_t t) const;
  std::vector<std::uint8_t> mask_column(std::size_t t) const;
};

/// Packs sequences (in the given order) into one padded batch.
Batch pack_batch(std::span<const Sequence* const> sequences, std::span<const std::size_t> source = {});

/// Splits sequences into padded batches. With `shuffle` the order is drawn
/// from `seed`, sequences of similar length are grouped within pools of
/// consecutive batches, and the batch order is shuffled again. Without it the
/// grouping is applied to the input order and nothing is randomised. The last
/// batch may be partial.
std::vector<Batch> make_batches(std::span<const Sequence> sequences, std::size_t batch_size, std::uint64_t seed,
                                bool shuffle);

}  // namespace seqrec
