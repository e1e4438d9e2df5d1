// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "seqrec/eval.hpp"
#include "seqrec/model.hpp"
#include "seqrec/synth.hpp"

namespace seqrec {

/// Runs a sequence model over blocks of sequences, carrying the recurrent
/// state across steps without recording gradients.
template <class T>
class ModelScorer final : public NextItemScorer {
 public:
  explicit ModelScorer(SequenceModel<T>& model, std::size_t block = 64) : model_(&model), block_(block) {}
  std::size_t num_items() const override { return model_->config().num_items; }
  std::size_t block_size() const override { return block_; }
  void score(std::span<const Sequence* const> block, const ScoreSink& sink) const override;

 private:
  SequenceModel<T>* model_;
  std::size_t block_;
};

extern template class ModelScorer<float>;
extern template class ModelScorer<double>;

/// Scores items by their true next-item probability under a synthetic
/// process, seeing at most `max_history` trailing items.
class OracleScorer final : public NextItemScorer {
 public:
  OracleScorer(const TransitionTable& table, std::size_t max_history) : table_(&table), history_(max_history) {}
  std::size_t num_items() const override { return table_->num_items(); }
  void score(std::span<const Sequence* const> block, const ScoreSink& sink) const override;

 private:
  const TransitionTable* table_;
  std::size_t history_;
};

}  // namespace seqrec
