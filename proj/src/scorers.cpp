// SPDX-License-Identifier: Apache-2.0
#include "seqrec/scorers.hpp"

#include <algorithm>

namespace seqrec {

template <class T>
void ModelScorer<T>::score(std::span<const Sequence* const> block, const ScoreSink& sink) const {
  const std::size_t rows = block.size();
  if (rows == 0) return;
  std::size_t steps = 0;
  for (const Sequence* s : block) steps = std::max(steps, s->size());
  auto snapshot = model_->initial_snapshot(rows);
  std::vector<ItemIndex> items(rows);
  std::vector<double> buf(num_items());
  for (std::size_t t = 0; t + 1 < steps; ++t) {
    for (std::size_t r = 0; r < rows; ++r) items[r] = t < block[r]->size() ? (*block[r])[t] : 0;
    const Tensor<T> logits = model_->step_inference(items, snapshot);
    for (std::size_t r = 0; r < rows; ++r) {
      if (t + 1 >= block[r]->size()) continue;
      const auto row = logits.row(r);
      std::copy(row.begin(), row.end(), buf.begin());
      sink(r, t + 1, buf);
    }
  }
}

template class ModelScorer<float>;
template class ModelScorer<double>;

void OracleScorer::score(std::span<const Sequence* const> block, const ScoreSink& sink) const {
  std::vector<double> buf(num_items());
  for (std::size_t r = 0; r < block.size(); ++r) {
    const Sequence& s = *block[r];
    for (std::size_t t = 1; t < s.size(); ++t) {
      std::fill(buf.begin(), buf.end(), 0.0);
      for (auto [item, p] : table_->next(std::span(s).first(t), history_)) buf[item] = p;
      sink(r, t, buf);
    }
  }
}

}  // namespace seqrec
