// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "seqrec/batch.hpp"
#include "seqrec/layers.hpp"

namespace seqrec {

/// Embedding -> recurrent module -> output projection.
///
/// Hidden states start at zero for every sequence. The identity cell turns
/// the model into the co-event factorisation Uᵀ V x_t (V = embedding,
/// U = output projection).
template <class T>
class SequenceModel {
 public:
  SequenceModel(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  std::vector<Parameter<T>*> parameters();
  std::vector<const Parameter<T>*> parameters() const;
  std::size_t parameter_count() const;
  void zero_grad();

  struct Bound {
    Var<T> embedding;
    Var<T> projection;
    std::vector<typename GruCellParams<T>::Bound> gru;
    std::optional<typename HmLstmParams<T>::Bound> hm;
  };
  Bound bind(Tape<T>& tape);

  /// Recurrent state for a block of rows.
  struct State {
    std::vector<Var<T>> hidden;  // GRU layers
    std::optional<HmLstmState<T>> hm;
  };
  State initial_state(Tape<T>& tape, std::size_t rows) const;

  /// Consumes one item per row and returns the sequence representation the
  /// output module reads.
  Var<T> advance(const Bound& bound, std::span<const ItemIndex> items, State& state) const;
  Var<T> logits(const Bound& bound, Var<T> representation) const;

  /// Logits for every input step t = 0..steps-2 of the batch; step t is
  /// trained against item t+1.
  std::vector<Var<T>> unroll(Tape<T>& tape, const Batch& batch);

  /// Plain-tensor copy of a recurrent state, used to carry state across
  /// short-lived inference tapes.
  struct Snapshot {
    std::vector<Tensor<T>> hidden;
    std::vector<Tensor<T>> h, c, z;
  };
  Snapshot initial_snapshot(std::size_t rows) const;
  /// Inference step without gradient recording; returns logits [rows × N_O].
  Tensor<T> step_inference(std::span<const ItemIndex> items, Snapshot& snapshot);

  EmbeddingTable<T>& embedding() { return embedding_; }
  const EmbeddingTable<T>& embedding() const { return embedding_; }
  OutputProjection<T>& output() { return output_; }
  std::vector<GruCellParams<T>>& gru_layers() { return gru_; }
  std::optional<HmLstmParams<T>>& hm_lstm() { return hm_; }

  /// Parameter lookup by name; nullptr when absent.
  Parameter<T>* find(const std::string& name);

 private:
  ModelConfig config_;
  EmbeddingTable<T> embedding_;
  std::vector<GruCellParams<T>> gru_;
  std::optional<HmLstmParams<T>> hm_;
  OutputProjection<T> output_;
};

extern template class SequenceModel<float>;
extern template class SequenceModel<double>;

}  // namespace seqrec
