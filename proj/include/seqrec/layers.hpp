// SPDX-License-Identifier: Apache-2.0
#pragma once

// Model components: item embedding, GRU cell, stacked recurrence, HM-LSTM
// cell, layer normalisation and the output projection.
//
// Every component follows the same two-phase pattern: the owning struct holds
// Parameters, and bind() registers them on a tape once per forward pass,
// returning a struct of Vars consumed by the step functions.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "seqrec/batch.hpp"
#include "seqrec/random.hpp"
#include "seqrec/tape.hpp"

namespace seqrec {

enum class CellKind { gru, hm_lstm, identity };

std::string to_string(CellKind kind);
CellKind parse_cell_kind(const std::string& name);

/// Architecture choice. `identity` is the co-event factorisation: the
/// recurrent module passes the current embedding through unchanged.
struct ModelConfig {
  CellKind cell = CellKind::gru;
  std::size_t layers = 1;
  bool layer_norm = false;
  bool tied_output = false;
  std::size_t embedding_dim = 100;  // N_E
  std::size_t hidden_dim = 100;     // N_H
  std::size_t num_items = 0;        // N_O

  /// Throws ConfigError on inconsistent settings.
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Uniform in [-a, a] with a = sqrt(6 / (fan_in + fan_out)); fan_out is the
/// row count and fan_in the column count.
template <class T>
void init_scaled_uniform(Tensor<T>& weight, Rng& rng);

// ---------------------------------------------------------------------------

template <class T>
struct LayerNormParams {
  LayerNormParams(const std::string& prefix, std::size_t width);

  Parameter<T> gain;
  Parameter<T> bias;
  T eps = T(1e-5);

  struct Bound {
    Var<T> gain;
    Var<T> bias;
    T eps;
  };
  Bound bind(Tape<T>& tape) { return {tape.param(gain), tape.param(bias), eps}; }
};

template <class T>
Var<T> layer_norm(const typename LayerNormParams<T>::Bound& ln, Var<T> x) {
  return layer_norm(x, ln.gain, ln.bias, ln.eps);
}

/// Un-taped normalisation of one vector; `gain`/`bias` empty means unit/zero.
template <class T>
std::vector<T> layer_norm_vector(std::span<const T> h, std::span<const T> gain, std::span<const T> bias, T eps);

// ---------------------------------------------------------------------------

template <class T>
struct EmbeddingTable {
  EmbeddingTable(std::size_t num_items, std::size_t dim);

  Parameter<T> weight;  // N_O × N_E

  std::size_t num_items() const { return weight.value.rows(); }
  /// Row read; throws VocabularyError for an out-of-range index.
  std::vector<T> embed(ItemIndex item) const;
};

template <class T>
Var<T> embed(Var<T> table, std::span<const ItemIndex> items) {
  return gather_rows(table, items);
}

// ---------------------------------------------------------------------------

/// The six bias-free GRU matrices of one layer, plus optional layer
/// normalisation of each of the three gate pre-activations.
template <class T>
struct GruCellParams {
  GruCellParams(const std::string& prefix, std::size_t input_dim, std::size_t hidden_dim, bool with_ln);

  Parameter<T> w_r_e, w_h_e, w_z_e;  // N_H × N_in
  Parameter<T> w_r_h, w_h_h, w_z_h;  // N_H × N_H
  std::optional<LayerNormParams<T>> ln_r, ln_h, ln_z;

  std::size_t input_dim() const { return w_r_e.value.cols(); }
  std::size_t hidden_dim() const { return w_r_e.value.rows(); }
  std::vector<Parameter<T>*> parameters();

  struct Bound {
    Var<T> w_r_e, w_h_e, w_z_e, w_r_h, w_h_h, w_z_h;
    std::optional<typename LayerNormParams<T>::Bound> ln_r, ln_h, ln_z;
  };
  Bound bind(Tape<T>& tape);
};

/// r = σ(W_r_e e + W_r_h h), h̃ = tanh(W_h_e e + W_h_h (r ⊙ h)),
/// z = σ(W_z_e e + W_z_h h), h' = (1 − z) ⊙ h + z ⊙ h̃.
/// With LN, each of the three pre-activation sums is normalised first.
template <class T>
Var<T> gru_step(const typename GruCellParams<T>::Bound& cell, Var<T> e, Var<T> h_prev);

/// Layer 0 consumes e; layer l consumes the new state of layer l−1.
template <class T>
std::vector<Var<T>> stacked_step(std::span<const typename GruCellParams<T>::Bound> cells, Var<T> e,
                                 std::span<const Var<T>> hidden);

// ---------------------------------------------------------------------------

enum class HmOp : std::uint8_t { copy, update, flush };

/// One HM-LSTM layer. Gates are ordered (f, i, o, g). The top layer carries no
/// boundary detector and no top-down path.
template <class T>
struct HmLstmLayerParams {
  HmLstmLayerParams(const std::string& prefix, std::size_t input_dim, std::size_t hidden_dim, bool has_boundary,
                    bool has_top_down, bool with_ln);

  std::array<Parameter<T>, 4> bottom_up;             // N_H × N_in
  std::array<Parameter<T>, 4> recurrent;             // N_H × N_H
  std::optional<std::array<Parameter<T>, 4>> top_down;  // N_H × N_H
  std::array<Parameter<T>, 4> bias;                  // [N_H]
  std::optional<Parameter<T>> boundary_bottom_up;    // 1 × N_in
  std::optional<Parameter<T>> boundary_recurrent;    // 1 × N_H
  std::optional<Parameter<T>> boundary_top_down;     // 1 × N_H
  std::optional<Parameter<T>> boundary_bias;         // [1]
  std::optional<std::array<LayerNormParams<T>, 4>> ln;

  bool has_boundary() const { return boundary_bias.has_value(); }
  std::vector<Parameter<T>*> parameters();
};

template <class T>
struct HmLstmParams {
  HmLstmParams(std::size_t layers, std::size_t input_dim, std::size_t hidden_dim, bool with_ln);

  std::vector<HmLstmLayerParams<T>> layers;
  std::vector<Parameter<T>> readout;       // per layer, N_H × N_H
  std::vector<Parameter<T>> readout_gate;  // per (layer, source layer), 1 × N_H

  std::size_t hidden_dim() const { return readout.front().value.rows(); }
  std::vector<Parameter<T>*> parameters();

  struct LayerBound {
    std::array<Var<T>, 4> bottom_up, recurrent, bias;
    std::optional<std::array<Var<T>, 4>> top_down;
    std::optional<Var<T>> boundary_bottom_up, boundary_recurrent, boundary_top_down, boundary_bias;
    std::optional<std::array<typename LayerNormParams<T>::Bound, 4>> ln;
  };
  struct Bound {
    std::vector<LayerBound> layers;
    std::vector<Var<T>> readout, readout_gate;
  };
  Bound bind(Tape<T>& tape);
};

/// Per-layer hidden state, cell and boundary (z is a [rows×1] column; the top
/// layer's z is constantly zero). `ops` records the operation each layer
/// executed for every row during the last step.
template <class T>
struct HmLstmState {
  std::vector<Var<T>> h, c, z;
  std::vector<std::vector<HmOp>> ops;
};

template <class T>
HmLstmState<T> hm_lstm_initial_state(Tape<T>& tape, std::size_t layers, std::size_t rows, std::size_t hidden_dim);

/// One step of the hierarchical multiscale LSTM. For layer l with previous own
/// boundary z_prev and the boundary z_below just produced beneath it (always 1
/// for the bottom layer):
///   z_prev == 1              FLUSH:  c = i ⊙ g
///   z_prev == 0, z_below == 1  UPDATE: c = f ⊙ c_prev + i ⊙ g
///   z_prev == 0, z_below == 0  COPY:   c = c_prev, h = h_prev
/// The boundary is binarize(hard_sigmoid(logit)) with a straight-through
/// gradient. `forced` optionally pins the boundary of layer l (no gradient).
template <class T>
HmLstmState<T> hm_lstm_step(const typename HmLstmParams<T>::Bound& params, Var<T> e, const HmLstmState<T>& state,
                            std::span<const std::optional<std::type_identity_t<T>>> forced = {});

/// tanh(Σ_l g_l · W_l h_l) with g_l = σ(Σ_k u_{l,k} · h_k).
template <class T>
Var<T> hm_lstm_readout(const typename HmLstmParams<T>::Bound& params, const HmLstmState<T>& state);

// ---------------------------------------------------------------------------

/// Owned mode keeps W_O [N_O × N_H]; tied mode reuses the embedding table.
template <class T>
struct OutputProjection {
  OutputProjection(bool tied, std::size_t num_items, std::size_t hidden_dim, std::size_t embedding_dim);

  bool tied;
  std::optional<Parameter<T>> weight;

  std::size_t parameter_count() const { return weight ? weight->value.size() : 0; }
};

/// o = W_O h (owned) or W_Iᵀ h (tied), for every row of h.
template <class T>
Var<T> output_logits(Var<T> h, Var<T> projection) {
  return matmul_nt(h, projection);
}

}  // namespace seqrec
