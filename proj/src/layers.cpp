// SPDX-License-Identifier: Apache-2.0
#include "seqrec/layers.hpp"

#include <cmath>

#include <fmt/format.h>

namespace seqrec {

std::string to_string(CellKind kind) {
  switch (kind) {
    case CellKind::gru: return "gru";
    case CellKind::hm_lstm: return "hm_lstm";
    case CellKind::identity: return "identity";
  }
  return "?";
}

CellKind parse_cell_kind(const std::string& name) {
  if (name == "gru") return CellKind::gru;
  if (name == "hm_lstm") return CellKind::hm_lstm;
  if (name == "identity") return CellKind::identity;
  throw ConfigError("unknown cell kind: " + name);
}

void ModelConfig::validate() const {
  if (num_items == 0) throw ConfigError("model needs at least one item");
  if (embedding_dim == 0 || hidden_dim == 0) throw ConfigError("embedding and hidden sizes must be positive");
  if (layers == 0) throw ConfigError("model needs at least one layer");
  if (cell == CellKind::hm_lstm && layers < 2) {
    throw ConfigError(fmt::format("hm_lstm needs at least 2 layers, got {}", layers));
  }
  if (cell == CellKind::identity) {
    if (layers != 1) throw ConfigError("identity cell has exactly one layer");
    if (layer_norm) throw ConfigError("identity cell has no pre-activations to normalise");
    if (hidden_dim != embedding_dim) throw ConfigError("identity cell requires N_H == N_E");
  }
  if (tied_output && embedding_dim != hidden_dim) {
    throw ConfigError(fmt::format("tied output requires N_E == N_H, got N_E={} N_H={}", embedding_dim, hidden_dim));
  }
  if (layer_norm && hidden_dim < 2) throw ConfigError("layer normalisation needs N_H >= 2");
}

template <class T>
void init_scaled_uniform(Tensor<T>& weight, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(weight.rows() + weight.cols()));
  for (auto& v : weight.values()) v = static_cast<T>(uniform_real(rng, -a, a));
}

// ---------------------------------------------------------------------------

template <class T>
LayerNormParams<T>::LayerNormParams(const std::string& prefix, std::size_t width)
    : gain(prefix + ".gain", Tensor<T>(Shape{width}, T{1})), bias(prefix + ".bias", Tensor<T>(Shape{width}, T{0})) {}

template <class T>
std::vector<T> layer_norm_vector(std::span<const T> h, std::span<const T> gain, std::span<const T> bias, T eps) {
  const std::size_t n = h.size();
  if (n < 2) throw DimensionError("layer_norm needs at least 2 features");
  if ((!gain.empty() && gain.size() != n) || (!bias.empty() && bias.size() != n)) {
    throw DimensionError("layer_norm: gain/bias size mismatch");
  }
  T mean{0};
  for (auto v : h) mean += v;
  mean /= static_cast<T>(n);
  T var{0};
  for (auto v : h) var += (v - mean) * (v - mean);
  var /= static_cast<T>(n);
  const T inv = T{1} / std::sqrt(var + eps);
  std::vector<T> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = (h[i] - mean) * inv;
    if (!gain.empty()) out[i] *= gain[i];
    if (!bias.empty()) out[i] += bias[i];
  }
  return out;
}

// ---------------------------------------------------------------------------

template <class T>
EmbeddingTable<T>::EmbeddingTable(std::size_t num_items, std::size_t dim)
    : weight("embedding", Tensor<T>::matrix(num_items, dim)) {}

template <class T>
std::vector<T> EmbeddingTable<T>::embed(ItemIndex item) const {
  if (item >= num_items()) {
    throw VocabularyError(fmt::format("item index {} outside vocabulary of size {}", item, num_items()));
  }
  auto row = weight.value.row(item);
  return {row.begin(), row.end()};
}

// ---------------------------------------------------------------------------

template <class T>
GruCellParams<T>::GruCellParams(const std::string& prefix, std::size_t input_dim, std::size_t hidden_dim,
                                bool with_ln)
    : w_r_e(prefix + ".w_r_e", Tensor<T>::matrix(hidden_dim, input_dim)),
      w_h_e(prefix + ".w_h_e", Tensor<T>::matrix(hidden_dim, input_dim)),
      w_z_e(prefix + ".w_z_e", Tensor<T>::matrix(hidden_dim, input_dim)),
      w_r_h(prefix + ".w_r_h", Tensor<T>::matrix(hidden_dim, hidden_dim)),
      w_h_h(prefix + ".w_h_h", Tensor<T>::matrix(hidden_dim, hidden_dim)),
      w_z_h(prefix + ".w_z_h", Tensor<T>::matrix(hidden_dim, hidden_dim)) {
  if (with_ln) {
    ln_r.emplace(prefix + ".ln_r", hidden_dim);
    ln_h.emplace(prefix + ".ln_h", hidden_dim);
    ln_z.emplace(prefix + ".ln_z", hidden_dim);
  }
}

template <class T>
std::vector<Parameter<T>*> GruCellParams<T>::parameters() {
  std::vector<Parameter<T>*> out{&w_r_e, &w_h_e, &w_z_e, &w_r_h, &w_h_h, &w_z_h};
  for (auto* ln : {&ln_r, &ln_h, &ln_z}) {
    if (*ln) {
      out.push_back(&(*ln)->gain);
      out.push_back(&(*ln)->bias);
    }
  }
  return out;
}

template <class T>
typename GruCellParams<T>::Bound GruCellParams<T>::bind(Tape<T>& tape) {
  Bound b{tape.param(w_r_e), tape.param(w_h_e), tape.param(w_z_e),
          tape.param(w_r_h), tape.param(w_h_h), tape.param(w_z_h), {}, {}, {}};
  if (ln_r) {
    b.ln_r = ln_r->bind(tape);
    b.ln_h = ln_h->bind(tape);
    b.ln_z = ln_z->bind(tape);
  }
  return b;
}

template <class T>
Var<T> gru_step(const typename GruCellParams<T>::Bound& cell, Var<T> e, Var<T> h_prev) {
  auto maybe_ln = [](const std::optional<typename LayerNormParams<T>::Bound>& ln, Var<T> x) {
    return ln ? layer_norm<T>(*ln, x) : x;
  };
  Var<T> r = sigmoid(maybe_ln(cell.ln_r, matmul_nt(e, cell.w_r_e) + matmul_nt(h_prev, cell.w_r_h)));
  Var<T> z = sigmoid(maybe_ln(cell.ln_z, matmul_nt(e, cell.w_z_e) + matmul_nt(h_prev, cell.w_z_h)));
  Var<T> candidate = tanh(maybe_ln(cell.ln_h, matmul_nt(e, cell.w_h_e) + matmul_nt(r * h_prev, cell.w_h_h)));
  return one_minus(z) * h_prev + z * candidate;
}

template <class T>
std::vector<Var<T>> stacked_step(std::span<const typename GruCellParams<T>::Bound> cells, Var<T> e,
                                 std::span<const Var<T>> hidden) {
  if (cells.empty() || cells.size() != hidden.size()) {
    throw DimensionError(fmt::format("stacked_step: {} cells for {} hidden states", cells.size(), hidden.size()));
  }
  std::vector<Var<T>> out;
  out.reserve(cells.size());
  Var<T> input = e;
  for (std::size_t l = 0; l < cells.size(); ++l) {
    input = gru_step<T>(cells[l], input, hidden[l]);
    out.push_back(input);
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

template <class T>
std::array<Parameter<T>, 4> gate_matrices(const std::string& prefix, std::size_t rows, std::size_t cols) {
  return {Parameter<T>(prefix + ".f", Tensor<T>::matrix(rows, cols)),
          Parameter<T>(prefix + ".i", Tensor<T>::matrix(rows, cols)),
          Parameter<T>(prefix + ".o", Tensor<T>::matrix(rows, cols)),
          Parameter<T>(prefix + ".g", Tensor<T>::matrix(rows, cols))};
}

template <class T>
std::array<Var<T>, 4> bind_all(Tape<T>& tape, std::array<Parameter<T>, 4>& ps) {
  return {tape.param(ps[0]), tape.param(ps[1]), tape.param(ps[2]), tape.param(ps[3])};
}

template <class T>
Var<T> zero_column(Tape<T>& tape, std::size_t rows) {
  return tape.constant(Tensor<T>::matrix(rows, 1, T{0}));
}

}  // namespace

template <class T>
HmLstmLayerParams<T>::HmLstmLayerParams(const std::string& prefix, std::size_t input_dim, std::size_t hidden_dim,
                                        bool has_boundary, bool has_top_down, bool with_ln)
    : bottom_up(gate_matrices<T>(prefix + ".bottom_up", hidden_dim, input_dim)),
      recurrent(gate_matrices<T>(prefix + ".recurrent", hidden_dim, hidden_dim)),
      bias{Parameter<T>(prefix + ".bias.f", Tensor<T>(Shape{hidden_dim})),
           Parameter<T>(prefix + ".bias.i", Tensor<T>(Shape{hidden_dim})),
           Parameter<T>(prefix + ".bias.o", Tensor<T>(Shape{hidden_dim})),
           Parameter<T>(prefix + ".bias.g", Tensor<T>(Shape{hidden_dim}))} {
  if (has_top_down) top_down = gate_matrices<T>(prefix + ".top_down", hidden_dim, hidden_dim);
  if (has_boundary) {
    boundary_bottom_up.emplace(prefix + ".boundary.bottom_up", Tensor<T>::matrix(1, input_dim));
    boundary_recurrent.emplace(prefix + ".boundary.recurrent", Tensor<T>::matrix(1, hidden_dim));
    if (has_top_down) boundary_top_down.emplace(prefix + ".boundary.top_down", Tensor<T>::matrix(1, hidden_dim));
    boundary_bias.emplace(prefix + ".boundary.bias", Tensor<T>(Shape{1}));
  }
  if (with_ln) {
    ln.emplace(std::array<LayerNormParams<T>, 4>{
        LayerNormParams<T>(prefix + ".ln_f", hidden_dim), LayerNormParams<T>(prefix + ".ln_i", hidden_dim),
        LayerNormParams<T>(prefix + ".ln_o", hidden_dim), LayerNormParams<T>(prefix + ".ln_g", hidden_dim)});
  }
}

template <class T>
std::vector<Parameter<T>*> HmLstmLayerParams<T>::parameters() {
  std::vector<Parameter<T>*> out;
  for (auto& p : bottom_up) out.push_back(&p);
  for (auto& p : recurrent) out.push_back(&p);
  if (top_down) {
    for (auto& p : *top_down) out.push_back(&p);
  }
  for (auto& p : bias) out.push_back(&p);
  for (auto* p : {&boundary_bottom_up, &boundary_recurrent, &boundary_top_down, &boundary_bias}) {
    if (*p) out.push_back(&**p);
  }
  if (ln) {
    for (auto& l : *ln) {
      out.push_back(&l.gain);
      out.push_back(&l.bias);
    }
  }
  return out;
}

template <class T>
HmLstmParams<T>::HmLstmParams(std::size_t num_layers, std::size_t input_dim, std::size_t hidden_dim, bool with_ln) {
  if (num_layers < 2) throw ConfigError(fmt::format("hm_lstm needs at least 2 layers, got {}", num_layers));
  layers.reserve(num_layers);
  for (std::size_t l = 0; l < num_layers; ++l) {
    const bool top = l + 1 == num_layers;
    layers.emplace_back(fmt::format("hm.{}", l), l == 0 ? input_dim : hidden_dim, hidden_dim, !top, !top, with_ln);
    readout.emplace_back(fmt::format("hm.readout.{}", l), Tensor<T>::matrix(hidden_dim, hidden_dim));
  }
  for (std::size_t l = 0; l < num_layers; ++l) {
    for (std::size_t k = 0; k < num_layers; ++k) {
      readout_gate.emplace_back(fmt::format("hm.readout_gate.{}.{}", l, k), Tensor<T>::matrix(1, hidden_dim));
    }
  }
}

template <class T>
std::vector<Parameter<T>*> HmLstmParams<T>::parameters() {
  std::vector<Parameter<T>*> out;
  for (auto& layer : layers) {
    auto ps = layer.parameters();
    out.insert(out.end(), ps.begin(), ps.end());
  }
  for (auto& p : readout) out.push_back(&p);
  for (auto& p : readout_gate) out.push_back(&p);
  return out;
}

template <class T>
typename HmLstmParams<T>::Bound HmLstmParams<T>::bind(Tape<T>& tape) {
  Bound b;
  for (auto& layer : layers) {
    LayerBound lb{bind_all(tape, layer.bottom_up), bind_all(tape, layer.recurrent), bind_all(tape, layer.bias),
                  {}, {}, {}, {}, {}, {}};
    if (layer.top_down) lb.top_down = bind_all(tape, *layer.top_down);
    if (layer.boundary_bottom_up) lb.boundary_bottom_up = tape.param(*layer.boundary_bottom_up);
    if (layer.boundary_recurrent) lb.boundary_recurrent = tape.param(*layer.boundary_recurrent);
    if (layer.boundary_top_down) lb.boundary_top_down = tape.param(*layer.boundary_top_down);
    if (layer.boundary_bias) lb.boundary_bias = tape.param(*layer.boundary_bias);
    if (layer.ln) {
      auto& ln = *layer.ln;
      lb.ln = std::array<typename LayerNormParams<T>::Bound, 4>{ln[0].bind(tape), ln[1].bind(tape), ln[2].bind(tape),
                                                                ln[3].bind(tape)};
    }
    b.layers.push_back(std::move(lb));
  }
  for (auto& p : readout) b.readout.push_back(tape.param(p));
  for (auto& p : readout_gate) b.readout_gate.push_back(tape.param(p));
  return b;
}

template <class T>
HmLstmState<T> hm_lstm_initial_state(Tape<T>& tape, std::size_t layers, std::size_t rows, std::size_t hidden_dim) {
  HmLstmState<T> s;
  for (std::size_t l = 0; l < layers; ++l) {
    s.h.push_back(tape.constant(Tensor<T>::matrix(rows, hidden_dim)));
    s.c.push_back(tape.constant(Tensor<T>::matrix(rows, hidden_dim)));
    s.z.push_back(zero_column(tape, rows));
  }
  s.ops.assign(layers, std::vector<HmOp>(rows, HmOp::update));
  return s;
}

template <class T>
HmLstmState<T> hm_lstm_step(const typename HmLstmParams<T>::Bound& params, Var<T> e, const HmLstmState<T>& state,
                            std::span<const std::optional<std::type_identity_t<T>>> forced) {
  const std::size_t num_layers = params.layers.size();
  if (num_layers < 2) throw ConfigError("hm_lstm needs at least 2 layers");
  if (state.h.size() != num_layers || state.c.size() != num_layers || state.z.size() != num_layers) {
    throw DimensionError("hm_lstm_step: state does not match layer count");
  }
  Tape<T>& tape = *e.tape;
  const std::size_t rows = e.value().rows();
  HmLstmState<T> next;
  next.ops.assign(num_layers, std::vector<HmOp>(rows, HmOp::update));

  Var<T> below_boundary = tape.constant(Tensor<T>::matrix(rows, 1, T{1}));
  Var<T> below = e;
  for (std::size_t l = 0; l < num_layers; ++l) {
    const auto& lb = params.layers[l];
    const Var<T> h_prev = state.h[l];
    const Var<T> c_prev = state.c[l];
    const Var<T> own_boundary = state.z[l];

    auto path_sum = [&](Var<T> w_bottom_up, Var<T> w_recurrent, std::optional<Var<T>> w_top_down) {
      Var<T> s = matmul_nt(below, w_bottom_up);
      if (l > 0) s = scale_rows(s, below_boundary);
      s = s + matmul_nt(h_prev, w_recurrent);
      if (w_top_down) s = s + scale_rows(matmul_nt(state.h[l + 1], *w_top_down), own_boundary);
      return s;
    };

    std::array<Var<T>, 4> gates;
    for (std::size_t k = 0; k < 4; ++k) {
      Var<T> s = path_sum(lb.bottom_up[k], lb.recurrent[k],
                          lb.top_down ? std::optional<Var<T>>((*lb.top_down)[k]) : std::nullopt);
      if (lb.ln) s = layer_norm<T>((*lb.ln)[k], s);
      s = add_row_bias(s, lb.bias[k]);
      gates[k] = k == 3 ? tanh(s) : sigmoid(s);
    }

    Var<T> boundary;
    if (l < forced.size() && forced[l] && lb.boundary_bias) {
      boundary = tape.constant(Tensor<T>::matrix(rows, 1, *forced[l] >= T{0.5} ? T{1} : T{0}));
    } else if (lb.boundary_bias) {
      Var<T> logit = add_row_bias(path_sum(*lb.boundary_bottom_up, *lb.boundary_recurrent, lb.boundary_top_down),
                                  *lb.boundary_bias);
      boundary = binarize_ste(hard_sigmoid(logit));
    } else {
      boundary = zero_column(tape, rows);
    }

    const Var<T> fresh = gates[1] * gates[3];
    const Var<T> updated = gates[0] * c_prev + fresh;
    const Var<T> c = hm_blend(fresh, updated, c_prev, own_boundary, below_boundary);
    const Var<T> h_candidate = gates[2] * tanh(c);
    const Var<T> h = hm_blend(h_candidate, h_candidate, h_prev, own_boundary, below_boundary);

    const auto& fv = own_boundary.value();
    const auto& lv = below_boundary.value();
    for (std::size_t r = 0; r < rows; ++r) {
      next.ops[l][r] = fv[r] != T{0} ? HmOp::flush : (lv[r] != T{0} ? HmOp::update : HmOp::copy);
    }
    next.h.push_back(h);
    next.c.push_back(c);
    next.z.push_back(boundary);
    below = h;
    below_boundary = boundary;
  }
  return next;
}

template <class T>
Var<T> hm_lstm_readout(const typename HmLstmParams<T>::Bound& params, const HmLstmState<T>& state) {
  const std::size_t num_layers = params.layers.size();
  std::optional<Var<T>> total;
  for (std::size_t l = 0; l < num_layers; ++l) {
    std::optional<Var<T>> gate_logit;
    for (std::size_t k = 0; k < num_layers; ++k) {
      Var<T> term = matmul_nt(state.h[k], params.readout_gate[l * num_layers + k]);
      gate_logit = gate_logit ? *gate_logit + term : term;
    }
    Var<T> contribution = scale_rows(matmul_nt(state.h[l], params.readout[l]), sigmoid(*gate_logit));
    total = total ? *total + contribution : contribution;
  }
  return tanh(*total);
}

// ---------------------------------------------------------------------------

template <class T>
OutputProjection<T>::OutputProjection(bool tied_, std::size_t num_items, std::size_t hidden_dim,
                                      std::size_t embedding_dim)
    : tied(tied_) {
  if (tied) {
    if (embedding_dim != hidden_dim) {
      throw ConfigError(
          fmt::format("tied output requires N_E == N_H, got N_E={} N_H={}", embedding_dim, hidden_dim));
    }
  } else {
    weight.emplace("output.weight", Tensor<T>::matrix(num_items, hidden_dim));
  }
}

#define SEQREC_INSTANTIATE_LAYERS(T)                                                                          \
  template void init_scaled_uniform(Tensor<T>&, Rng&);                                                        \
  template struct LayerNormParams<T>;                                                                         \
  template std::vector<T> layer_norm_vector(std::span<const T>, std::span<const T>, std::span<const T>, T);   \
  template struct EmbeddingTable<T>;                                                                          \
  template struct GruCellParams<T>;                                                                           \
  template Var<T> gru_step<T>(const GruCellParams<T>::Bound&, Var<T>, Var<T>);                                \
  template std::vector<Var<T>> stacked_step<T>(std::span<const GruCellParams<T>::Bound>, Var<T>,              \
                                               std::span<const Var<T>>);                                      \
  template struct HmLstmLayerParams<T>;                                                                       \
  template struct HmLstmParams<T>;                                                                            \
  template HmLstmState<T> hm_lstm_initial_state(Tape<T>&, std::size_t, std::size_t, std::size_t);             \
  template HmLstmState<T> hm_lstm_step<T>(const HmLstmParams<T>::Bound&, Var<T>, const HmLstmState<T>&,       \
                                          std::span<const std::optional<T>>);                                 \
  template Var<T> hm_lstm_readout<T>(const HmLstmParams<T>::Bound&, const HmLstmState<T>&);                   \
  template struct OutputProjection<T>;

SEQREC_INSTANTIATE_LAYERS(float)
SEQREC_INSTANTIATE_LAYERS(double)

}  // namespace seqrec
