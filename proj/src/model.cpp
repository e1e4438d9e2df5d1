// SPDX-License-Identifier: Apache-2.0
#include "seqrec/model.hpp"

#include <fmt/format.h>

namespace seqrec {

namespace {

template <class T>
std::vector<GruCellParams<T>> make_gru(const ModelConfig& c) {
  std::vector<GruCellParams<T>> out;
  if (c.cell != CellKind::gru) return out;
  out.reserve(c.layers);
  for (std::size_t l = 0; l < c.layers; ++l) {
    out.emplace_back(fmt::format("gru.{}", l), l == 0 ? c.embedding_dim : c.hidden_dim, c.hidden_dim, c.layer_norm);
  }
  return out;
}

template <class T>
std::optional<HmLstmParams<T>> make_hm(const ModelConfig& c) {
  if (c.cell != CellKind::hm_lstm) return std::nullopt;
  return HmLstmParams<T>(c.layers, c.embedding_dim, c.hidden_dim, c.layer_norm);
}

const ModelConfig& checked(const ModelConfig& c) {
  c.validate();
  return c;
}

}  // namespace

template <class T>
SequenceModel<T>::SequenceModel(const ModelConfig& config, std::uint64_t seed)
    : config_(checked(config)),
      embedding_(config.num_items, config.embedding_dim),
      gru_(make_gru<T>(config)),
      hm_(make_hm<T>(config)),
      output_(config.tied_output, config.num_items, config.hidden_dim, config.embedding_dim) {
  Rng rng(seed);
  for (auto* p : parameters()) {
    if (p->value.rank() == 2) init_scaled_uniform(p->value, rng);
  }
}

template <class T>
std::vector<Parameter<T>*> SequenceModel<T>::parameters() {
  std::vector<Parameter<T>*> out{&embedding_.weight};
  for (auto& cell : gru_) {
    auto ps = cell.parameters();
    out.insert(out.end(), ps.begin(), ps.end());
  }
  if (hm_) {
    auto ps = hm_->parameters();
    out.insert(out.end(), ps.begin(), ps.end());
  }
  if (output_.weight) out.push_back(&*output_.weight);
  return out;
}

template <class T>
std::vector<const Parameter<T>*> SequenceModel<T>::parameters() const {
  auto ps = const_cast<SequenceModel*>(this)->parameters();
  return {ps.begin(), ps.end()};
}

template <class T>
std::size_t SequenceModel<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto* p : parameters()) n += p->value.size();
  return n;
}

template <class T>
void SequenceModel<T>::zero_grad() {
  for (auto* p : parameters()) p->zero_grad();
}

template <class T>
Parameter<T>* SequenceModel<T>::find(const std::string& name) {
  for (auto* p : parameters()) {
    if (p->name == name) return p;
  }
  return nullptr;
}

template <class T>
typename SequenceModel<T>::Bound SequenceModel<T>::bind(Tape<T>& tape) {
  Bound b{tape.param(embedding_.weight), {}, {}, {}};
  b.projection = output_.tied ? b.embedding : tape.param(*output_.weight);
  for (auto& cell : gru_) b.gru.push_back(cell.bind(tape));
  if (hm_) b.hm = hm_->bind(tape);
  return b;
}

template <class T>
typename SequenceModel<T>::State SequenceModel<T>::initial_state(Tape<T>& tape, std::size_t rows) const {
  State s;
  for (std::size_t l = 0; l < gru_.size(); ++l) {
    s.hidden.push_back(tape.constant(Tensor<T>::matrix(rows, config_.hidden_dim)));
  }
  if (hm_) s.hm = hm_lstm_initial_state(tape, config_.layers, rows, config_.hidden_dim);
  return s;
}

template <class T>
Var<T> SequenceModel<T>::advance(const Bound& bound, std::span<const ItemIndex> items, State& state) const {
  Var<T> e = embed(bound.embedding, items);
  switch (config_.cell) {
    case CellKind::gru:
      state.hidden = stacked_step<T>(bound.gru, e, state.hidden);
      return state.hidden.back();
    case CellKind::hm_lstm:
      *state.hm = hm_lstm_step<T>(*bound.hm, e, *state.hm);
      return hm_lstm_readout<T>(*bound.hm, *state.hm);
    case CellKind::identity:
      return e;
  }
  throw ConfigError("unknown cell kind");
}

template <class T>
Var<T> SequenceModel<T>::logits(const Bound& bound, Var<T> representation) const {
  return output_logits(representation, bound.projection);
}

template <class T>
std::vector<Var<T>> SequenceModel<T>::unroll(Tape<T>& tape, const Batch& batch) {
  std::vector<Var<T>> out;
  if (batch.steps < 2) return out;
  Bound bound = bind(tape);
  State state = initial_state(tape, batch.rows);
  out.reserve(batch.steps - 1);
  for (std::size_t t = 0; t + 1 < batch.steps; ++t) {
    const auto items = batch.column(t);
    out.push_back(logits(bound, advance(bound, items, state)));
  }
  return out;
}

template <class T>
typename SequenceModel<T>::Snapshot SequenceModel<T>::initial_snapshot(std::size_t rows) const {
  Snapshot s;
  for (std::size_t l = 0; l < gru_.size(); ++l) s.hidden.push_back(Tensor<T>::matrix(rows, config_.hidden_dim));
  if (hm_) {
    for (std::size_t l = 0; l < config_.layers; ++l) {
      s.h.push_back(Tensor<T>::matrix(rows, config_.hidden_dim));
      s.c.push_back(Tensor<T>::matrix(rows, config_.hidden_dim));
      s.z.push_back(Tensor<T>::matrix(rows, 1));
    }
  }
  return s;
}

template <class T>
Tensor<T> SequenceModel<T>::step_inference(std::span<const ItemIndex> items, Snapshot& snapshot) {
  Tape<T> tape(false);
  Bound bound = bind(tape);
  State state;
  for (auto& h : snapshot.hidden) state.hidden.push_back(tape.constant(std::move(h)));
  if (hm_) {
    HmLstmState<T> hs;
    for (std::size_t l = 0; l < snapshot.h.size(); ++l) {
      hs.h.push_back(tape.constant(std::move(snapshot.h[l])));
      hs.c.push_back(tape.constant(std::move(snapshot.c[l])));
      hs.z.push_back(tape.constant(std::move(snapshot.z[l])));
    }
    state.hm = std::move(hs);
  }
  Var<T> out = logits(bound, advance(bound, items, state));
  for (std::size_t l = 0; l < state.hidden.size(); ++l) snapshot.hidden[l] = state.hidden[l].value();
  if (state.hm) {
    for (std::size_t l = 0; l < state.hm->h.size(); ++l) {
      snapshot.h[l] = state.hm->h[l].value();
      snapshot.c[l] = state.hm->c[l].value();
      snapshot.z[l] = state.hm->z[l].value();
    }
  }
  return out.value();
}

template class SequenceModel<float>;
template class SequenceModel<double>;

}  // namespace seqrec
