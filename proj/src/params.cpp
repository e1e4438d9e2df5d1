// SPDX-License-Identifier: Apache-2.0
#include "seqrec/params.hpp"

#include "seqrec/errors.hpp"

namespace seqrec {

namespace {

struct KindName {
  ModelKind kind;
  const char* name;
};

constexpr KindName kNames[] = {
    {ModelKind::gru, "gru"},
    {ModelKind::gru_re, "gru+re"},
    {ModelKind::gru_ln, "gru+ln"},
    {ModelKind::gru_re_ln, "gru+re+ln"},
    {ModelKind::stacked_gru_re_ln, "stacked_gru+re+ln"},
    {ModelKind::hm_lstm_re_ln, "hm_lstm+re+ln"},
    {ModelKind::coevent_mf, "coevent_mf"},
    {ModelKind::coevent_mf_re, "coevent_mf+re"},
    {ModelKind::pop, "pop"},
    {ModelKind::item_knn, "item_knn"},
};

}  // namespace

std::string to_string(ModelKind kind) {
  for (const auto& k : kNames) {
    if (k.kind == kind) return k.name;
  }
  return "?";
}

ModelKind parse_model_kind(const std::string& name) {
  for (const auto& k : kNames) {
    if (name == k.name) return k.kind;
  }
  throw ConfigError("unknown model kind: " + name);
}

const std::vector<ModelKind>& all_model_kinds() {
  static const std::vector<ModelKind> kinds = [] {
    std::vector<ModelKind> v;
    for (const auto& k : kNames) v.push_back(k.kind);
    return v;
  }();
  return kinds;
}

bool is_neural(ModelKind kind) { return kind != ModelKind::pop && kind != ModelKind::item_knn; }

ModelConfig model_config_for(ModelKind kind, std::size_t num_items, const ModelDims& dims) {
  ModelConfig c;
  c.num_items = num_items;
  c.embedding_dim = dims.embedding_dim;
  c.hidden_dim = dims.hidden_dim;
  switch (kind) {
    case ModelKind::gru: break;
    case ModelKind::gru_re: c.tied_output = true; break;
    case ModelKind::gru_ln: c.layer_norm = true; break;
    case ModelKind::gru_re_ln: c.tied_output = c.layer_norm = true; break;
    case ModelKind::stacked_gru_re_ln:
      c.tied_output = c.layer_norm = true;
      c.layers = dims.stacked_layers;
      break;
    case ModelKind::hm_lstm_re_ln:
      c.cell = CellKind::hm_lstm;
      c.tied_output = c.layer_norm = true;
      c.layers = dims.hm_layers;
      break;
    case ModelKind::coevent_mf:
    case ModelKind::coevent_mf_re:
      c.cell = CellKind::identity;
      c.hidden_dim = c.embedding_dim;
      c.tied_output = kind == ModelKind::coevent_mf_re;
      break;
    case ModelKind::pop:
    case ModelKind::item_knn:
      throw ConfigError(to_string(kind) + " is not a neural model");
  }
  c.validate();
  return c;
}

std::uint64_t count_params(const ModelConfig& config) {
  config.validate();
  const std::uint64_t n_o = config.num_items, n_e = config.embedding_dim, n_h = config.hidden_dim;
  const std::uint64_t layers = config.layers;
  std::uint64_t total = n_o * n_e;
  if (!config.tied_output) total += n_o * n_h;
  switch (config.cell) {
    case CellKind::identity: break;
    case CellKind::gru:
      for (std::uint64_t l = 0; l < layers; ++l) {
        const std::uint64_t in = l == 0 ? n_e : n_h;
        total += 3 * (n_h * in + n_h * n_h);
        if (config.layer_norm) total += 3 * 2 * n_h;
      }
      break;
    case CellKind::hm_lstm:
      for (std::uint64_t l = 0; l < layers; ++l) {
        const std::uint64_t in = l == 0 ? n_e : n_h;
        total += 4 * n_h * in + 4 * n_h * n_h + 4 * n_h;
        if (l + 1 < layers) total += 4 * n_h * n_h + (in + 2 * n_h + 1);
        if (config.layer_norm) total += 4 * 2 * n_h;
      }
      total += layers * n_h * n_h + layers * layers * n_h;
      break;
  }
  return total;
}

std::uint64_t count_params(ModelKind kind, std::size_t num_items, const ModelDims& dims) {
  if (!is_neural(kind)) return 0;
  return count_params(model_config_for(kind, num_items, dims));
}

}  // namespace seqrec
