// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "seqrec/layers.hpp"

namespace seqrec {

enum class ModelKind {
  gru,
  gru_re,
  gru_ln,
  gru_re_ln,
  stacked_gru_re_ln,
  hm_lstm_re_ln,
  coevent_mf,
  coevent_mf_re,
  pop,
  item_knn,
};

/// CLI names: gru, gru+re, gru+ln, gru+re+ln, stacked_gru+re+ln,
/// hm_lstm+re+ln, coevent_mf, coevent_mf+re, pop, item_knn.
std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& name);
const std::vector<ModelKind>& all_model_kinds();
bool is_neural(ModelKind kind);

struct ModelDims {
  std::size_t embedding_dim = 100;
  std::size_t hidden_dim = 100;
  std::size_t stacked_layers = 2;
  std::size_t hm_layers = 2;
};

/// Network configuration of a neural kind. Throws ConfigError for POP/KNN.
ModelConfig model_config_for(ModelKind kind, std::size_t num_items, const ModelDims& dims = {});

/// Trainable parameter count from the layer shapes alone.
std::uint64_t count_params(const ModelConfig& config);
/// POP and Item-KNN have no trainable parameters and count as 0.
std::uint64_t count_params(ModelKind kind, std::size_t num_items, const ModelDims& dims = {});

}  // namespace seqrec
