// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include <catch_amalgamated.hpp>

#include "seqrec/errors.hpp"
#include "seqrec/model.hpp"
#include "seqrec/params.hpp"

using namespace seqrec;

namespace {

struct Row {
  ModelKind kind;
  double yoochoose;
  double internal;
};

// Reference counts in millions.
const Row kTable[] = {
    {ModelKind::coevent_mf, 7.5, 41.6},       {ModelKind::coevent_mf_re, 3.75, 20.8},
    {ModelKind::gru, 7.6, 41.7},              {ModelKind::gru_re, 3.8, 20.9},
    {ModelKind::gru_ln, 7.6, 41.7},           {ModelKind::gru_re_ln, 3.8, 20.9},
    {ModelKind::stacked_gru_re_ln, 3.9, 21.0}, {ModelKind::hm_lstm_re_ln, 4.0, 21.1},
};

constexpr std::size_t kYoochoose = 37483;
constexpr std::size_t kInternal = 208418;

}  // namespace

TEST_CASE("parameter counts match the reference counts within 0.1M") {
  for (const auto& row : kTable) {
    INFO(to_string(row.kind));
    const double y = static_cast<double>(count_params(row.kind, kYoochoose)) / 1e6;
    const double i = static_cast<double>(count_params(row.kind, kInternal)) / 1e6;
    CHECK(std::abs(y - row.yoochoose) < 0.1);
    CHECK(std::abs(i - row.internal) < 0.1);
  }
}

TEST_CASE("closed form agrees with instantiated models") {
  for (ModelKind kind : all_model_kinds()) {
    if (!is_neural(kind)) {
      CHECK(count_params(kind, 50) == 0);
      CHECK_THROWS_AS(model_config_for(kind, 50), ConfigError);
      continue;
    }
    for (std::size_t dim : {4, 7}) {
      for (std::size_t layers : {2, 3}) {
        INFO(to_string(kind) << " dim " << dim << " layers " << layers);
        const ModelDims dims{dim, dim, layers, layers};
        const auto cfg = model_config_for(kind, 23, dims);
        SequenceModel<double> m(cfg, 1);
        CHECK(m.parameter_count() == count_params(cfg));
      }
    }
  }
}

TEST_CASE("closed form with unequal widths") {
  ModelConfig cfg;
  cfg.num_items = 31;
  cfg.embedding_dim = 5;
  cfg.hidden_dim = 9;
  for (CellKind cell : {CellKind::gru, CellKind::hm_lstm}) {
    for (bool ln : {false, true}) {
      cfg.cell = cell;
      cfg.layers = cell == CellKind::hm_lstm ? 3 : 2;
      cfg.layer_norm = ln;
      SequenceModel<double> m(cfg, 2);
      CHECK(m.parameter_count() == count_params(cfg));
    }
  }
}

TEST_CASE("HM-LSTM two-layer recurrent block") {
  auto cfg = model_config_for(ModelKind::hm_lstm_re_ln, 1);
  // One tied item row of width 100 plus the recurrent block.
  CHECK(count_params(cfg) == 100 + 223101);
}

TEST_CASE("tying removes exactly N_O * N_H parameters") {
  const std::pair<ModelKind, ModelKind> pairs[] = {
      {ModelKind::gru, ModelKind::gru_re},
      {ModelKind::gru_ln, ModelKind::gru_re_ln},
      {ModelKind::coevent_mf, ModelKind::coevent_mf_re},
  };
  for (auto [owned, tied] : pairs) {
    for (std::size_t n : {kYoochoose, kInternal}) {
      CHECK(count_params(owned, n) - count_params(tied, n) == n * 100);
    }
  }
}

TEST_CASE("model kind names round trip") {
  for (ModelKind kind : all_model_kinds()) CHECK(parse_model_kind(to_string(kind)) == kind);
  CHECK_THROWS_AS(parse_model_kind("lstm"), ConfigError);
}
