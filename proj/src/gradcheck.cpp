// SPDX-License-Identifier: Apache-2.0
#include "seqrec/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <fmt/format.h>

namespace seqrec {

namespace {

double evaluate(const LossBuilder& forward) {
  Tape<double> tape(false);
  const double loss = forward(tape).value().item();
  if (!std::isfinite(loss)) throw CheckError("gradient check: non-finite loss");
  return loss;
}

}  // namespace

double gradient_check(const LossBuilder& forward, std::span<Parameter<double>* const> params, double eps) {
  if (!(eps >= 1e-6 && eps <= 1e-4)) throw CheckError(fmt::format("gradient check: eps {} outside [1e-6, 1e-4]", eps));
  for (auto* p : params) p->zero_grad();
  {
    Tape<double> tape;
    auto loss = forward(tape);
    if (!std::isfinite(loss.value().item())) throw CheckError("gradient check: non-finite loss");
    tape.backward(loss);
  }
  std::vector<Tensor<double>> analytic;
  analytic.reserve(params.size());
  for (auto* p : params) analytic.push_back(p->grad);

  double worst = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& value = params[k]->value;
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double saved = value[i];
      value[i] = saved + eps;
      const double up = evaluate(forward);
      value[i] = saved - eps;
      const double down = evaluate(forward);
      value[i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic[k][i];
      const double err = std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
      worst = std::max(worst, err);
    }
  }
  for (auto* p : params) p->zero_grad();
  return worst;
}

}  // namespace seqrec
