// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <span>

#include "seqrec/tape.hpp"

namespace seqrec {

using LossBuilder = std::function<Var<double>(Tape<double>&)>;

/// Compares taped gradients against central differences.
///
/// `forward` must build the whole computation on the tape it is given and
/// return the scalar loss. Returns the maximum over all parameter entries of
/// |analytic - numeric| / max(1, |analytic|, |numeric|). Parameter values are
/// restored and gradients left zeroed on return.
double gradient_check(const LossBuilder& forward, std::span<Parameter<double>* const> params, double eps = 1e-5);

}  // namespace seqrec
