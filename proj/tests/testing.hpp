// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>

#include "seqrec/random.hpp"
#include "seqrec/tape.hpp"

namespace seqrec::testing {

inline Tensor<double> random_matrix(Rng& rng, std::size_t rows, std::size_t cols, double lo = -1.0, double hi = 1.0) {
  auto t = Tensor<double>::matrix(rows, cols);
  for (auto& v : t.values()) v = uniform_real(rng, lo, hi);
  return t;
}

inline Tensor<double> random_vector(Rng& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
  Tensor<double> t(Shape{n});
  for (auto& v : t.values()) v = uniform_real(rng, lo, hi);
  return t;
}

inline Parameter<double> random_param(Rng& rng, const std::string& name, std::size_t rows, std::size_t cols) {
  return Parameter<double>(name, random_matrix(rng, rows, cols));
}

/// Scalar projection sum(x ⊙ R) with a fixed random R, so every output entry
/// receives a distinct upstream gradient.
inline Var<double> project(Var<double> x, std::uint64_t seed) {
  Rng rng(seed);
  auto r = x.value();
  for (auto& v : r.values()) v = uniform_real(rng, -1.0, 1.0);
  return sum(x * x.tape->constant(std::move(r)));
}

}  // namespace seqrec::testing
