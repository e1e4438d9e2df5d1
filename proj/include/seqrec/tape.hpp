// SPDX-License-Identifier: Apache-2.0
#pragma once

// Reverse-mode differentiation over dense tensors.
//
// A Tape records every forward operation together with a closure that
// propagates the output adjoint to the operands. Parameters enter the tape by
// reference; their adjoints accumulate straight into Parameter::grad.

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

#include "seqrec/tensor.hpp"

namespace seqrec {

template <class T>
class Tape;

/// Handle to a value recorded on a tape.
template <class T>
struct Var {
  Tape<T>* tape = nullptr;
  std::size_t id = 0;

  const Tensor<T>& value() const { return tape->value(*this); }
};

template <class T>
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const Tensor<T>& out_value, const Tensor<T>& out_grad)>;

  /// With record_gradients == false no closures are kept (inference mode).
  explicit Tape(bool record_gradients = true) : record_(record_gradients) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var<T> constant(Tensor<T> value);
  Var<T> param(Parameter<T>& p);

  const Tensor<T>& value(Var<T> v) const;
  bool requires_grad(Var<T> v) const { return nodes_.at(v.id).requires_grad; }
  bool records_gradients() const { return record_; }
  std::size_t size() const { return nodes_.size(); }

  /// Accumulates d(loss)/d(parameter) into every Parameter on the tape.
  /// Returns the number of recorded nodes replayed.
  std::size_t backward(Var<T> loss);

  /// Records an operation result. `fn` is kept only if some input needs a gradient.
  Var<T> record(Tensor<T> value, std::initializer_list<Var<T>> inputs, BackwardFn fn);

  /// Gradient buffer of a node, zero-initialised on first access.
  Tensor<T>& grad(Var<T> v);

  void check_owned(Var<T> v) const;

 private:
  struct Node {
    Tensor<T> value;
    const Tensor<T>* ref = nullptr;
    Parameter<T>* param = nullptr;
    Tensor<T> grad;
    bool has_grad = false;
    bool requires_grad = false;
    BackwardFn backward;
  };

  bool record_;
  std::deque<Node> nodes_;  // stable references across push_back
};

// ---------------------------------------------------------------------------
// Operations. All binary elementwise operations require identical shapes;
// add_row_bias is the only broadcasting operation.

template <class T> Var<T> matmul(Var<T> a, Var<T> b);        // a[m×k] · b[k×n]
template <class T> Var<T> matmul_nt(Var<T> a, Var<T> b);     // a[m×k] · b[n×k]ᵀ
template <class T> Var<T> add(Var<T> a, Var<T> b);
template <class T> Var<T> sub(Var<T> a, Var<T> b);
template <class T> Var<T> mul(Var<T> a, Var<T> b);
template <class T> Var<T> sigmoid(Var<T> x);
template <class T> Var<T> tanh(Var<T> x);
template <class T> Var<T> one_minus(Var<T> x);
template <class T> Var<T> scale(Var<T> x, T factor);
template <class T> Var<T> sum(Var<T> x);
/// x[m×n] + bias[n] added to every row.
template <class T> Var<T> add_row_bias(Var<T> x, Var<T> bias);
/// x[m×n] with row i multiplied by s[m×1](i).
template <class T> Var<T> scale_rows(Var<T> x, Var<T> s);
/// Rows of table[v×n] selected by index; adjoints scatter into those rows only.
template <class T> Var<T> gather_rows(Var<T> table, std::span<const std::uint32_t> indices);
/// Row-wise softmax with max subtraction.
template <class T> Var<T> softmax(Var<T> x);
/// Row-wise gain ⊙ (x − mean) / sqrt(var + eps) + bias, population variance.
template <class T> Var<T> layer_norm(Var<T> x, Var<T> gain, Var<T> bias, T eps);
/// −Σ_rows log softmax(logits)[row, target[row]] over rows with mask != 0.
template <class T>
Var<T> softmax_nll(Var<T> logits, std::span<const std::uint32_t> targets, std::span<const std::uint8_t> mask);
/// clamp((x + 1) / 2, 0, 1).
template <class T> Var<T> hard_sigmoid(Var<T> x);
/// 1 where x >= 0.5 else 0; the backward pass is the identity (straight-through).
template <class T> Var<T> binarize_ste(Var<T> x);
/// Per-row choice between three candidates driven by binary indicators
/// flush[m×1] and below[m×1]:
///   flush            -> a
///   !flush && below  -> b
///   !flush && !below -> c
/// The forward pass copies the selected row verbatim. The backward pass
/// differentiates the polynomial f·a + (1−f)·l·b + (1−f)(1−l)·c.
template <class T> Var<T> hm_blend(Var<T> a, Var<T> b, Var<T> c, Var<T> flush, Var<T> below);

template <class T> Var<T> operator+(Var<T> a, Var<T> b) { return add(a, b); }
template <class T> Var<T> operator-(Var<T> a, Var<T> b) { return sub(a, b); }
template <class T> Var<T> operator*(Var<T> a, Var<T> b) { return mul(a, b); }

/// Numerically stable softmax of one vector.
template <class T>
void softmax_inplace(std::span<T> values);

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace seqrec
