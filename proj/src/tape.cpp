// SPDX-License-Identifier: Apache-2.0
#include "seqrec/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Core>
#include <fmt/format.h>

namespace seqrec {

namespace {

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <class T>
Eigen::Map<const RowMat<T>> as_matrix(const Tensor<T>& t) {
  return {t.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols())};
}

template <class T>
Eigen::Map<RowMat<T>> as_matrix(Tensor<T>& t) {
  return {t.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols())};
}

template <class T>
void require_same_shape(const char* op, const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError(
        fmt::format("{}: shape mismatch {} vs {}", op, shape_to_string(a.shape()), shape_to_string(b.shape())));
  }
}

template <class T>
void require_same_tape(Var<T> a, Var<T> b) {
  if (a.tape == nullptr || a.tape != b.tape) throw UsageError("operands recorded on different tapes");
}

template <class T>
void require_column(const char* op, const Tensor<T>& s, std::size_t rows) {
  if (s.rank() != 2 || s.rows() != rows || s.cols() != 1) {
    throw DimensionError(fmt::format("{}: expected a [{}x1] column, got {}", op, rows, shape_to_string(s.shape())));
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Tape

template <class T>
void Tape<T>::check_owned(Var<T> v) const {
  if (v.tape != this || v.id >= nodes_.size()) throw UsageError("value was not recorded on this tape");
}

template <class T>
Var<T> Tape<T>::constant(Tensor<T> value) {
  Node node;
  node.value = std::move(value);
  nodes_.push_back(std::move(node));
  return {this, nodes_.size() - 1};
}

template <class T>
Var<T> Tape<T>::param(Parameter<T>& p) {
  Node node;
  node.ref = &p.value;
  node.param = &p;
  node.requires_grad = record_;
  nodes_.push_back(std::move(node));
  return {this, nodes_.size() - 1};
}

template <class T>
const Tensor<T>& Tape<T>::value(Var<T> v) const {
  check_owned(v);
  const Node& n = nodes_[v.id];
  return n.ref ? *n.ref : n.value;
}

template <class T>
Var<T> Tape<T>::record(Tensor<T> value, std::initializer_list<Var<T>> inputs, BackwardFn fn) {
  Node node;
  node.value = std::move(value);
  if (record_) {
    for (const auto& in : inputs) {
      check_owned(in);
      node.requires_grad = node.requires_grad || nodes_[in.id].requires_grad;
    }
    if (node.requires_grad) node.backward = std::move(fn);
  }
  nodes_.push_back(std::move(node));
  return {this, nodes_.size() - 1};
}

template <class T>
Tensor<T>& Tape<T>::grad(Var<T> v) {
  check_owned(v);
  Node& n = nodes_[v.id];
  if (n.param) {
    n.has_grad = true;
    return n.param->grad;
  }
  if (!n.has_grad) {
    n.grad = Tensor<T>(n.value.shape(), T{0});
    n.has_grad = true;
  }
  return n.grad;
}

template <class T>
std::size_t Tape<T>::backward(Var<T> loss) {
  check_owned(loss);
  if (!record_) throw UsageError("backward on a tape recorded without gradients");
  if (value(loss).size() != 1) {
    throw UsageError("backward requires a scalar loss, got shape " + shape_to_string(value(loss).shape()));
  }
  for (auto& n : nodes_) {
    if (!n.param) {
      n.grad = Tensor<T>();
      n.has_grad = false;
    }
  }
  if (!nodes_[loss.id].requires_grad) return 0;
  grad(loss)[0] += T{1};
  std::size_t visited = 0;
  for (std::size_t i = nodes_.size(); i-- > 0;) {
    ++visited;
    Node& n = nodes_[i];
    if (n.backward && n.has_grad) n.backward(*this, n.value, n.grad);
  }
  return visited;
}

// ---------------------------------------------------------------------------
// Operations

template <class T>
Var<T> matmul(Var<T> a, Var<T> b) {
  require_same_tape(a, b);
  const auto& av = a.value();
  const auto& bv = b.value();
  if (av.cols() != bv.rows()) {
    throw DimensionError(fmt::format("matmul: inner dimensions differ, {} x {}", shape_to_string(av.shape()),
                                     shape_to_string(bv.shape())));
  }
  auto out = Tensor<T>::matrix(av.rows(), bv.cols());
  as_matrix(out).noalias() = as_matrix(av) * as_matrix(bv);
  return a.tape->record(std::move(out), {a, b}, [a, b](Tape<T>& tape, const Tensor<T>&, const Tensor<T>& g) {
    if (tape.requires_grad(a)) as_matrix(tape.grad(a)).noalias() += as_matrix(g) * as_matrix(b.value()).transpose();
    if (tape.requires_grad(b)) as_matrix(tape.grad(b)).noalias() += as_matrix(a.value()).transpose() * as_matrix(g);
  });
}

template <class T>
Var<T> matmul_nt(Var<T> a, Var<T> b) {
  require_same_tape(a, b);
  const auto& av = a.value();
  const auto& bv = b.value();
  if (av.cols() != bv.cols()) {
    throw DimensionError(fmt::format("matmul_nt: inner dimensions differ, {} x {}^T", shape_to_string(av.shape()),
                                     shape_to_string(bv.shape())));
  }
  auto out = Tensor<T>::matrix(av.rows(), bv.rows());
  as_matrix(out).noalias() = as_matrix(av) * as_matrix(bv).transpose();
  return a.tape->record(std::move(out), {a, b}, [a, b](Tape<T>& tape, const Tensor<T>&, const Tensor<T>& g) {
    if (tape.requires_grad(a)) as_matrix(tape.grad(a)).noalias() += as_matrix(g) * as_matrix(b.value());
    if (tape.requires_grad(b)) as_matrix(tape.grad(b)).noalias() += as_matrix(g).transpose() * as_matrix(a.value());
  });
}

template <class T>
Var<T> add(Var<T> a, Var<T> b) {
  require_same_tape(a, b);
  require_same_shape("add", a.value(), b.value());
  Tensor<T> out = a.value();
  const auto& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return a.tape->record(std::move(out), {a, b}, [a, b](Tape<T>& tape, const Tensor<T>&, const Tensor<T>& g) {
    for (auto v : {a, b}) {
      if (!tape.requires_grad(v)) continue;
      auto& gv = tape.grad(v);
      for (std::size_t i = 0; i < g.size(); ++i) gv[i] += g[i];
    }
  });
}

template <class T>
Var<T> sub(Var<T> a, Var<T> b) {
  require_same_tape(a, b);
  require_same_shape("sub", a.value(), b.value());
  Tensor<T> out = a.value();
  const auto& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  return a.tape->record(std::move(out), {a, b}, [a, b](Tape<T>& tape, const Tensor<T>&, const Tensor<T>& g) {
    if (tape.requires_grad(a)) {
      auto& ga = tape.grad(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (tape.requires_grad(b)) {
      auto& gb = tape.grad(b);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
}

template <class T>
Var<T> mul(Var<T> a, Var<T> b) {
  require_same_tape(a, b);
  require_same_shape("mul", a.value(), b.value());
  Tensor<T> out = a.value();
  const auto& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return a.tape->record(std::move(out), {a, b}, [a, b](Tape<T>& tape, const Tensor<T>&, const Tensor<T>& g) {
    if (tape.requires_grad(a)) {
      auto& ga = tape.grad(a);
      const auto& bv = b.value();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    }
    if (tape.requires_grad(b)) {
      auto& gb = tape.grad(b);
      const auto& av = a.value();
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
    }
  });
}

template <class T>
Var<T> sigmoid(Var<T> x) {
  Tensor<T> out = x.value();
  for (auto& v : out.values()) v = T{1} / (T{1} + std::exp(-v));
  return x.tape->record(std::move(out), {x}, [x](Tape<T>& tape, const Tensor<T>& y, const Tensor<T>& g) {
    auto& gx = tape.grad(x);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * y[i] * (T{1} - y[i]);
  });
}

template <class T>
Var<T> tanh(Var<T> x) {
  Tensor<T> out = x.value();
  for (auto& v : out.values()) v = std::tanh(v);
  return x.tape->record(std::move(out), {x}, [x](Tape<T>& tape, const Tensor<T>& y, const Tensor<T>& g) {
    auto& gx = tape.grad(x);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (T{1} - y[i] * y[i]);
  });
}

template <class T>
Var<T> one_minus(Var<T> x) {
  Tensor<T> out = x.value();
  for (auto& v : out.values()) v = T{1} - v;
  return x.tape->record(std::move(out), {x}, [x](Tape<T>& tape, const Tensor<T>&, const Tensor<T>& g) {
    auto& gx = tape.grad(x);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] -= g[i];
  });
}

template <class T>
Var<T> scale(Var<T> x, T factor) {
  Tensor<T> out = x.value();
  for (auto& v : out.values()) v *= factor;
  return x.tape->record(std::move(out), {x}, [x, factor](Tape<T>& tape, const Tensor<T>&, const Tensor<T>& g) {
    auto& gx = tape.grad(x);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * factor;
  });
}

template <class T>
Var<T> sum(Var<T> x) {
  T total{0};
  for (auto v : x.value().values()) total += v;
  return x.tape->record(Tensor<T>::scalar(total), {x}, [x](Tape<T>& tape, const Tensor<T>&, const Tensor<T>& g) {
    auto& gx = tape.grad(x);
    for (auto& v : gx.values()) v += g[0];
  });
}

template <class T>
Var<T> add_row_bias(Var<T> x, Var<T> bias) {
  require_same_tape(x, bias);
  const auto& xv = x.value();
  const auto& bv = bias.value();
  if (bv.size() != xv.cols() || bv.rows() != 1) {
    throw DimensionError(fmt::format("add_row_bias: bias {} does not match rows of {}", shape_to_string(bv.shape()),
                                     shape_to_string(xv.shape())));
  }
  Tensor<T> out = xv;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += bv[c];
  }
  return x.tape->record(std::move(out), {x, bias}, [x, bias](Tape<T>& tape, const Tensor<T>&, const Tensor<T>& g) {
    if (tape.requires_grad(x)) {
      auto& gx = tape.grad(x);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    }
    if (tape.requires_grad(bias)) {
      auto& gb = tape.grad(bias);
      for (std::size_t r = 0; r < g.rows(); ++r) {
        auto row = g.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) gb[c] += row[c];
      }
    }
  });
}

template <class T>
Var<T> scale_rows(Var<T> x, Var<T> s) {
  require_same_tape(x, s);
  const auto& xv = x.value();
  require_column("scale_rows", s.value(), xv.rows());
  const auto& sv = s.value();
  Tensor<T> out = xv;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    for (auto& v : out.row(r)) v *= sv[r];
  }
  return x.tape->record(std::move(out), {x, s}, [x, s](Tape<T>& tape, const Tensor<T>&, const Tensor<T>& g) {
    const auto& sv = s.value();
    if (tape.requires_grad(x)) {
      auto& gx = tape.grad(x);
      for (std::size_t r = 0; r < g.rows(); ++r) {
        auto gr = g.row(r);
        auto out = gx.row(r);
        for (std::size_t c = 0; c < gr.size(); ++c) out[c] += gr[c] * sv[r];
      }
    }
    if (tape.requires_grad(s)) {
      auto& gs = tape.grad(s);
      const auto& xv = x.value();
      for (std::size_t r = 0; r < g.rows(); ++r) {
        auto gr = g.row(r);
        auto xr = xv.row(r);
        T acc{0};
        for (std::size_t c = 0; c < gr.size(); ++c) acc += gr[c] * xr[c];
        gs[r] += acc;
      }
    }
  });
}

template <class T>
Var<T> gather_rows(Var<T> table, std::span<const std::uint32_t> indices) {
  const auto& tv = table.value();
  const std::size_t vocab = tv.rows();
  const std::size_t width = tv.cols();
  if (indices.empty()) throw DimensionError("gather_rows: empty index list");
  auto out = Tensor<T>::matrix(indices.size(), width);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= vocab) {
      throw VocabularyError(fmt::format("item index {} outside vocabulary of size {}", indices[i], vocab));
    }
    std::copy_n(tv.row(indices[i]).data(), width, out.row(i).data());
  }
  std::vector<std::uint32_t> idx(indices.begin(), indices.end());
  return table.tape->record(std::move(out), {table},
                            [table, idx = std::move(idx)](Tape<T>& tape, const Tensor<T>&, const Tensor<T>& g) {
                              auto& gt = tape.grad(table);
                              for (std::size_t i = 0; i < idx.size(); ++i) {
                                auto src = g.row(i);
                                auto dst = gt.row(idx[i]);
                                for (std::size_t c = 0; c < src.size(); ++c) dst[c] += src[c];
                              }
                            });
}

template <class T>
void softmax_inplace(std::span<T> values) {
  if (values.empty()) return;
  const T m = *std::max_element(values.begin(), values.end());
  T z{0};
  for (auto& v : values) {
    v = std::exp(v - m);
    z += v;
  }
  for (auto& v : values) v /= z;
}

template <class T>
Var<T> softmax(Var<T> x) {
  Tensor<T> out = x.value();
  for (std::size_t r = 0; r < out.rows(); ++r) softmax_inplace(out.row(r));
  return x.tape->record(std::move(out), {x}, [x](Tape<T>& tape, const Tensor<T>& y, const Tensor<T>& g) {
    auto& gx = tape.grad(x);
    for (std::size_t r = 0; r < y.rows(); ++r) {
      auto yr = y.row(r);
      auto gr = g.row(r);
      auto out = gx.row(r);
      T dot{0};
      for (std::size_t c = 0; c < yr.size(); ++c) dot += gr[c] * yr[c];
      for (std::size_t c = 0; c < yr.size(); ++c) out[c] += yr[c] * (gr[c] - dot);
    }
  });
}

template <class T>
Var<T> layer_norm(Var<T> x, Var<T> gain, Var<T> bias, T eps) {
  require_same_tape(x, gain);
  require_same_tape(x, bias);
  const auto& xv = x.value();
  const std::size_t rows = xv.rows();
  const std::size_t n = xv.cols();
  if (n < 2) throw DimensionError("layer_norm needs at least 2 features, got " + shape_to_string(xv.shape()));
  if (gain.value().size() != n || bias.value().size() != n) {
    throw DimensionError(fmt::format("layer_norm: gain {} / bias {} do not match {}", shape_to_string(gain.value().shape()),
                                     shape_to_string(bias.value().shape()), shape_to_string(xv.shape())));
  }
  const auto& gv = gain.value();
  const auto& bv = bias.value();
  Tensor<T> normalized(xv.shape());
  std::vector<T> inv_std(rows);
  Tensor<T> out(xv.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    auto xr = xv.row(r);
    T mean{0};
    for (auto v : xr) mean += v;
    mean /= static_cast<T>(n);
    T var{0};
    for (auto v : xr) var += (v - mean) * (v - mean);
    var /= static_cast<T>(n);
    inv_std[r] = T{1} / std::sqrt(var + eps);
    auto nr = normalized.row(r);
    auto orow = out.row(r);
    for (std::size_t c = 0; c < n; ++c) {
      nr[c] = (xr[c] - mean) * inv_std[r];
      orow[c] = gv[c] * nr[c] + bv[c];
    }
  }
  return x.tape->record(
      std::move(out), {x, gain, bias},
      [x, gain, bias, normalized = std::move(normalized), inv_std = std::move(inv_std)](
          Tape<T>& tape, const Tensor<T>&, const Tensor<T>& g) {
        const std::size_t n = g.cols();
        const auto& gv = gain.value();
        if (tape.requires_grad(x)) {
          auto& gx = tape.grad(x);
          std::vector<T> dn(n);
          for (std::size_t r = 0; r < g.rows(); ++r) {
            auto gr = g.row(r);
            auto nr = normalized.row(r);
            T mean_dn{0};
            T mean_dn_n{0};
            for (std::size_t c = 0; c < n; ++c) {
              dn[c] = gr[c] * gv[c];
              mean_dn += dn[c];
              mean_dn_n += dn[c] * nr[c];
            }
            mean_dn /= static_cast<T>(n);
            mean_dn_n /= static_cast<T>(n);
            auto out = gx.row(r);
            for (std::size_t c = 0; c < n; ++c) out[c] += inv_std[r] * (dn[c] - mean_dn - nr[c] * mean_dn_n);
          }
        }
        if (tape.requires_grad(gain)) {
          auto& gg = tape.grad(gain);
          for (std::size_t r = 0; r < g.rows(); ++r) {
            auto gr = g.row(r);
            auto nr = normalized.row(r);
            for (std::size_t c = 0; c < n; ++c) gg[c] += gr[c] * nr[c];
          }
        }
        if (tape.requires_grad(bias)) {
          auto& gb = tape.grad(bias);
          for (std::size_t r = 0; r < g.rows(); ++r) {
            auto gr = g.row(r);
            for (std::size_t c = 0; c < n; ++c) gb[c] += gr[c];
          }
        }
      });
}

template <class T>
Var<T> softmax_nll(Var<T> logits, std::span<const std::uint32_t> targets, std::span<const std::uint8_t> mask) {
  const auto& lv = logits.value();
  const std::size_t rows = lv.rows();
  const std::size_t vocab = lv.cols();
  if (targets.size() != rows || mask.size() != rows) {
    throw DimensionError(fmt::format("softmax_nll: {} logit rows, {} targets, {} mask entries", rows, targets.size(),
                                     mask.size()));
  }
  Tensor<T> probs(lv.shape());
  T total{0};
  for (std::size_t r = 0; r < rows; ++r) {
    if (!mask[r]) continue;
    if (targets[r] >= vocab) {
      throw VocabularyError(fmt::format("target {} outside vocabulary of size {}", targets[r], vocab));
    }
    auto lr = lv.row(r);
    auto pr = probs.row(r);
    const T m = *std::max_element(lr.begin(), lr.end());
    T z{0};
    for (std::size_t c = 0; c < vocab; ++c) {
      pr[c] = std::exp(lr[c] - m);
      z += pr[c];
    }
    for (auto& p : pr) p /= z;
    total += std::log(z) + m - lr[targets[r]];
  }
  std::vector<std::uint32_t> tgt(targets.begin(), targets.end());
  std::vector<std::uint8_t> msk(mask.begin(), mask.end());
  return logits.tape->record(
      Tensor<T>::scalar(total), {logits},
      [logits, probs = std::move(probs), tgt = std::move(tgt), msk = std::move(msk)](Tape<T>& tape, const Tensor<T>&,
                                                                                  const Tensor<T>& g) {
        auto& gl = tape.grad(logits);
        const T scale = g[0];
        for (std::size_t r = 0; r < msk.size(); ++r) {
          if (!msk[r]) continue;
          auto pr = probs.row(r);
          auto out = gl.row(r);
          for (std::size_t c = 0; c < pr.size(); ++c) out[c] += scale * pr[c];
          out[tgt[r]] -= scale;
        }
      });
}

template <class T>
Var<T> hard_sigmoid(Var<T> x) {
  Tensor<T> out = x.value();
  for (auto& v : out.values()) v = std::clamp((v + T{1}) / T{2}, T{0}, T{1});
  return x.tape->record(std::move(out), {x}, [x](Tape<T>& tape, const Tensor<T>&, const Tensor<T>& g) {
    auto& gx = tape.grad(x);
    const auto& xv = x.value();
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (xv[i] > T{-1} && xv[i] < T{1}) gx[i] += g[i] / T{2};
    }
  });
}

template <class T>
Var<T> binarize_ste(Var<T> x) {
  Tensor<T> out = x.value();
  for (auto& v : out.values()) v = v >= T{0.5} ? T{1} : T{0};
  return x.tape->record(std::move(out), {x}, [x](Tape<T>& tape, const Tensor<T>&, const Tensor<T>& g) {
    auto& gx = tape.grad(x);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
  });
}

template <class T>
Var<T> hm_blend(Var<T> a, Var<T> b, Var<T> c, Var<T> flush, Var<T> below) {
  require_same_tape(a, b);
  require_same_tape(a, c);
  require_same_tape(a, flush);
  require_same_tape(a, below);
  require_same_shape("hm_blend", a.value(), b.value());
  require_same_shape("hm_blend", a.value(), c.value());
  const std::size_t rows = a.value().rows();
  require_column("hm_blend", flush.value(), rows);
  require_column("hm_blend", below.value(), rows);
  const auto& fv = flush.value();
  const auto& lv = below.value();
  Tensor<T> out(a.value().shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const Tensor<T>& src = fv[r] != T{0} ? a.value() : (lv[r] != T{0} ? b.value() : c.value());
    std::copy_n(src.row(r).data(), out.cols(), out.row(r).data());
  }
  return a.tape->record(
      std::move(out), {a, b, c, flush, below},
      [a, b, c, flush, below](Tape<T>& tape, const Tensor<T>&, const Tensor<T>& g) {
        const auto& fv = flush.value();
        const auto& lv = below.value();
        const std::size_t cols = g.cols();
        auto accumulate = [&](Var<T> v, auto weight) {
          if (!tape.requires_grad(v)) return;
          auto& gv = tape.grad(v);
          for (std::size_t r = 0; r < g.rows(); ++r) {
            const T w = weight(r);
            if (w == T{0}) continue;
            auto gr = g.row(r);
            auto out = gv.row(r);
            for (std::size_t k = 0; k < cols; ++k) out[k] += w * gr[k];
          }
        };
        accumulate(a, [&](std::size_t r) { return fv[r]; });
        accumulate(b, [&](std::size_t r) { return (T{1} - fv[r]) * lv[r]; });
        accumulate(c, [&](std::size_t r) { return (T{1} - fv[r]) * (T{1} - lv[r]); });
        const auto& av = a.value();
        const auto& bv = b.value();
        const auto& cv = c.value();
        if (tape.requires_grad(flush)) {
          auto& gf = tape.grad(flush);
          for (std::size_t r = 0; r < g.rows(); ++r) {
            T acc{0};
            for (std::size_t k = 0; k < cols; ++k) {
              acc += g(r, k) * (av(r, k) - lv[r] * bv(r, k) - (T{1} - lv[r]) * cv(r, k));
            }
            gf[r] += acc;
          }
        }
        if (tape.requires_grad(below)) {
          auto& gl = tape.grad(below);
          for (std::size_t r = 0; r < g.rows(); ++r) {
            T acc{0};
            for (std::size_t k = 0; k < cols; ++k) acc += g(r, k) * (bv(r, k) - cv(r, k));
            gl[r] += (T{1} - fv[r]) * acc;
          }
        }
      });
}

#define SEQREC_INSTANTIATE_OPS(T)                                                                          \
  template class Tape<T>;                                                                                  \
  template Var<T> matmul(Var<T>, Var<T>);                                                                  \
  template Var<T> matmul_nt(Var<T>, Var<T>);                                                               \
  template Var<T> add(Var<T>, Var<T>);                                                                     \
  template Var<T> sub(Var<T>, Var<T>);                                                                     \
  template Var<T> mul(Var<T>, Var<T>);                                                                     \
  template Var<T> sigmoid(Var<T>);                                                                         \
  template Var<T> tanh(Var<T>);                                                                            \
  template Var<T> one_minus(Var<T>);                                                                       \
  template Var<T> scale(Var<T>, T);                                                                        \
  template Var<T> sum(Var<T>);                                                                             \
  template Var<T> add_row_bias(Var<T>, Var<T>);                                                            \
  template Var<T> scale_rows(Var<T>, Var<T>);                                                              \
  template Var<T> gather_rows(Var<T>, std::span<const std::uint32_t>);                                     \
  template Var<T> softmax(Var<T>);                                                                         \
  template Var<T> layer_norm(Var<T>, Var<T>, Var<T>, T);                                                   \
  template Var<T> softmax_nll(Var<T>, std::span<const std::uint32_t>, std::span<const std::uint8_t>);      \
  template Var<T> hard_sigmoid(Var<T>);                                                                    \
  template Var<T> binarize_ste(Var<T>);                                                                    \
  template Var<T> hm_blend(Var<T>, Var<T>, Var<T>, Var<T>, Var<T>);                                        \
  template void softmax_inplace(std::span<T>);

SEQREC_INSTANTIATE_OPS(float)
SEQREC_INSTANTIATE_OPS(double)

}  // namespace seqrec
