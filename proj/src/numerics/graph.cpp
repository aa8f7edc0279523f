// Copyright 2026 The stbert Authors
// SPDX-License-Identifier: Apache-2.0

#include "stbert/numerics/graph.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "stbert/numerics/tensor_ops.hpp"

namespace stbert::num {

template <typename T>
Graph<T>::Graph() {
#ifdef NDEBUG
  check_finite_ = false;
#else
  check_finite_ = true;
#endif
}

template <typename T>
void Graph<T>::check(Var v) const {
  if (!v.valid() || v.id >= nodes_.size()) throw std::invalid_argument("Graph: invalid Var");
}

template <typename T>
Var Graph<T>::push(Tensor<T> value, bool requires_grad,
                   std::function<void(Graph&, const Tensor<T>&)> backward, const char* op) {
  if (check_finite_ && !value.all_finite()) {
    throw std::runtime_error(std::string("non-finite value produced by ") + op);
  }
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  if (requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

template <typename T>
Tensor<T>& Graph<T>::grad_slot(std::uint32_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad = Tensor<T>(val(id).shape());
  return n.grad;
}

template <typename T>
Var Graph<T>::constant(Tensor<T> value) {
  return push(std::move(value), false, nullptr, "constant");
}

template <typename T>
Var Graph<T>::variable(Tensor<T> value) {
  return push(std::move(value), true, nullptr, "variable");
}

template <typename T>
Var Graph<T>::param(const Tensor<T>& storage, std::string name) {
  Node n;
  n.external = &storage;
  n.requires_grad = grad_enabled_;
  n.name = std::move(name);
  nodes_.push_back(std::move(n));
  Var v{static_cast<std::uint32_t>(nodes_.size() - 1)};
  params_.push_back(v);
  return v;
}

template <typename T>
const Tensor<T>& Graph<T>::value(Var v) const {
  check(v);
  return val(v.id);
}

template <typename T>
Tensor<T> Graph<T>::grad(Var v) const {
  check(v);
  const Node& n = nodes_[v.id];
  if (n.grad.empty()) return Tensor<T>(val(v.id).shape());
  return n.grad;
}

template <typename T>
void Graph<T>::backward(Var loss) {
  check(loss);
  if (val(loss.id).numel() != 1) {
    throw std::invalid_argument("backward: loss is not scalar, shape " +
                                shape_str(val(loss.id).shape()));
  }
  for (auto& n : nodes_) n.grad = Tensor<T>();
  grad_slot(loss.id).fill(T(1));
  for (std::uint32_t id = loss.id + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (n.backward && !n.grad.empty()) n.backward(*this, n.grad);
  }
}

template <typename T>
Var Graph<T>::matmul(Var a, Var b, bool transpose_b) {
  check(a);
  check(b);
  const bool rg = requires_grad(a) || requires_grad(b);
  auto out = num::matmul(val(a.id), val(b.id), false, transpose_b);
  return push(std::move(out), rg, [a, b, transpose_b](Graph& g, const Tensor<T>& dy) {
    if (g.requires_grad(a)) {
      // dA = dY * op(B)^T
      matmul_accumulate(g.grad_slot(a.id), dy, false, g.val(b.id), !transpose_b);
    }
    if (g.requires_grad(b)) {
      if (transpose_b) {
        // Y = A B^T  =>  dB = dY^T A
        matmul_accumulate(g.grad_slot(b.id), dy, true, g.val(a.id), false);
      } else {
        matmul_accumulate(g.grad_slot(b.id), g.val(a.id), true, dy, false);
      }
    }
  }, "matmul");
}

template <typename T>
Var Graph<T>::add(Var a, Var b) {
  check(a);
  check(b);
  const auto& x = val(a.id);
  const auto& y = val(b.id);
  if (x.shape() != y.shape()) {
    throw std::invalid_argument("add: shape mismatch " + shape_str(x.shape()) + " vs " +
                                shape_str(y.shape()));
  }
  Tensor<T> out = x;
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] += y[i];
  return push(std::move(out), requires_grad(a) || requires_grad(b),
              [a, b](Graph& g, const Tensor<T>& dy) {
                for (Var v : {a, b}) {
                  if (!g.requires_grad(v)) continue;
                  auto& gs = g.grad_slot(v.id);
                  for (std::size_t i = 0; i < dy.numel(); ++i) gs[i] += dy[i];
                }
              }, "add");
}

template <typename T>
Var Graph<T>::mul(Var a, Var b) {
  check(a);
  check(b);
  const auto& x = val(a.id);
  const auto& y = val(b.id);
  if (x.shape() != y.shape()) {
    throw std::invalid_argument("mul: shape mismatch " + shape_str(x.shape()) + " vs " +
                                shape_str(y.shape()));
  }
  Tensor<T> out = x;
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= y[i];
  return push(std::move(out), requires_grad(a) || requires_grad(b),
              [a, b](Graph& g, const Tensor<T>& dy) {
                if (g.requires_grad(a)) {
                  auto& gs = g.grad_slot(a.id);
                  const auto& other = g.val(b.id);
                  for (std::size_t i = 0; i < dy.numel(); ++i) gs[i] += dy[i] * other[i];
                }
                if (g.requires_grad(b)) {
                  auto& gs = g.grad_slot(b.id);
                  const auto& other = g.val(a.id);
                  for (std::size_t i = 0; i < dy.numel(); ++i) gs[i] += dy[i] * other[i];
                }
              }, "mul");
}

template <typename T>
Var Graph<T>::scale(Var a, T factor) {
  check(a);
  Tensor<T> out = val(a.id);
  for (auto& v : out.values()) v *= factor;
  return push(std::move(out), requires_grad(a), [a, factor](Graph& g, const Tensor<T>& dy) {
    auto& gs = g.grad_slot(a.id);
    for (std::size_t i = 0; i < dy.numel(); ++i) gs[i] += factor * dy[i];
  }, "scale");
}

template <typename T>
Var Graph<T>::add_bias(Var x, Var bias) {
  check(x);
  check(bias);
  const auto& xv = val(x.id);
  const auto& bv = val(bias.id);
  const std::size_t cols = xv.cols();
  if (bv.numel() != cols) {
    throw std::invalid_argument("add_bias: bias length " + std::to_string(bv.numel()) +
                                " != columns " + std::to_string(cols));
  }
  Tensor<T> out = xv;
  const std::size_t rows = out.numel() / cols;
  for (std::size_t r = 0; r < rows; ++r) {
    T* row = out.data() + r * cols;
    for (std::size_t c = 0; c < cols; ++c) row[c] += bv[c];
  }
  return push(std::move(out), requires_grad(x) || requires_grad(bias),
              [x, bias, rows, cols](Graph& g, const Tensor<T>& dy) {
                if (g.requires_grad(x)) {
                  auto& gs = g.grad_slot(x.id);
                  for (std::size_t i = 0; i < dy.numel(); ++i) gs[i] += dy[i];
                }
                if (g.requires_grad(bias)) {
                  auto& gs = g.grad_slot(bias.id);
                  for (std::size_t r = 0; r < rows; ++r) {
                    const T* row = dy.data() + r * cols;
                    for (std::size_t c = 0; c < cols; ++c) gs[c] += row[c];
                  }
                }
              }, "add_bias");
}

template <typename T>
Var Graph<T>::gather_rows(Var table, std::vector<int> indices) {
  check(table);
  const auto& tv = val(table.id);
  if (tv.rank() != 2) throw std::invalid_argument("gather_rows: table must be rank 2");
  if (indices.empty()) throw std::invalid_argument("gather_rows: no indices");
  const std::size_t cols = tv.cols();
  Tensor<T> out(Shape{indices.size(), cols});
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const int idx = indices[r];
    if (idx < 0 || static_cast<std::size_t>(idx) >= tv.rows()) {
      throw std::invalid_argument("gather_rows: index " + std::to_string(idx) +
                                  " out of range for " + std::to_string(tv.rows()) + " rows");
    }
    const auto src = tv.row(static_cast<std::size_t>(idx));
    std::copy(src.begin(), src.end(), out.data() + r * cols);
  }
  return push(std::move(out), requires_grad(table),
              [table, idx = std::move(indices), cols](Graph& g, const Tensor<T>& dy) {
                auto& gs = g.grad_slot(table.id);
                for (std::size_t r = 0; r < idx.size(); ++r) {
                  T* dst = gs.data() + static_cast<std::size_t>(idx[r]) * cols;
                  const T* src = dy.data() + r * cols;
                  for (std::size_t c = 0; c < cols; ++c) dst[c] += src[c];
                }
              }, "gather_rows");
}

template <typename T>
Var Graph<T>::softmax(Var x, std::size_t axis) {
  check(x);
  auto out = num::softmax(val(x.id), axis);
  const auto self = static_cast<std::uint32_t>(nodes_.size());
  return push(std::move(out), requires_grad(x), [x, axis, self](Graph& g, const Tensor<T>& dy) {
    const auto& y = g.val(self);
    const auto& s = y.shape();
    std::size_t outer = 1, inner = 1;
    for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
    for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
    const std::size_t n = s[axis];
    auto& gs = g.grad_slot(x.id);
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t i = 0; i < inner; ++i) {
        const std::size_t base = o * n * inner + i;
        T dot = 0;
        for (std::size_t k = 0; k < n; ++k) dot += dy[base + k * inner] * y[base + k * inner];
        for (std::size_t k = 0; k < n; ++k) {
          const std::size_t j = base + k * inner;
          gs[j] += y[j] * (dy[j] - dot);
        }
      }
    }
  }, "softmax");
}

template <typename T>
Var Graph<T>::layer_norm(Var x, Var gamma, Var beta, T eps) {
  check(x);
  check(gamma);
  check(beta);
  const auto& xv = val(x.id);
  const auto& gv = val(gamma.id);
  const auto& bv = val(beta.id);
  const std::size_t cols = xv.cols();
  if (gv.numel() != cols || bv.numel() != cols) {
    throw std::invalid_argument("layer_norm: gamma/beta length must equal last axis of " +
                                shape_str(xv.shape()));
  }
  const std::size_t rows = xv.numel() / cols;
  Tensor<T> xhat(xv.shape());
  std::vector<T> inv_std(rows);
  Tensor<T> out(xv.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const T* in = xv.data() + r * cols;
    T mean = 0;
    for (std::size_t c = 0; c < cols; ++c) mean += in[c];
    mean /= static_cast<T>(cols);
    T var = 0;
    for (std::size_t c = 0; c < cols; ++c) var += (in[c] - mean) * (in[c] - mean);
    var /= static_cast<T>(cols);
    inv_std[r] = T(1) / std::sqrt(var + eps);
    for (std::size_t c = 0; c < cols; ++c) {
      const T h = (in[c] - mean) * inv_std[r];
      xhat[r * cols + c] = h;
      out[r * cols + c] = h * gv[c] + bv[c];
    }
  }
  const bool rg = requires_grad(x) || requires_grad(gamma) || requires_grad(beta);
  return push(std::move(out), rg,
              [x, gamma, beta, rows, cols, xhat = std::move(xhat),
               inv_std = std::move(inv_std)](Graph& g, const Tensor<T>& dy) {
                const auto& gv = g.val(gamma.id);
                if (g.requires_grad(gamma)) {
                  auto& gg = g.grad_slot(gamma.id);
                  for (std::size_t i = 0; i < dy.numel(); ++i) gg[i % cols] += dy[i] * xhat[i];
                }
                if (g.requires_grad(beta)) {
                  auto& gb = g.grad_slot(beta.id);
                  for (std::size_t i = 0; i < dy.numel(); ++i) gb[i % cols] += dy[i];
                }
                if (g.requires_grad(x)) {
                  auto& gx = g.grad_slot(x.id);
                  const T inv_n = T(1) / static_cast<T>(cols);
                  for (std::size_t r = 0; r < rows; ++r) {
                    const T* d = dy.data() + r * cols;
                    const T* h = xhat.data() + r * cols;
                    T mean_dh = 0, mean_dh_h = 0;
                    for (std::size_t c = 0; c < cols; ++c) {
                      const T dh = d[c] * gv[c];
                      mean_dh += dh;
                      mean_dh_h += dh * h[c];
                    }
                    mean_dh *= inv_n;
                    mean_dh_h *= inv_n;
                    T* out = gx.data() + r * cols;
                    for (std::size_t c = 0; c < cols; ++c) {
                      out[c] += inv_std[r] * (d[c] * gv[c] - mean_dh - h[c] * mean_dh_h);
                    }
                  }
                }
              }, "layer_norm");
}

template <typename T>
Var Graph<T>::gelu(Var x) {
  check(x);
  auto out = num::gelu(val(x.id));
  return push(std::move(out), requires_grad(x), [x](Graph& g, const Tensor<T>& dy) {
    gelu_backward_accumulate(g.grad_slot(x.id), g.val(x.id), dy);
  }, "gelu");
}

template <typename T>
Var Graph<T>::cross_entropy(Var logits, std::vector<int> targets) {
  check(logits);
  const auto& lv = val(logits.id);
  const T loss = num::cross_entropy(lv, std::span<const int>(targets));
  return push(Tensor<T>::scalar(loss), requires_grad(logits),
              [logits, targets = std::move(targets)](Graph& g, const Tensor<T>& dy) {
                const auto& lv = g.val(logits.id);
                auto probs = num::softmax(lv, 1);
                const std::size_t v = lv.cols();
                const T s = dy[0] / static_cast<T>(targets.size());
                auto& gs = g.grad_slot(logits.id);
                for (std::size_t r = 0; r < targets.size(); ++r) {
                  probs[r * v + static_cast<std::size_t>(targets[r])] -= T(1);
                }
                for (std::size_t i = 0; i < gs.numel(); ++i) gs[i] += s * probs[i];
              }, "cross_entropy");
}

template <typename T>
Var Graph<T>::concat(std::span<const Var> parts, std::size_t axis) {
  if (parts.empty()) throw std::invalid_argument("concat: no inputs");
  if (axis > 1) throw std::invalid_argument("concat: axis must be 0 or 1");
  std::size_t rows = 0, cols = 0;
  bool rg = false;
  for (Var p : parts) {
    check(p);
    const auto& v = val(p.id);
    if (v.rank() != 2) throw std::invalid_argument("concat: inputs must be rank 2");
    rg = rg || requires_grad(p);
    if (axis == 0) {
      if (cols == 0) cols = v.cols();
      if (v.cols() != cols) throw std::invalid_argument("concat: column count mismatch");
      rows += v.rows();
    } else {
      if (rows == 0) rows = v.rows();
      if (v.rows() != rows) throw std::invalid_argument("concat: row count mismatch");
      cols += v.cols();
    }
  }
  Tensor<T> out(Shape{rows, cols});
  std::size_t offset = 0;
  for (Var p : parts) {
    const auto& v = val(p.id);
    for (std::size_t r = 0; r < v.rows(); ++r) {
      const auto src = v.row(r);
      T* dst = axis == 0 ? out.data() + (offset + r) * cols : out.data() + r * cols + offset;
      std::copy(src.begin(), src.end(), dst);
    }
    offset += axis == 0 ? v.rows() : v.cols();
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return push(std::move(out), rg, [inputs, axis, cols](Graph& g, const Tensor<T>& dy) {
    std::size_t offset = 0;
    for (Var p : inputs) {
      const auto& shape = g.val(p.id).shape();
      const std::size_t pr = shape[0], pc = shape[1];
      if (g.requires_grad(p)) {
        auto& gs = g.grad_slot(p.id);
        for (std::size_t r = 0; r < pr; ++r) {
          const T* src = axis == 0 ? dy.data() + (offset + r) * cols : dy.data() + r * cols + offset;
          T* dst = gs.data() + r * pc;
          for (std::size_t c = 0; c < pc; ++c) dst[c] += src[c];
        }
      }
      offset += axis == 0 ? pr : pc;
    }
  }, "concat");
}

template <typename T>
Var Graph<T>::slice(Var x, std::size_t axis, std::size_t begin, std::size_t end) {
  check(x);
  const auto& xv = val(x.id);
  if (xv.rank() != 2) throw std::invalid_argument("slice: input must be rank 2");
  if (axis > 1) throw std::invalid_argument("slice: axis must be 0 or 1");
  const std::size_t limit = xv.dim(axis);
  if (begin >= end || end > limit) {
    throw std::invalid_argument("slice: range [" + std::to_string(begin) + "," +
                                std::to_string(end) + ") invalid for extent " +
                                std::to_string(limit));
  }
  const std::size_t cols = xv.cols();
  const std::size_t out_rows = axis == 0 ? end - begin : xv.rows();
  const std::size_t out_cols = axis == 0 ? cols : end - begin;
  Tensor<T> out(Shape{out_rows, out_cols});
  for (std::size_t r = 0; r < out_rows; ++r) {
    const T* src = axis == 0 ? xv.data() + (begin + r) * cols : xv.data() + r * cols + begin;
    std::copy(src, src + out_cols, out.data() + r * out_cols);
  }
  return push(std::move(out), requires_grad(x),
              [x, axis, begin, cols, out_rows, out_cols](Graph& g, const Tensor<T>& dy) {
                auto& gs = g.grad_slot(x.id);
                for (std::size_t r = 0; r < out_rows; ++r) {
                  T* dst = axis == 0 ? gs.data() + (begin + r) * cols : gs.data() + r * cols + begin;
                  const T* src = dy.data() + r * out_cols;
                  for (std::size_t c = 0; c < out_cols; ++c) dst[c] += src[c];
                }
              }, "slice");
}

template <typename T>
Var Graph<T>::dropout(Var x, T rate, Rng& rng) {
  check(x);
  if (rate < T(0) || rate >= T(1)) throw std::invalid_argument("dropout: rate must be in [0,1)");
  if (rate == T(0)) return x;
  const auto& xv = val(x.id);
  Tensor<T> keep(xv.shape());
  const T inv_keep = T(1) / (T(1) - rate);
  for (auto& k : keep.values()) k = bernoulli(rng, static_cast<double>(rate)) ? T(0) : inv_keep;
  Tensor<T> out = xv;
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= keep[i];
  return push(std::move(out), requires_grad(x),
              [x, keep = std::move(keep)](Graph& g, const Tensor<T>& dy) {
                auto& gs = g.grad_slot(x.id);
                for (std::size_t i = 0; i < dy.numel(); ++i) gs[i] += dy[i] * keep[i];
              }, "dropout");
}

template <typename T>
Var Graph<T>::sum(Var x) {
  check(x);
  T total = 0;
  for (T v : val(x.id).values()) total += v;
  return push(Tensor<T>::scalar(total), requires_grad(x), [x](Graph& g, const Tensor<T>& dy) {
    auto& gs = g.grad_slot(x.id);
    for (auto& v : gs.values()) v += dy[0];
  }, "sum");
}

template class Graph<float>;
template class Graph<double>;

}  // namespace stbert::num
