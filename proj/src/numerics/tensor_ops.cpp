// Copyright 2026 The stbert Authors
// SPDX-License-Identifier: Apache-2.0

#include "stbert/numerics/tensor_ops.hpp"

#include <Eigen/Core>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace stbert::num {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using ConstMap = Eigen::Map<const RowMat<T>>;
template <typename T>
using MutMap = Eigen::Map<RowMat<T>>;

template <typename T>
void require_matrix(const Tensor<T>& t, const char* what) {
  if (t.rank() != 2) {
    throw std::invalid_argument(std::string(what) + ": expected rank-2 tensor, got " +
                                shape_str(t.shape()));
  }
}

template <typename T>
ConstMap<T> as_matrix(const Tensor<T>& t) {
  return ConstMap<T>(t.data(), static_cast<Eigen::Index>(t.rows()),
                     static_cast<Eigen::Index>(t.cols()));
}

template <typename T>
using ConstArr = Eigen::Map<const Eigen::Array<T, Eigen::Dynamic, 1>>;
template <typename T>
using MutArr = Eigen::Map<Eigen::Array<T, Eigen::Dynamic, 1>>;

constexpr double kGeluScale = 0.7978845608028654;  // sqrt(2 / pi)
constexpr double kGeluCubic = 0.044715;

}  // namespace

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b, bool transpose_a, bool transpose_b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  const auto m = transpose_a ? a.cols() : a.rows();
  const auto n = transpose_b ? b.rows() : b.cols();
  Tensor<T> out(Shape{m, n});
  matmul_accumulate(out, a, transpose_a, b, transpose_b);
  return out;
}

template <typename T>
void matmul_accumulate(Tensor<T>& out, const Tensor<T>& a, bool transpose_a, const Tensor<T>& b,
                       bool transpose_b, T alpha) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  const auto m = transpose_a ? a.cols() : a.rows();
  const auto ka = transpose_a ? a.rows() : a.cols();
  const auto kb = transpose_b ? b.cols() : b.rows();
  const auto n = transpose_b ? b.rows() : b.cols();
  if (ka != kb) {
    throw std::invalid_argument("matmul: inner dimensions differ: " + shape_str(a.shape()) +
                                " x " + shape_str(b.shape()));
  }
  if (out.rank() != 2 || out.rows() != m || out.cols() != n) {
    throw std::invalid_argument("matmul: output shape mismatch");
  }
  auto am = as_matrix(a);
  auto bm = as_matrix(b);
  MutMap<T> om(out.data(), static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
  if (!transpose_a && !transpose_b) {
    om.noalias() += alpha * am * bm;
  } else if (!transpose_a && transpose_b) {
    om.noalias() += alpha * am * bm.transpose();
  } else if (transpose_a && !transpose_b) {
    om.noalias() += alpha * am.transpose() * bm;
  } else {
    om.noalias() += alpha * am.transpose() * bm.transpose();
  }
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& x, std::size_t axis) {
  if (axis >= x.rank()) {
    throw std::invalid_argument("softmax: axis " + std::to_string(axis) + " out of range for " +
                                shape_str(x.shape()));
  }
  const auto& s = x.shape();
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
  for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
  const std::size_t n = s[axis];
  Tensor<T> y(s);
  const T* in = x.data();
  T* out = y.data();
  if (inner == 1) {
    for (std::size_t o = 0; o < outer; ++o) {
      ConstArr<T> row(in + o * n, static_cast<Eigen::Index>(n));
      MutArr<T> dst(out + o * n, static_cast<Eigen::Index>(n));
      dst = (row - row.maxCoeff()).exp();
      dst *= T(1) / dst.sum();
    }
    return y;
  }
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < inner; ++i) {
      const std::size_t base = o * n * inner + i;
      T mx = -std::numeric_limits<T>::infinity();
      for (std::size_t k = 0; k < n; ++k) mx = std::max(mx, in[base + k * inner]);
      T sum = 0;
      for (std::size_t k = 0; k < n; ++k) {
        const T e = std::exp(in[base + k * inner] - mx);
        out[base + k * inner] = e;
        sum += e;
      }
      const T inv = T(1) / sum;
      for (std::size_t k = 0; k < n; ++k) out[base + k * inner] *= inv;
    }
  }
  return y;
}

template <typename T>
Tensor<T> log_softmax_rows(const Tensor<T>& x) {
  Tensor<T> y(x.shape());
  const std::size_t cols = x.cols();
  for (std::size_t r = 0; r < x.numel() / cols; ++r) {
    const T* in = x.data() + r * cols;
    T* out = y.data() + r * cols;
    ConstArr<T> row(in, static_cast<Eigen::Index>(cols));
    const T mx = row.maxCoeff();
    const T lse = mx + std::log((row - mx).exp().sum());
    MutArr<T>(out, static_cast<Eigen::Index>(cols)) = row - lse;
  }
  return y;
}

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, T eps) {
  const std::size_t cols = x.cols();
  if (gamma.numel() != cols || beta.numel() != cols) {
    throw std::invalid_argument("layer_norm: gamma/beta length must equal last axis of " +
                                shape_str(x.shape()));
  }
  Tensor<T> y(x.shape());
  for (std::size_t r = 0; r < x.numel() / cols; ++r) {
    const T* in = x.data() + r * cols;
    T* out = y.data() + r * cols;
    T mean = 0;
    for (std::size_t c = 0; c < cols; ++c) mean += in[c];
    mean /= static_cast<T>(cols);
    T var = 0;
    for (std::size_t c = 0; c < cols; ++c) var += (in[c] - mean) * (in[c] - mean);
    var /= static_cast<T>(cols);
    const T inv_std = T(1) / std::sqrt(var + eps);
    for (std::size_t c = 0; c < cols; ++c) {
      out[c] = (in[c] - mean) * inv_std * gamma[c] + beta[c];
    }
  }
  return y;
}

template <typename T>
Tensor<T> gelu(const Tensor<T>& x) {
  Tensor<T> y(x.shape());
  const auto n = static_cast<Eigen::Index>(x.numel());
  ConstArr<T> v(x.data(), n);
  const T c = static_cast<T>(kGeluScale);
  const T a = static_cast<T>(kGeluCubic);
  MutArr<T>(y.data(), n) = T(0.5) * v * (T(1) + (c * (v + a * v * v * v)).tanh());
  return y;
}

template <typename T>
T gelu_derivative(T v) {
  const T c = static_cast<T>(kGeluScale);
  const T a = static_cast<T>(kGeluCubic);
  const T t = std::tanh(c * (v + a * v * v * v));
  return T(0.5) * (T(1) + t) + T(0.5) * v * (T(1) - t * t) * c * (T(1) + T(3) * a * v * v);
}

template <typename T>
void gelu_backward_accumulate(Tensor<T>& grad, const Tensor<T>& x, const Tensor<T>& dy) {
  if (grad.numel() != x.numel() || dy.numel() != x.numel()) {
    throw std::invalid_argument("gelu_backward: size mismatch");
  }
  const auto n = static_cast<Eigen::Index>(x.numel());
  ConstArr<T> v(x.data(), n);
  const T c = static_cast<T>(kGeluScale);
  const T a = static_cast<T>(kGeluCubic);
  const Eigen::Array<T, Eigen::Dynamic, 1> t = (c * (v + a * v * v * v)).tanh();
  MutArr<T>(grad.data(), n) +=
      ConstArr<T>(dy.data(), n) *
      (T(0.5) * (T(1) + t) + T(0.5) * v * (T(1) - t * t) * c * (T(1) + T(3) * a * v * v));
}

template <typename T>
T cross_entropy(const Tensor<T>& logits, std::span<const int> targets) {
  require_matrix(logits, "cross_entropy");
  const std::size_t n = logits.rows();
  const std::size_t v = logits.cols();
  if (targets.empty()) throw std::invalid_argument("cross_entropy: no targets (N == 0)");
  if (targets.size() != n) throw std::invalid_argument("cross_entropy: target count != rows");
  T total = 0;
  for (std::size_t r = 0; r < n; ++r) {
    const int t = targets[r];
    if (t < 0 || static_cast<std::size_t>(t) >= v) {
      throw std::invalid_argument("cross_entropy: target index " + std::to_string(t) +
                                  " out of range for " + std::to_string(v) + " classes");
    }
    ConstArr<T> row(logits.data() + r * v, static_cast<Eigen::Index>(v));
    const T mx = row.maxCoeff();
    total += mx + std::log((row - mx).exp().sum()) - row[t];
  }
  return total / static_cast<T>(n);
}

template <typename T>
std::vector<int> argmax_rows(const Tensor<T>& x) {
  const std::size_t cols = x.cols();
  std::vector<int> out(x.numel() / cols);
  for (std::size_t r = 0; r < out.size(); ++r) {
    const T* in = x.data() + r * cols;
    std::size_t best = 0;
    for (std::size_t c = 1; c < cols; ++c) {
      if (in[c] > in[best]) best = c;
    }
    out[r] = static_cast<int>(best);
  }
  return out;
}

#define STBERT_INSTANTIATE(T)                                                                 \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&, bool, bool);                  \
  template void matmul_accumulate(Tensor<T>&, const Tensor<T>&, bool, const Tensor<T>&, bool, \
                                  T);                                                         \
  template Tensor<T> softmax(const Tensor<T>&, std::size_t);                                  \
  template Tensor<T> log_softmax_rows(const Tensor<T>&);                                      \
  template Tensor<T> layer_norm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, T);     \
  template Tensor<T> gelu(const Tensor<T>&);                                                  \
  template T gelu_derivative(T);                                                              \
  template void gelu_backward_accumulate(Tensor<T>&, const Tensor<T>&, const Tensor<T>&);     \
  template T cross_entropy(const Tensor<T>&, std::span<const int>);                           \
  template std::vector<int> argmax_rows(const Tensor<T>&);

STBERT_INSTANTIATE(float)
STBERT_INSTANTIATE(double)

#undef STBERT_INSTANTIATE

}  // namespace stbert::num
