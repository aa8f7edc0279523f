// Copyright 2026 The stbert Authors
// SPDX-License-Identifier: Apache-2.0

// Pure forward kernels over Tensor. The autodiff Graph calls these for its
// forward pass; they are also usable directly on plain tensors.

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "stbert/numerics/tensor.hpp"

namespace stbert::num {

/// C = op(A) * op(B) for 2-D tensors.
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b, bool transpose_a = false,
                 bool transpose_b = false);

/// out += alpha * op(A) * op(B). `out` must already have the product's shape.
template <typename T>
void matmul_accumulate(Tensor<T>& out, const Tensor<T>& a, bool transpose_a, const Tensor<T>& b,
                       bool transpose_b, T alpha = T(1));

/// Numerically stable softmax along `axis` (max-subtracted).
template <typename T>
Tensor<T> softmax(const Tensor<T>& x, std::size_t axis);

/// Log-softmax along the last axis.
template <typename T>
Tensor<T> log_softmax_rows(const Tensor<T>& x);

/// Normalizes each last-axis row to zero mean / unit variance, then applies
/// gamma and beta.
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, T eps);

/// tanh-approximated GELU.
template <typename T>
Tensor<T> gelu(const Tensor<T>& x);

template <typename T>
T gelu_derivative(T x);

/// grad += dy * gelu'(x), elementwise.
template <typename T>
void gelu_backward_accumulate(Tensor<T>& grad, const Tensor<T>& x, const Tensor<T>& dy);

/// Mean over rows of -log softmax(logits)[i, targets[i]].
template <typename T>
T cross_entropy(const Tensor<T>& logits, std::span<const int> targets);

/// Row index of the largest entry in each row; ties go to the lower index.
template <typename T>
std::vector<int> argmax_rows(const Tensor<T>& x);

}  // namespace stbert::num
