// Copyright 2026 The stbert Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "stbert/common/random.hpp"
#include "stbert/numerics/tensor.hpp"

namespace stbert::num {

/// Handle to a node in a Graph. Only meaningful for the graph that made it.
struct Var {
  std::uint32_t id = UINT32_MAX;
  bool valid() const { return id != UINT32_MAX; }
};

/// Tape-based reverse-mode autodiff. Nodes are appended in evaluation order,
/// so creation order is a topological order and backward() walks it in
/// reverse, visiting each node once.
///
/// Parameters are bound by pointer (see param()); the graph never copies or
/// mutates them, so a caller can perturb a bound tensor and re-run a forward
/// pass on a fresh graph. A Graph is single-threaded.
template <typename T>
class Graph {
 public:
  Graph();

  /// Constant input; receives no gradient.
  Var constant(Tensor<T> value);
  /// Leaf owning its value that accumulates a gradient.
  Var variable(Tensor<T> value);
  /// Trainable leaf referencing caller-owned storage. `storage` must outlive
  /// the graph.
  Var param(const Tensor<T>& storage, std::string name = {});
  Var param(Tensor<T>&& storage, std::string name = {}) = delete;

  const Tensor<T>& value(Var v) const;
  /// Gradient of the last backward() target with respect to `v`. Nodes never
  /// reached by backward get an all-zero tensor.
  Tensor<T> grad(Var v) const;
  bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }
  const std::string& name(Var v) const { return nodes_.at(v.id).name; }
  std::size_t size() const { return nodes_.size(); }
  /// Trainable leaves registered via param(), in registration order.
  const std::vector<Var>& params() const { return params_; }

  /// Throw on non-finite values produced by any op (on by default in debug
  /// builds).
  void set_check_finite(bool on) { check_finite_ = on; }
  /// When off, param() leaves are created without gradients (inference).
  void set_grad_enabled(bool on) { grad_enabled_ = on; }

  /// Seeds d(loss)/d(loss) = 1 and propagates to every node. Throws if
  /// `loss` is not a single-element tensor.
  void backward(Var loss);

  // Differentiable ops. 2-D unless noted.
  Var matmul(Var a, Var b, bool transpose_b = false);
  Var add(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, T factor);
  /// x[N x d] + bias[d] broadcast over rows.
  Var add_bias(Var x, Var bias);
  /// Rows of `table` selected by `indices` (embedding lookup).
  Var gather_rows(Var table, std::vector<int> indices);
  Var softmax(Var x, std::size_t axis);
  Var layer_norm(Var x, Var gamma, Var beta, T eps);
  Var gelu(Var x);
  /// Mean cross-entropy of rows of `logits` against class indices.
  Var cross_entropy(Var logits, std::vector<int> targets);
  Var concat(std::span<const Var> parts, std::size_t axis);
  Var slice(Var x, std::size_t axis, std::size_t begin, std::size_t end);
  /// Inverted dropout. rate == 0 returns `x` unchanged.
  Var dropout(Var x, T rate, Rng& rng);
  /// Sum of all elements (any rank) as a scalar.
  Var sum(Var x);

 private:
  struct Node {
    Tensor<T> value;
    const Tensor<T>* external = nullptr;
    Tensor<T> grad;
    bool requires_grad = false;
    std::function<void(Graph&, const Tensor<T>&)> backward;
    std::string name;
  };

  const Tensor<T>& val(std::uint32_t id) const {
    const Node& n = nodes_[id];
    return n.external ? *n.external : n.value;
  }
  Var push(Tensor<T> value, bool requires_grad,
           std::function<void(Graph&, const Tensor<T>&)> backward, const char* op);
  Tensor<T>& grad_slot(std::uint32_t id);
  void check(Var v) const;

  std::vector<Node> nodes_;
  std::vector<Var> params_;
  bool check_finite_;
  bool grad_enabled_ = true;
};

extern template class Graph<float>;
extern template class Graph<double>;

}  // namespace stbert::num
