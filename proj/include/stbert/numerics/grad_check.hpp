// Copyright 2026 The stbert Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "stbert/numerics/graph.hpp"

namespace stbert::num {

/// Builds a scalar loss on `graph` from the parameter leaves in `params`
/// (bound in the same order as the tensors handed to grad_check).
using ScalarFunction = std::function<Var(Graph<double>& graph, std::span<const Var> params)>;

enum class Stencil : std::uint8_t {
  kTwoPoint,   // (f(x+h) - f(x-h)) / 2h
  kFivePoint,  // (f(x-2h) - 8f(x-h) + 8f(x+h) - f(x+2h)) / 12h
};

struct GradCheckOptions {
  double eps = 1e-5;
  /// Number of coordinates to probe; all coordinates when this is at least
  /// the total parameter count.
  std::size_t samples = 20;
  std::uint64_t seed = 0;
  /// The five-point stencil tolerates a larger step, which keeps loss
  /// rounding (about one ulp / h) well below small gradients.
  Stencil stencil = Stencil::kTwoPoint;
};

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::size_t coordinates_checked = 0;
  /// Worst coordinate: tensor index, flat element index and both estimates.
  std::size_t worst_tensor = 0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

/// Compares reverse-mode gradients of `f` against central differences at
/// sampled coordinates. Relative error per coordinate is
/// |analytic - numeric| / max(|analytic|, |numeric|, 1e-8). The tensors in
/// `params` are perturbed in place and restored afterwards.
GradCheckReport grad_check(const ScalarFunction& f, std::span<Tensor<double>* const> params,
                           const GradCheckOptions& options = {});

}  // namespace stbert::num
