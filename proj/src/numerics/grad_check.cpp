// Copyright 2026 The stbert Authors
// SPDX-License-Identifier: Apache-2.0

#include "stbert/numerics/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "stbert/common/random.hpp"

namespace stbert::num {

namespace {

double evaluate(const ScalarFunction& f, std::span<Tensor<double>* const> params,
                std::vector<Tensor<double>>* grads) {
  Graph<double> g;
  std::vector<Var> leaves;
  leaves.reserve(params.size());
  for (auto* p : params) leaves.push_back(g.param(*p));
  const Var loss = f(g, leaves);
  const double value = g.value(loss).item();
  if (grads) {
    g.backward(loss);
    grads->clear();
    for (Var v : leaves) grads->push_back(g.grad(v));
  }
  return value;
}

}  // namespace

GradCheckReport grad_check(const ScalarFunction& f, std::span<Tensor<double>* const> params,
                           const GradCheckOptions& options) {
  if (options.eps < 1e-7 || options.eps > 1e-3) {
    throw std::invalid_argument("grad_check: eps must lie in [1e-7, 1e-3]");
  }
  std::vector<Tensor<double>> analytic;
  evaluate(f, params, &analytic);

  // Flat coordinate space over all parameters.
  std::vector<std::size_t> offsets{0};
  for (auto* p : params) offsets.push_back(offsets.back() + p->numel());
  const std::size_t total = offsets.back();

  std::vector<std::size_t> coords(total);
  for (std::size_t i = 0; i < total; ++i) coords[i] = i;
  if (options.samples < total) {
    Rng rng(options.seed);
    shuffle(coords.begin(), coords.end(), rng);
    coords.resize(options.samples);
    std::sort(coords.begin(), coords.end());
  }

  GradCheckReport report;
  for (std::size_t flat : coords) {
    const auto it = std::upper_bound(offsets.begin(), offsets.end(), flat);
    const auto k = static_cast<std::size_t>(it - offsets.begin()) - 1;
    const std::size_t i = flat - offsets[k];
    double& x = (*params[k])[i];
    const double saved = x;
    const double h = options.eps;
    const auto at = [&](double offset) {
      x = saved + offset;
      return evaluate(f, params, nullptr);
    };
    double numeric;
    if (options.stencil == Stencil::kTwoPoint) {
      numeric = (at(h) - at(-h)) / (2.0 * h);
    } else {
      // Paired differences first: equal evaluations then give exactly 0.
      const double near = at(h) - at(-h);
      const double far = at(2.0 * h) - at(-2.0 * h);
      numeric = (8.0 * near - far) / (12.0 * h);
    }
    x = saved;
    const double a = analytic[k][i];
    const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
    const double rel = std::abs(a - numeric) / denom;
    if (rel >= report.max_relative_error) {
      report.max_relative_error = rel;
      report.worst_tensor = k;
      report.worst_index = i;
      report.worst_analytic = a;
      report.worst_numeric = numeric;
    }
    ++report.coordinates_checked;
  }
  return report;
}

}  // namespace stbert::num
