// Copyright 2026 The stbert Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

#include "stbert/model/params.hpp"
#include "stbert/numerics/tensor.hpp"

namespace stbert::trainer {

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First and second moments mirroring a parameter set. `step` counts
/// completed updates.
template <typename T>
struct AdamState {
  model::Params<T> m;
  model::Params<T> v;
  std::uint64_t step = 0;
};

template <typename T>
AdamState<T> adam_init(const model::Params<T>& params);

/// One bias-corrected Adam update of a single tensor, where `t` is the
/// 1-based step number. Throws std::invalid_argument on shape mismatch.
template <typename T>
void adam_update(num::Tensor<T>& param, const num::Tensor<T>& grad, num::Tensor<T>& m, num::Tensor<T>& v,
                 std::uint64_t t, double lr, const AdamHyper& hyper);

/// Updates every tensor of `params` and increments state.step.
template <typename T>
void adam_step(model::Params<T>& params, const model::Params<T>& grads, AdamState<T>& state, double lr,
               const AdamHyper& hyper = {});

/// Scales `grads` in place so that their global L2 norm is at most
/// `max_norm`; returns the norm before clipping.
template <typename T>
double clip_grad_norm(model::Params<T>& grads, double max_norm);

}  // namespace stbert::trainer
