// Copyright 2026 The stbert Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "stbert/common/random.hpp"
#include "stbert/masking/mask_plan.hpp"
#include "stbert/model/network.hpp"
#include "stbert/model/params.hpp"
#include "stbert/trainer/dataset.hpp"

namespace stbert::trainer {

using masking::MaskPlan;
using masking::Task;

struct StepLoss {
  Task task = Task::kCmMlm;
  double value = 0.0;
  std::size_t masked_count = 0;
  /// True when no position was masked; no update is applied.
  bool skipped = false;
};

/// Masked inputs for one step together with their plans.
struct MaskedBatch {
  Task task = Task::kCmMlm;
  std::vector<model::PackedInput> inputs;
  std::vector<MaskPlan> plans;
  std::size_t masked_count() const;
};

/// Packs `indices` of `data` in the task's layout and applies fresh mask plans.
MaskedBatch make_masked_batch(const Dataset& data, std::span<const std::size_t> indices, Task task,
                              double mask_rate, std::size_t max_positions, Rng& rng);

/// Mean cross-entropy over every masked position of the batch, speech and
/// text positions pooled with equal weight. Returns an invalid Var when
/// nothing is masked.
template <typename T>
num::Var masked_lm_loss(num::Graph<T>& graph, const model::ParamVars& params, const model::ModelConfig& config,
                        const MaskedBatch& batch, Rng* dropout_rng = nullptr);

/// Mean cross-entropy of intent logits against `labels`.
template <typename T>
num::Var intent_loss(num::Graph<T>& graph, const model::ParamVars& params, const model::ModelConfig& config,
                     std::span<const model::PackedInput> inputs, std::span<const int> labels,
                     Rng* dropout_rng = nullptr);

template <typename T>
struct LossAndGrads {
  StepLoss loss;
  model::Params<T> grads;
};

/// Forward and backward of the masked-LM loss for one step.
template <typename T>
LossAndGrads<T> step_loss(const MaskedBatch& batch, const model::Params<T>& params,
                          const model::ModelConfig& config, Rng* dropout_rng = nullptr);

}  // namespace stbert::trainer
