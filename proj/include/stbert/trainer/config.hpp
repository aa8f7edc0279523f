// Copyright 2026 The stbert Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "stbert/masking/mask_plan.hpp"

namespace stbert::trainer {

using masking::Task;

struct TrainConfig {
  std::size_t total_steps = 3000;
  std::size_t batch_size = 64;
  double peak_lr = 1e-4;
  double warmup_fraction = 0.1;
  double curriculum_fraction = 1.0 / 3.0;
  double mask_rate = 0.15;
  std::vector<Task> tasks{Task::kCmMlm, Task::kClmS2T, Task::kClmT2S};
  std::uint64_t seed = 0;
  std::size_t eval_every = 50;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  /// Global gradient-norm clip; 0 disables clipping.
  double max_grad_norm = 0.0;

  static TrainConfig finetune_defaults();
  /// Throws DataError when an invariant does not hold.
  void validate() const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

std::string tasks_to_string(const std::vector<Task>& tasks);
/// Comma-separated task names; throws DataError on unknown names.
std::vector<Task> tasks_from_string(const std::string& text);

}  // namespace stbert::trainer
