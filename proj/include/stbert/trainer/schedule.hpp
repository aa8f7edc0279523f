// Copyright 2026 The stbert Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>

#include "stbert/common/random.hpp"
#include "stbert/trainer/config.hpp"

namespace stbert::trainer {

/// First step after the warm-start (CM-MLM only) phase: ceil(fraction * total).
std::size_t curriculum_boundary(std::size_t total_steps, double curriculum_fraction);

/// Task for `step`. Before the curriculum boundary this is CM_MLM (or the
/// canonically first task when CM_MLM is not in the set); afterwards a
/// uniform draw from the task set.
Task curriculum_task(std::size_t step, const TrainConfig& config, Rng& rng);

/// Linear warmup from 0 to peak over floor(warmup_fraction * total) steps,
/// then linear decay to 0 at total_steps.
double lr_at(std::size_t step, const TrainConfig& config);

}  // namespace stbert::trainer
