// Copyright 2026 The stbert Authors
// SPDX-License-Identifier: Apache-2.0

#include "stbert/trainer/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "stbert/common/error.hpp"

namespace stbert::trainer {

TrainConfig TrainConfig::finetune_defaults() {
  TrainConfig c;
  c.total_steps = 500;
  c.batch_size = 32;
  c.tasks = {};
  return c;
}

void TrainConfig::validate() const {
  if (!(curriculum_fraction > 0.0 && curriculum_fraction < 1.0)) {
    throw DataError("train config: curriculum_fraction must be in (0, 1)");
  }
  if (!(peak_lr > 0.0)) throw DataError("train config: peak_lr must be positive");
  if (!(warmup_fraction >= 0.0 && warmup_fraction < 1.0)) {
    throw DataError("train config: warmup_fraction must be in [0, 1)");
  }
  if (!(mask_rate >= 0.0 && mask_rate < 1.0)) throw DataError("train config: mask_rate must be in [0, 1)");
  if (batch_size == 0) throw DataError("train config: batch_size must be positive");
  if (eval_every == 0) throw DataError("train config: eval_every must be positive");
  if (max_grad_norm < 0.0) throw DataError("train config: max_grad_norm must be non-negative");
}

std::string tasks_to_string(const std::vector<Task>& tasks) {
  std::string out;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (i) out += ',';
    out += masking::task_name(tasks[i]);
  }
  return out;
}

std::vector<Task> tasks_from_string(const std::string& text) {
  std::vector<Task> tasks;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (item.empty()) continue;
    const auto t = masking::parse_task(item);
    if (!t) throw DataError("unknown task '" + item + "'");
    if (std::find(tasks.begin(), tasks.end(), *t) == tasks.end()) tasks.push_back(*t);
  }
  return tasks;
}

std::size_t curriculum_boundary(std::size_t total_steps, double curriculum_fraction) {
  // Guard against 1/3 * 9 evaluating to 3.0000000000000004.
  const double exact = curriculum_fraction * static_cast<double>(total_steps);
  return static_cast<std::size_t>(std::ceil(exact - 1e-9));
}

Task curriculum_task(std::size_t step, const TrainConfig& config, Rng& rng) {
  if (config.tasks.empty()) throw DataError("curriculum_task: empty task set");
  std::vector<Task> ordered;
  for (Task t : masking::kAllTasks) {
    if (std::find(config.tasks.begin(), config.tasks.end(), t) != config.tasks.end()) ordered.push_back(t);
  }
  if (step < curriculum_boundary(config.total_steps, config.curriculum_fraction)) {
    return ordered.front();  // CM_MLM whenever present: it is first in canonical order
  }
  if (ordered.size() == 1) return ordered.front();
  return ordered[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(ordered.size()) - 1))];
}

double lr_at(std::size_t step, const TrainConfig& config) {
  const std::size_t total = config.total_steps;
  if (total == 0) return 0.0;
  const auto warmup = static_cast<std::size_t>(std::floor(config.warmup_fraction * static_cast<double>(total)));
  if (step < warmup) return config.peak_lr * static_cast<double>(step) / static_cast<double>(warmup);
  if (step >= total) return 0.0;
  return config.peak_lr * static_cast<double>(total - step) / static_cast<double>(total - warmup);
}

}  // namespace stbert::trainer
