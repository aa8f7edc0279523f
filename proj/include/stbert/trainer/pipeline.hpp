// Copyright 2026 The stbert Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "stbert/model/network.hpp"
#include "stbert/trainer/checkpoint.hpp"
#include "stbert/trainer/config.hpp"
#include "stbert/trainer/dataset.hpp"
#include "stbert/trainer/loss.hpp"
#include "stbert/trainer/metrics.hpp"

namespace stbert::trainer {

/// Optional sinks shared by the training stages.
struct StageHooks {
  MetricsLog* log = nullptr;
  /// Receives every step's loss, skipped steps included.
  std::vector<StepLoss>* history = nullptr;
};

/// Masked-LM pre-training for config.total_steps steps: curriculum task,
/// batch, mask, loss, Adam. With `base`, parameters start from it (speech-
/// specific tensors freshly initialized). A task set of {TEXT_MLM} alone
/// produces a "base" stage checkpoint, anything else "pretrain".
Checkpoint pretrain(const Dataset& corpus, const model::ModelConfig& model, const TrainConfig& config,
                    const Checkpoint* base = nullptr, const StageHooks& hooks = {});

/// Continues pre-training from a "pretrain" or "dapt" checkpoint on
/// in-domain data with a fresh optimizer and schedule.
Checkpoint dapt(const Checkpoint& from, const Dataset& domain, const TrainConfig& config,
                const StageHooks& hooks = {});

/// Called after backward on every fine-tuning batch.
using FinetuneProbe = std::function<void(std::span<const model::PackedInput> batch, const num::Graph<float>& graph,
                                         const model::EncodedBatch& encoded, num::Var logits)>;

struct FinetuneResult {
  model::ModelConfig model;
  /// Parameters at the best validation evaluation.
  model::Params<float> params;
  std::vector<EvalRecord> history;
  std::size_t best_step = 0;
  double best_accuracy = 0.0;
  std::vector<std::string> lineage;

  Checkpoint to_checkpoint(const TrainConfig& config) const;
};

/// Intent fine-tuning on speech-only packed inputs. `from` may be null (fresh
/// init of `fresh_model`). 10% of `labeled` (stratified, seed-derived) is
/// held out for best-checkpoint selection; when that rounds to zero items the
/// training set itself is used.
FinetuneResult finetune(const Checkpoint* from, const model::ModelConfig& fresh_model, const Dataset& labeled,
                        const TrainConfig& config, MetricsLog* log = nullptr, const FinetuneProbe* probe = nullptr);

struct EvalResult {
  double accuracy = 0.0;
  double loss = 0.0;
  std::vector<int> predictions;
};

EvalResult evaluate_detailed(const model::Params<float>& params, const model::ModelConfig& model, const Dataset& set,
                             std::size_t batch_size = 64);
/// Fraction of utterances whose argmax intent (ties to the lower index)
/// matches the gold intent. Throws DataError on an empty or unlabeled set.
double evaluate(const model::Params<float>& params, const model::ModelConfig& model, const Dataset& set);

struct ShortageResult {
  double mean = 0.0;
  /// Sample standard deviation (0 for a single subset).
  double stddev = 0.0;
  std::vector<double> accuracies;
  std::vector<std::vector<std::size_t>> subsets;
};

/// Fine-tunes independently on each label subset (subset k uses seed
/// config.seed + k) and evaluates each on `test`.
ShortageResult shortage_eval(const Checkpoint* from, const model::ModelConfig& fresh_model, const Dataset& labeled,
                             const Dataset& test, double fraction, std::size_t n_subsets, const TrainConfig& config,
                             MetricsLog* log = nullptr);

/// Mean masked-LM loss per masked position over `set` with masks drawn from
/// `seed`.
double heldout_mlm_loss(const model::Params<float>& params, const model::ModelConfig& model, const Dataset& set,
                        Task task, double mask_rate, std::uint64_t seed, std::size_t batch_size = 32);

/// Speech-to-text token accuracy with the whole transcript masked.
double clm_token_accuracy(const model::Params<float>& params, const model::ModelConfig& model, const Dataset& set,
                          std::size_t batch_size = 32);

}  // namespace stbert::trainer
