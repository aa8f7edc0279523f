// Copyright 2026 The stbert Authors
// SPDX-License-Identifier: Apache-2.0

#include "stbert/trainer/loss.hpp"

#include "stbert/common/error.hpp"

namespace stbert::trainer {

using model::Modality;
using model::Position;

std::size_t MaskedBatch::masked_count() const {
  std::size_t n = 0;
  for (const auto& p : plans) n += p.positions.size();
  return n;
}

MaskedBatch make_masked_batch(const Dataset& data, std::span<const std::size_t> indices, Task task,
                              double mask_rate, std::size_t max_positions, Rng& rng) {
  MaskedBatch b;
  b.task = task;
  const auto mode = masking::pack_mode_for(task);
  for (std::size_t i : indices) {
    const auto packed = data.pack(i, mode, max_positions);
    auto plan = masking::plan_for_task(task, packed, mask_rate, rng);
    b.inputs.push_back(masking::apply_plan(packed, plan));
    b.plans.push_back(std::move(plan));
  }
  return b;
}

template <typename T>
num::Var masked_lm_loss(num::Graph<T>& g, const model::ParamVars& p, const model::ModelConfig& config,
                        const MaskedBatch& batch, Rng* dropout_rng) {
  if (batch.inputs.size() != batch.plans.size()) throw std::invalid_argument("masked_lm_loss: plan count mismatch");
  std::vector<Position> speech, text;
  std::vector<int> speech_targets, text_targets;
  for (std::size_t s = 0; s < batch.inputs.size(); ++s) {
    const auto& in = batch.inputs[s];
    const auto& plan = batch.plans[s];
    for (std::size_t k = 0; k < plan.positions.size(); ++k) {
      const auto& slot = in.slots.at(plan.positions[k]);
      const bool is_speech = slot.modality == Modality::kSpeech;
      (is_speech ? speech : text).push_back({s, plan.positions[k]});
      (is_speech ? speech_targets : text_targets).push_back(plan.targets[k]);
    }
  }
  const std::size_t total = speech.size() + text.size();
  if (total == 0) return {};
  const auto encoded = model::forward(g, p, config, batch.inputs, dropout_rng);
  num::Var loss;
  const auto add_term = [&](const std::vector<Position>& pos, std::vector<int> targets, Modality m) {
    if (pos.empty()) return;
    auto logits = model::lm_logits(g, p, encoded, batch.inputs, pos, m);
    // Rescale each modality's mean so the sum is the pooled per-position mean.
    auto term = g.scale(g.cross_entropy(logits, std::move(targets)),
                        static_cast<T>(static_cast<double>(pos.size()) / static_cast<double>(total)));
    loss = loss.valid() ? g.add(loss, term) : term;
  };
  add_term(speech, std::move(speech_targets), Modality::kSpeech);
  add_term(text, std::move(text_targets), Modality::kText);
  return loss;
}

template <typename T>
num::Var intent_loss(num::Graph<T>& g, const model::ParamVars& p, const model::ModelConfig& config,
                     std::span<const model::PackedInput> inputs, std::span<const int> labels, Rng* dropout_rng) {
  if (inputs.size() != labels.size() || inputs.empty()) throw std::invalid_argument("intent_loss: bad batch");
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= config.intents) {
      throw DataError("unknown intent index " + std::to_string(y));
    }
  }
  const auto encoded = model::forward(g, p, config, inputs, dropout_rng);
  return g.cross_entropy(model::intent_logits(g, p, encoded), std::vector<int>(labels.begin(), labels.end()));
}

template <typename T>
LossAndGrads<T> step_loss(const MaskedBatch& batch, const model::Params<T>& params, const model::ModelConfig& config,
                          Rng* dropout_rng) {
  LossAndGrads<T> out;
  out.loss.task = batch.task;
  out.loss.masked_count = batch.masked_count();
  num::Graph<T> g;
  const auto vars = model::bind_params(g, params);
  const auto loss = masked_lm_loss(g, vars, config, batch, dropout_rng);
  if (!loss.valid()) {
    out.loss.skipped = true;
    return out;
  }
  g.backward(loss);
  out.loss.value = static_cast<double>(g.value(loss).item());
  out.grads = model::collect_grads(g, vars);
  return out;
}

template num::Var masked_lm_loss(num::Graph<float>&, const model::ParamVars&, const model::ModelConfig&,
                                 const MaskedBatch&, Rng*);
template num::Var masked_lm_loss(num::Graph<double>&, const model::ParamVars&, const model::ModelConfig&,
                                 const MaskedBatch&, Rng*);
template num::Var intent_loss(num::Graph<float>&, const model::ParamVars&, const model::ModelConfig&,
                              std::span<const model::PackedInput>, std::span<const int>, Rng*);
template num::Var intent_loss(num::Graph<double>&, const model::ParamVars&, const model::ModelConfig&,
                              std::span<const model::PackedInput>, std::span<const int>, Rng*);
template LossAndGrads<float> step_loss(const MaskedBatch&, const model::Params<float>&, const model::ModelConfig&,
                                       Rng*);
template LossAndGrads<double> step_loss(const MaskedBatch&, const model::Params<double>&,
                                        const model::ModelConfig&, Rng*);

}  // namespace stbert::trainer
