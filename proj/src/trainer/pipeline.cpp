// Copyright 2026 The stbert Authors
// SPDX-License-Identifier: Apache-2.0

#include "stbert/trainer/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "stbert/common/error.hpp"
#include "stbert/corpus/shortage.hpp"
#include "stbert/numerics/tensor_ops.hpp"
#include "stbert/trainer/adam.hpp"
#include "stbert/trainer/schedule.hpp"

namespace stbert::trainer {

using model::ModelConfig;
using model::PackedInput;
using model::PackMode;
using model::Params;

namespace {

// Independent random streams derived from a stage seed.
enum Stream : std::uint64_t { kInit = 0, kTasks = 1, kBatches = 2, kMasks = 3, kDropout = 4, kValidation = 5 };

std::string rng_to_string(const Rng& rng) {
  std::ostringstream s;
  s << rng;
  return s.str();
}

AdamHyper hyper_of(const TrainConfig& c) { return {c.beta1, c.beta2, c.adam_eps}; }

void check_task_layouts(const Dataset& data, const TrainConfig& config, const ModelConfig& model) {
  std::set<PackMode> modes;
  for (Task t : config.tasks) modes.insert(masking::pack_mode_for(t));
  for (PackMode m : modes) check_lengths(data, m, model.max_positions);
}

/// The shared masked-LM loop. Returns the task generator's final state.
std::string run_mlm(Params<float>& params, AdamState<float>& adam, const ModelConfig& model, const Dataset& data,
                    const TrainConfig& config, const std::string& stage, const StageHooks& hooks) {
  config.validate();
  if (config.tasks.empty()) throw DataError("train config: empty task set");
  if (data.empty()) throw DataError(stage + ": empty corpus");
  check_task_layouts(data, config, model);
  Rng task_rng(derive_seed(config.seed, kTasks));
  Rng mask_rng(derive_seed(config.seed, kMasks));
  Rng dropout_rng(derive_seed(config.seed, kDropout));
  BatchSampler sampler(data.size(), derive_seed(config.seed, kBatches));
  for (std::size_t step = 0; step < config.total_steps; ++step) {
    const Task task = curriculum_task(step, config, task_rng);
    const auto indices = sampler.next(config.batch_size);
    const auto batch = make_masked_batch(data, indices, task, config.mask_rate, model.max_positions, mask_rng);
    const double lr = lr_at(step, config);
    auto result = step_loss(batch, params, model, model.dropout > 0.0 ? &dropout_rng : nullptr);
    if (!result.loss.skipped) {
      if (config.max_grad_norm > 0.0) clip_grad_norm(result.grads, config.max_grad_norm);
      adam_step(params, result.grads, adam, lr, hyper_of(config));
    }
    if (hooks.history) hooks.history->push_back(result.loss);
    if (hooks.log) {
      hooks.log->step({step, stage, std::string(masking::task_name(task)), result.loss.value, lr,
                       result.loss.masked_count, result.loss.skipped});
    }
  }
  return rng_to_string(task_rng);
}

std::vector<int> labels_of(const Dataset& set, std::span<const std::size_t> indices, std::size_t intents) {
  std::vector<int> labels;
  for (std::size_t i : indices) {
    const auto& u = set.utterances[i];
    if (!u.intent) throw DataError("utterance " + u.id + " has no intent label");
    if (*u.intent < 0 || static_cast<std::size_t>(*u.intent) >= intents) {
      throw DataError("unknown intent index " + std::to_string(*u.intent) + " in utterance " + u.id);
    }
    labels.push_back(*u.intent);
  }
  return labels;
}

}  // namespace

Checkpoint pretrain(const Dataset& corpus, const ModelConfig& model, const TrainConfig& config, const Checkpoint* base,
                    const StageHooks& hooks) {
  model.validate();
  const bool text_only = config.tasks == std::vector<Task>{Task::kTextMlm};
  Checkpoint c;
  c.model = model;
  c.train = config;
  if (base) {
    c.params = model::init_params<float>(model, derive_seed(config.seed, kInit), &base->params);
    c.lineage = base->lineage;
  } else {
    c.params = model::init_params<float>(model, derive_seed(config.seed, kInit));
  }
  const std::string stage = text_only ? "base" : "pretrain";
  c.lineage.push_back(stage);
  auto adam = adam_init(c.params);
  c.state.rng_state = run_mlm(c.params, adam, model, corpus, config, stage, hooks);
  c.state.step = config.total_steps;
  c.state.adam = std::move(adam);
  return c;
}

Checkpoint dapt(const Checkpoint& from, const Dataset& domain, const TrainConfig& config, const StageHooks& hooks) {
  if (from.stage() != "pretrain" && from.stage() != "dapt") {
    throw DataError("dapt needs a pretrain or dapt checkpoint, got stage '" + from.stage() + "'");
  }
  Checkpoint c;
  c.model = from.model;
  c.train = config;
  c.params = from.params;
  c.lineage = from.lineage;
  c.lineage.push_back("dapt");
  auto adam = adam_init(c.params);
  if (config.total_steps > 0) {
    c.state.rng_state = run_mlm(c.params, adam, c.model, domain, config, "dapt", hooks);
  } else {
    c.state.rng_state = rng_to_string(Rng(derive_seed(config.seed, kTasks)));
  }
  c.state.step = config.total_steps;
  c.state.adam = std::move(adam);
  return c;
}

Checkpoint FinetuneResult::to_checkpoint(const TrainConfig& config) const {
  Checkpoint c;
  c.model = model;
  c.train = config;
  c.params = params;
  c.lineage = lineage;
  c.state.step = best_step;
  return c;
}

FinetuneResult finetune(const Checkpoint* from, const ModelConfig& fresh_model, const Dataset& labeled,
                        const TrainConfig& config, MetricsLog* log, const FinetuneProbe* probe) {
  config.validate();
  if (labeled.empty()) throw DataError("finetune: empty labeled set");
  FinetuneResult r;
  r.model = from ? from->model : fresh_model;
  r.model.validate();
  r.lineage = from ? from->lineage : std::vector<std::string>{};
  r.lineage.push_back("finetune");
  Params<float> params = from ? from->params : model::init_params<float>(r.model, derive_seed(config.seed, kInit));
  check_lengths(labeled, PackMode::kFinetune, r.model.max_positions);

  std::vector<std::size_t> all(labeled.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  labels_of(labeled, all, r.model.intents);  // validates every label up front

  std::vector<std::size_t> train_idx = all, val_idx;
  const auto n_val = static_cast<std::size_t>(std::llround(0.1 * static_cast<double>(labeled.size())));
  if (n_val >= 1 && n_val < labeled.size()) {
    val_idx = corpus::split_shortage(labeled.utterances, 0.1, 1, derive_seed(config.seed, kValidation)).front();
    train_idx.clear();
    std::set_difference(all.begin(), all.end(), val_idx.begin(), val_idx.end(), std::back_inserter(train_idx));
  }
  const Dataset train = labeled.select(train_idx);
  const Dataset val = val_idx.empty() ? train : labeled.select(val_idx);

  auto adam = adam_init(params);
  Rng dropout_rng(derive_seed(config.seed, kDropout));
  BatchSampler sampler(train.size(), derive_seed(config.seed, kBatches));
  bool have_best = false;
  double best_loss = 0.0;
  r.params = params;

  const auto validate_at = [&](std::size_t step) {
    const auto e = evaluate_detailed(params, r.model, val);
    EvalRecord rec{step, "finetune", "validation", e.accuracy, e.loss, std::nullopt};
    r.history.push_back(rec);
    if (log) log->eval(rec);
    if (!have_best || e.accuracy > r.best_accuracy || (e.accuracy == r.best_accuracy && e.loss < best_loss)) {
      have_best = true;
      r.best_accuracy = e.accuracy;
      best_loss = e.loss;
      r.best_step = step;
      r.params = params;
    }
  };

  for (std::size_t step = 0; step < config.total_steps; ++step) {
    const auto indices = sampler.next(config.batch_size);
    std::vector<PackedInput> batch;
    for (std::size_t i : indices) batch.push_back(train.pack(i, PackMode::kFinetune, r.model.max_positions));
    const auto labels = labels_of(train, indices, r.model.intents);

    num::Graph<float> g;
    const auto vars = model::bind_params(g, params);
    const auto encoded = model::forward(g, vars, r.model, batch, r.model.dropout > 0.0 ? &dropout_rng : nullptr);
    const auto logits = model::intent_logits(g, vars, encoded);
    const auto loss = g.cross_entropy(logits, labels);
    g.backward(loss);
    if (probe) (*probe)(batch, g, encoded, logits);
    auto grads = model::collect_grads(g, vars);
    if (config.max_grad_norm > 0.0) clip_grad_norm(grads, config.max_grad_norm);
    const double lr = lr_at(step, config);
    adam_step(params, grads, adam, lr, hyper_of(config));
    if (log) log->step({step, "finetune", "INTENT", static_cast<double>(g.value(loss).item()), lr, batch.size(), false});
    if ((step + 1) % config.eval_every == 0 || step + 1 == config.total_steps) validate_at(step + 1);
  }
  if (config.total_steps == 0) validate_at(0);
  return r;
}

EvalResult evaluate_detailed(const Params<float>& params, const ModelConfig& model, const Dataset& set,
                             std::size_t batch_size) {
  if (set.empty()) throw DataError("evaluate: empty set");
  std::vector<std::size_t> all(set.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  const auto labels = labels_of(set, all, model.intents);
  EvalResult r;
  std::size_t correct = 0;
  double loss_sum = 0.0;
  for (std::size_t begin = 0; begin < set.size(); begin += batch_size) {
    const std::size_t end = std::min(set.size(), begin + batch_size);
    std::vector<PackedInput> batch;
    for (std::size_t i = begin; i < end; ++i) batch.push_back(set.pack(i, PackMode::kFinetune, model.max_positions));
    num::Graph<float> g;
    g.set_grad_enabled(false);
    const auto vars = model::bind_params(g, params);
    const auto encoded = model::forward(g, vars, model, batch);
    const auto& logits = g.value(model::intent_logits(g, vars, encoded));
    const auto pred = num::argmax_rows(logits);
    const std::vector<int> gold(labels.begin() + static_cast<std::ptrdiff_t>(begin),
                                labels.begin() + static_cast<std::ptrdiff_t>(end));
    loss_sum += static_cast<double>(num::cross_entropy(logits, gold)) * static_cast<double>(end - begin);
    for (std::size_t k = 0; k < pred.size(); ++k) {
      r.predictions.push_back(pred[k]);
      if (pred[k] == gold[k]) ++correct;
    }
  }
  r.accuracy = static_cast<double>(correct) / static_cast<double>(set.size());
  r.loss = loss_sum / static_cast<double>(set.size());
  return r;
}

double evaluate(const Params<float>& params, const ModelConfig& model, const Dataset& set) {
  return evaluate_detailed(params, model, set).accuracy;
}

ShortageResult shortage_eval(const Checkpoint* from, const ModelConfig& fresh_model, const Dataset& labeled,
                             const Dataset& test, double fraction, std::size_t n_subsets, const TrainConfig& config,
                             MetricsLog* log) {
  ShortageResult r;
  r.subsets = corpus::split_shortage(labeled.utterances, fraction, n_subsets, config.seed);
  for (std::size_t k = 0; k < r.subsets.size(); ++k) {
    TrainConfig c = config;
    c.seed = config.seed + k;
    if (log) log->set_subset(static_cast<int>(k));
    const auto ft = finetune(from, fresh_model, labeled.select(r.subsets[k]), c, log);
    const auto e = evaluate_detailed(ft.params, ft.model, test);
    if (log) log->eval({ft.best_step, "finetune", "test", e.accuracy, e.loss, std::nullopt});
    r.accuracies.push_back(e.accuracy);
  }
  if (log) log->set_subset(std::nullopt);
  const double n = static_cast<double>(r.accuracies.size());
  r.mean = std::accumulate(r.accuracies.begin(), r.accuracies.end(), 0.0) / n;
  if (r.accuracies.size() > 1) {
    double ss = 0.0;
    for (double a : r.accuracies) ss += (a - r.mean) * (a - r.mean);
    r.stddev = std::sqrt(ss / (n - 1.0));
  }
  return r;
}

double heldout_mlm_loss(const Params<float>& params, const ModelConfig& model, const Dataset& set, Task task,
                        double mask_rate, std::uint64_t seed, std::size_t batch_size) {
  if (set.empty()) throw DataError("heldout_mlm_loss: empty set");
  Rng rng(seed);
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t begin = 0; begin < set.size(); begin += batch_size) {
    std::vector<std::size_t> idx(std::min(batch_size, set.size() - begin));
    std::iota(idx.begin(), idx.end(), begin);
    const auto batch = make_masked_batch(set, idx, task, mask_rate, model.max_positions, rng);
    num::Graph<float> g;
    g.set_grad_enabled(false);
    const auto vars = model::bind_params(g, params);
    const auto loss = masked_lm_loss(g, vars, model, batch);
    if (!loss.valid()) continue;
    sum += static_cast<double>(g.value(loss).item()) * static_cast<double>(batch.masked_count());
    count += batch.masked_count();
  }
  if (count == 0) throw DataError("heldout_mlm_loss: nothing masked");
  return sum / static_cast<double>(count);
}

double clm_token_accuracy(const Params<float>& params, const ModelConfig& model, const Dataset& set,
                          std::size_t batch_size) {
  if (set.empty()) throw DataError("clm_token_accuracy: empty set");
  Rng unused(0);
  std::size_t correct = 0, total = 0;
  for (std::size_t begin = 0; begin < set.size(); begin += batch_size) {
    std::vector<std::size_t> idx(std::min(batch_size, set.size() - begin));
    std::iota(idx.begin(), idx.end(), begin);
    const auto batch = make_masked_batch(set, idx, Task::kClmS2T, 0.0, model.max_positions, unused);
    std::vector<model::Position> pos;
    std::vector<int> targets;
    for (std::size_t s = 0; s < batch.plans.size(); ++s) {
      for (std::size_t k = 0; k < batch.plans[s].positions.size(); ++k) {
        pos.push_back({s, batch.plans[s].positions[k]});
        targets.push_back(batch.plans[s].targets[k]);
      }
    }
    if (pos.empty()) continue;
    num::Graph<float> g;
    g.set_grad_enabled(false);
    const auto vars = model::bind_params(g, params);
    const auto encoded = model::forward(g, vars, model, batch.inputs);
    const auto pred =
        num::argmax_rows(g.value(model::lm_logits(g, vars, encoded, batch.inputs, pos, model::Modality::kText)));
    for (std::size_t k = 0; k < pred.size(); ++k) correct += pred[k] == targets[k];
    total += pred.size();
  }
  if (total == 0) throw DataError("clm_token_accuracy: no text tokens");
  return static_cast<double>(correct) / static_cast<double>(total);
}

}  // namespace stbert::trainer
