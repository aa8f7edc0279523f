// Copyright 2026 The stbert Authors
// SPDX-License-Identifier: Apache-2.0

#include <functional>

#include "stbert/cli/commands.hpp"
#include "stbert/masking/mask_plan.hpp"
#include "stbert/model/network.hpp"
#include "stbert/numerics/grad_check.hpp"
#include "stbert/trainer/loss.hpp"

namespace stbert::cli {

namespace {

using num::Graph;
using num::Shape;
using num::Tensor;
using num::Var;

Tensor<double> random_tensor(Shape shape, Rng& rng, double scale = 1.0) {
  Tensor<double> t(std::move(shape));
  for (auto& v : t.values()) v = scale * normal01(rng);
  return t;
}

/// Checks loss = sum(op(inputs) * R) for a fixed random R, so every output
/// element carries a distinct, order-one weight.
GradientResult check_op(const std::string& name, std::vector<Tensor<double>> inputs,
                        const std::function<Var(Graph<double>&, std::span<const Var>)>& op, Rng& rng) {
  Tensor<double> weights;
  {
    Graph<double> g;
    std::vector<Var> leaves;
    for (auto& t : inputs) leaves.push_back(g.param(t));
    weights = random_tensor(g.value(op(g, leaves)).shape(), rng);
  }
  const num::ScalarFunction f = [&](Graph<double>& g, std::span<const Var> leaves) {
    const Var y = op(g, leaves);
    if (g.value(y).numel() == 1 && weights.numel() == 1) return g.scale(y, weights[0]);
    return g.sum(g.mul(y, g.constant(weights)));
  };
  std::vector<Tensor<double>*> ptrs;
  for (auto& t : inputs) ptrs.push_back(&t);
  const auto report = num::grad_check(f, ptrs, {1e-5, 100000, 7});
  return {name, report.max_relative_error, report.coordinates_checked};
}

corpus::AlignedUtterance toy_utterance(std::string id, std::vector<int> phonemes, std::vector<int> durations,
                                       std::vector<int> subwords) {
  corpus::AlignedUtterance u;
  u.id = std::move(id);
  std::uint32_t t = 0;
  for (std::size_t i = 0; i < phonemes.size(); ++i) {
    u.segments.push_back({phonemes[i], t, t + static_cast<std::uint32_t>(durations[i])});
    t += static_cast<std::uint32_t>(durations[i]);
  }
  u.subword_ids = std::move(subwords);
  u.intent = 1;
  return u;
}

model::ParamVars vars_from_leaves(std::span<const Var> leaves, std::size_t layers) {
  model::ParamVars vars;
  vars.layers.resize(layers);
  std::size_t i = 0;
  vars.visit([&](const std::string&, Var& v) { v = leaves[i++]; });
  return vars;
}

/// Softmax attention is invariant to the key bias (it shifts every score of
/// a query row equally), so its exact gradient is zero and finite
/// differences would only measure rounding noise. It is held constant.
bool gradient_free(const std::string& name) { return name.find("attention.key.bias") != std::string::npos; }

GradientResult check_model_loss(const std::string& name, const model::ModelConfig& config,
                                model::Params<double> params,
                                const std::function<Var(Graph<double>&, const model::ParamVars&)>& loss,
                                std::uint64_t seed) {
  std::vector<Tensor<double>*> ptrs;
  params.visit([&](const std::string& n, Tensor<double>& t) {
    if (!gradient_free(n)) ptrs.push_back(&t);
  });
  const num::ScalarFunction f = [&](Graph<double>& g, std::span<const Var> leaves) {
    std::size_t i = 0;
    std::vector<Var> all;
    params.visit([&](const std::string& n, const Tensor<double>& t) {
      all.push_back(gradient_free(n) ? g.constant(t) : leaves[i++]);
    });
    return loss(g, vars_from_leaves(all, config.layers));
  };
  const auto report = num::grad_check(f, ptrs, {1e-3, 400, seed, num::Stencil::kFivePoint});
  return {name, report.max_relative_error, report.coordinates_checked};
}

}  // namespace

std::vector<GradientResult> gradient_suite(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<GradientResult> out;
  const auto t = [&](Shape s) { return random_tensor(std::move(s), rng); };

  out.push_back(check_op("matmul", {t({3, 4}), t({4, 5})},
                         [](Graph<double>& g, std::span<const Var> x) { return g.matmul(x[0], x[1]); }, rng));
  out.push_back(check_op("matmul_transposed", {t({3, 4}), t({5, 4})},
                         [](Graph<double>& g, std::span<const Var> x) { return g.matmul(x[0], x[1], true); }, rng));
  out.push_back(check_op("add", {t({3, 4}), t({3, 4})},
                         [](Graph<double>& g, std::span<const Var> x) { return g.add(x[0], x[1]); }, rng));
  out.push_back(check_op("mul", {t({3, 4}), t({3, 4})},
                         [](Graph<double>& g, std::span<const Var> x) { return g.mul(x[0], x[1]); }, rng));
  out.push_back(check_op("scale", {t({3, 4})},
                         [](Graph<double>& g, std::span<const Var> x) { return g.scale(x[0], -1.7); }, rng));
  out.push_back(check_op("add_bias", {t({3, 4}), t({4})},
                         [](Graph<double>& g, std::span<const Var> x) { return g.add_bias(x[0], x[1]); }, rng));
  out.push_back(check_op("gather_rows", {t({5, 3})},
                         [](Graph<double>& g, std::span<const Var> x) { return g.gather_rows(x[0], {4, 0, 4, 2}); },
                         rng));
  out.push_back(check_op("softmax_rows", {t({3, 5})},
                         [](Graph<double>& g, std::span<const Var> x) { return g.softmax(x[0], 1); }, rng));
  out.push_back(check_op("softmax_columns", {t({4, 3})},
                         [](Graph<double>& g, std::span<const Var> x) { return g.softmax(x[0], 0); }, rng));
  out.push_back(check_op("layer_norm", {t({3, 6}), t({6}), t({6})},
                         [](Graph<double>& g, std::span<const Var> x) { return g.layer_norm(x[0], x[1], x[2], 1e-5); },
                         rng));
  out.push_back(check_op("gelu", {t({4, 5})}, [](Graph<double>& g, std::span<const Var> x) { return g.gelu(x[0]); },
                         rng));
  out.push_back(check_op("cross_entropy", {t({4, 6})},
                         [](Graph<double>& g, std::span<const Var> x) { return g.cross_entropy(x[0], {1, 5, 0, 1}); },
                         rng));
  out.push_back(check_op("concat_rows", {t({2, 3}), t({4, 3})},
                         [](Graph<double>& g, std::span<const Var> x) { return g.concat(x.subspan(0, 2), 0); }, rng));
  out.push_back(check_op("concat_columns", {t({3, 2}), t({3, 4})},
                         [](Graph<double>& g, std::span<const Var> x) { return g.concat(x.subspan(0, 2), 1); }, rng));
  out.push_back(check_op("slice_rows", {t({5, 3})},
                         [](Graph<double>& g, std::span<const Var> x) { return g.slice(x[0], 0, 1, 4); }, rng));
  out.push_back(check_op("slice_columns", {t({3, 5})},
                         [](Graph<double>& g, std::span<const Var> x) { return g.slice(x[0], 1, 2, 5); }, rng));
  out.push_back(check_op("dropout_fixed_mask", {t({4, 5})},
                         [](Graph<double>& g, std::span<const Var> x) {
                           Rng mask_rng(99);  // same mask on every evaluation
                           return g.dropout(x[0], 0.3, mask_rng);
                         },
                         rng));
  out.push_back(check_op("sum", {t({3, 4})}, [](Graph<double>& g, std::span<const Var> x) { return g.sum(x[0]); },
                         rng));

  // Full network on a 2-utterance batch. A larger-than-training init scale
  // keeps most gradients well above the finite-difference noise floor.
  model::ModelConfig config;
  config.hidden = 8;
  config.layers = 2;
  config.heads = 2;
  config.ff_dim = 16;
  config.phonemes = 6;
  config.vocab = 12;
  config.max_positions = 24;
  config.intents = 3;
  config.init_std = 0.35;
  const auto params = model::init_params<double>(config, derive_seed(seed, 11));
  const acoustic::PosteriorNoise noise;
  std::vector<corpus::AlignedUtterance> utts = {
      toy_utterance("a", {0, 3, 5, 2}, {2, 1, 3, 2}, {5, 7, 9}),
      toy_utterance("b", {4, 1, 1}, {1, 2, 2}, {6, 11}),
  };
  const auto data = trainer::make_dataset(utts, config.phonemes, noise, seed);

  for (masking::Task task : {masking::Task::kCmMlm, masking::Task::kClmS2T, masking::Task::kClmT2S,
                             masking::Task::kSpeechMlm, masking::Task::kTextMlm}) {
    Rng mask_rng(derive_seed(seed, 12));
    const std::size_t idx[] = {0, 1};
    const auto batch = trainer::make_masked_batch(data, idx, task, 0.5, config.max_positions, mask_rng);
    if (batch.masked_count() == 0) continue;
    out.push_back(check_model_loss(
        "model_" + std::string(masking::task_name(task)), config, params,
        [&](Graph<double>& g, const model::ParamVars& vars) { return trainer::masked_lm_loss(g, vars, config, batch); },
        derive_seed(seed, 13)));
  }
  std::vector<model::PackedInput> ft = {data.pack(0, model::PackMode::kFinetune, config.max_positions),
                                        data.pack(1, model::PackMode::kFinetune, config.max_positions)};
  const int labels[] = {0, 2};
  out.push_back(check_model_loss(
      "model_INTENT", config, params,
      [&](Graph<double>& g, const model::ParamVars& vars) { return trainer::intent_loss(g, vars, config, ft, labels); },
      derive_seed(seed, 14)));
  return out;
}

}  // namespace stbert::cli
