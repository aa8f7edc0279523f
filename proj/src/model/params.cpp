// Copyright 2026 The stbert Authors
// SPDX-License-Identifier: Apache-2.0

#include "stbert/model/params.hpp"

#include <map>

#include "stbert/common/error.hpp"
#include "stbert/common/random.hpp"

namespace stbert::model {

using num::Shape;
using num::Tensor;

void ModelConfig::validate() const {
  if (hidden == 0 || heads == 0 || ff_dim == 0) throw DataError("model config: zero dimension");
  if (hidden % heads != 0) {
    throw DataError("model config: hidden " + std::to_string(hidden) + " not divisible by heads " +
                    std::to_string(heads));
  }
  if (phonemes == 0 || vocab == 0 || intents == 0 || max_positions < 3) {
    throw DataError("model config: empty vocabulary, intent set or position table");
  }
  if (!(init_std > 0.0)) throw DataError("model config: init_std must be positive");
  if (dropout < 0.0 || dropout >= 1.0) throw DataError("model config: dropout must be in [0,1)");
}

bool is_speech_specific(const std::string& name) {
  return name == "embeddings.phoneme" || name == "embeddings.modality" || name.rfind("heads.phoneme.", 0) == 0;
}

namespace {

template <typename T>
Tensor<T> truncated_normal(Shape shape, double std, Rng& rng) {
  Tensor<T> t(std::move(shape));
  for (auto& v : t.values()) {
    double z = normal01(rng);
    while (z < -2.0 || z > 2.0) z = normal01(rng);
    v = static_cast<T>(z * std);
  }
  return t;
}

}  // namespace

template <typename T>
Params<T> init_params(const ModelConfig& c, std::uint64_t seed, const Params<T>* base) {
  c.validate();
  Rng rng(seed);
  const auto d = c.hidden;
  const auto normal = [&](Shape s) { return truncated_normal<T>(std::move(s), c.init_std, rng); };
  const auto zeros = [](Shape s) { return Tensor<T>(std::move(s)); };
  const auto ones = [](Shape s) { return Tensor<T>(std::move(s), T(1)); };

  Params<T> p;
  p.phoneme_embedding = normal({c.phonemes, d});
  p.subword_embedding = normal({c.vocab, d});
  p.special_embedding = normal({kSpecialCount, d});
  p.modality_embedding = normal({2, d});
  p.position_embedding = normal({c.max_positions, d});
  for (std::size_t l = 0; l < c.layers; ++l) {
    LayerSet<Tensor<T>> layer;
    layer.query_w = normal({d, d});
    layer.query_b = zeros({d});
    layer.key_w = normal({d, d});
    layer.key_b = zeros({d});
    layer.value_w = normal({d, d});
    layer.value_b = zeros({d});
    layer.out_w = normal({d, d});
    layer.out_b = zeros({d});
    layer.attn_norm_g = ones({d});
    layer.attn_norm_b = zeros({d});
    layer.ff_in_w = normal({d, c.ff_dim});
    layer.ff_in_b = zeros({c.ff_dim});
    layer.ff_out_w = normal({c.ff_dim, d});
    layer.ff_out_b = zeros({d});
    layer.ff_norm_g = ones({d});
    layer.ff_norm_b = zeros({d});
    p.layers.push_back(std::move(layer));
  }
  p.phoneme_head_w = normal({d, c.phonemes});
  p.phoneme_head_b = zeros({c.phonemes});
  p.subword_head_b = zeros({c.vocab});
  p.intent_head_w = normal({d, c.intents});
  p.intent_head_b = zeros({c.intents});

  if (base) {
    std::map<std::string, const Tensor<T>*> source;
    base->visit([&](const std::string& name, const Tensor<T>& t) { source[name] = &t; });
    p.visit([&](const std::string& name, Tensor<T>& t) {
      if (is_speech_specific(name)) return;
      auto it = source.find(name);
      if (it == source.end()) throw DataError("base checkpoint lacks tensor " + name);
      if (it->second->shape() != t.shape()) {
        throw DataError("base checkpoint shape mismatch for " + name + ": " + num::shape_str(it->second->shape()) +
                        " vs " + num::shape_str(t.shape()));
      }
      t = *it->second;
    });
  }
  return p;
}

template <typename T>
Params<T> zeros_like(const Params<T>& like) {
  Params<T> out = like;
  out.visit([](const std::string&, Tensor<T>& t) { t.fill(T(0)); });
  return out;
}

template <typename T, typename U>
Params<U> cast_params(const Params<T>& p) {
  Params<U> out;
  out.layers.resize(p.layers.size());
  std::vector<const Tensor<T>*> src;
  p.visit([&](const std::string&, const Tensor<T>& t) { src.push_back(&t); });
  std::size_t i = 0;
  out.visit([&](const std::string&, Tensor<U>& t) { t = src[i++]->template cast<U>(); });
  return out;
}

template <typename T>
ParamVars bind_params(num::Graph<T>& graph, const Params<T>& params) {
  ParamVars vars;
  vars.layers.resize(params.layers.size());
  std::vector<std::pair<std::string, const Tensor<T>*>> src;
  params.visit([&](const std::string& name, const Tensor<T>& t) { src.emplace_back(name, &t); });
  std::size_t i = 0;
  vars.visit([&](const std::string&, num::Var& v) {
    v = graph.param(*src[i].second, src[i].first);
    ++i;
  });
  return vars;
}

template <typename T>
Params<T> collect_grads(const num::Graph<T>& graph, const ParamVars& vars) {
  Params<T> out;
  out.layers.resize(vars.layers.size());
  std::vector<num::Var> src;
  vars.visit([&](const std::string&, const num::Var& v) { src.push_back(v); });
  std::size_t i = 0;
  out.visit([&](const std::string&, Tensor<T>& t) { t = graph.grad(src[i++]); });
  return out;
}

std::size_t parameter_count(const Params<float>& p) {
  std::size_t n = 0;
  p.visit([&](const std::string&, const Tensor<float>& t) { n += t.numel(); });
  return n;
}

template Params<float> init_params(const ModelConfig&, std::uint64_t, const Params<float>*);
template Params<double> init_params(const ModelConfig&, std::uint64_t, const Params<double>*);
template Params<float> zeros_like(const Params<float>&);
template Params<double> zeros_like(const Params<double>&);
template Params<double> cast_params<float, double>(const Params<float>&);
template Params<float> cast_params<double, float>(const Params<double>&);
template ParamVars bind_params(num::Graph<float>&, const Params<float>&);
template ParamVars bind_params(num::Graph<double>&, const Params<double>&);
template Params<float> collect_grads(const num::Graph<float>&, const ParamVars&);
template Params<double> collect_grads(const num::Graph<double>&, const ParamVars&);

}  // namespace stbert::model
