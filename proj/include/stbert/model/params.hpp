// Copyright 2026 The stbert Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "stbert/numerics/graph.hpp"
#include "stbert/numerics/tensor.hpp"

namespace stbert::model {

struct ModelConfig {
  std::size_t hidden = 64;
  std::size_t layers = 2;
  std::size_t heads = 4;
  std::size_t ff_dim = 256;
  std::size_t phonemes = 40;
  std::size_t vocab = 256;
  std::size_t max_positions = 256;
  std::size_t intents = 31;
  double init_std = 0.02;
  double dropout = 0.0;
  double layer_norm_eps = 1e-12;

  /// Throws DataError on inconsistent dimensions.
  void validate() const;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Rows of the special-token embedding table.
enum SpecialToken : int { kSpecialCls = 0, kSpecialSep = 1, kSpecialMask = 2, kSpecialPad = 3, kSpecialCount = 4 };

template <typename E>
struct LayerSet {
  E query_w, query_b, key_w, key_b, value_w, value_b, out_w, out_b;
  E attn_norm_g, attn_norm_b;
  E ff_in_w, ff_in_b, ff_out_w, ff_out_b;
  E ff_norm_g, ff_norm_b;

  template <typename F>
  void visit(const std::string& prefix, F&& f) {
    f(prefix + "attention.query.weight", query_w);
    f(prefix + "attention.query.bias", query_b);
    f(prefix + "attention.key.weight", key_w);
    f(prefix + "attention.key.bias", key_b);
    f(prefix + "attention.value.weight", value_w);
    f(prefix + "attention.value.bias", value_b);
    f(prefix + "attention.output.weight", out_w);
    f(prefix + "attention.output.bias", out_b);
    f(prefix + "attention.norm.gamma", attn_norm_g);
    f(prefix + "attention.norm.beta", attn_norm_b);
    f(prefix + "ffn.in.weight", ff_in_w);
    f(prefix + "ffn.in.bias", ff_in_b);
    f(prefix + "ffn.out.weight", ff_out_w);
    f(prefix + "ffn.out.bias", ff_out_b);
    f(prefix + "ffn.norm.gamma", ff_norm_g);
    f(prefix + "ffn.norm.beta", ff_norm_b);
  }
};

/// Every trainable tensor of the network. `E` is a Tensor for storage and
/// gradients, or a graph Var for a bound forward pass. Weight matrices are
/// stored input-major (y = x W + b). The subword LM head reuses
/// subword_embedding (transposed) and only owns a bias.
template <typename E>
struct ParamSet {
  E phoneme_embedding;  // P x d
  E subword_embedding;  // V x d
  E special_embedding;  // 4 x d: [CLS], [SEP], [MASK], [PAD]
  E modality_embedding;  // 2 x d: speech, text
  E position_embedding;  // N x d
  std::vector<LayerSet<E>> layers;
  E phoneme_head_w;  // d x P
  E phoneme_head_b;  // P
  E subword_head_b;  // V
  E intent_head_w;  // d x C
  E intent_head_b;  // C

  template <typename F>
  void visit(F&& f) {
    f(std::string("embeddings.phoneme"), phoneme_embedding);
    f(std::string("embeddings.subword"), subword_embedding);
    f(std::string("embeddings.special"), special_embedding);
    f(std::string("embeddings.modality"), modality_embedding);
    f(std::string("embeddings.position"), position_embedding);
    for (std::size_t i = 0; i < layers.size(); ++i) {
      layers[i].visit("encoder.layer" + std::to_string(i) + ".", f);
    }
    f(std::string("heads.phoneme.weight"), phoneme_head_w);
    f(std::string("heads.phoneme.bias"), phoneme_head_b);
    f(std::string("heads.subword.bias"), subword_head_b);
    f(std::string("heads.intent.weight"), intent_head_w);
    f(std::string("heads.intent.bias"), intent_head_b);
  }

  template <typename F>
  void visit(F&& f) const {
    const_cast<ParamSet*>(this)->visit([&f](const std::string& name, E& e) { f(name, static_cast<const E&>(e)); });
  }
};

template <typename T>
using Params = ParamSet<num::Tensor<T>>;
using ParamVars = ParamSet<num::Var>;

/// Tensors excluded from copying when initializing from a text-only base:
/// they have no counterpart in a text model.
bool is_speech_specific(const std::string& name);

/// Fresh init: truncated normal (std = init_std, cut at 2 std) for matrices
/// and embeddings, layer-norm gains 1, biases 0. With `base`, every tensor
/// except the speech-specific ones is copied from it; a shape mismatch
/// throws DataError naming the tensor.
template <typename T>
Params<T> init_params(const ModelConfig& config, std::uint64_t seed, const Params<T>* base = nullptr);

/// Zero tensors shaped like `like`.
template <typename T>
Params<T> zeros_like(const Params<T>& like);

template <typename T, typename U>
Params<U> cast_params(const Params<T>& p);

/// Registers every tensor of `params` as a trainable leaf of `graph`.
template <typename T>
ParamVars bind_params(num::Graph<T>& graph, const Params<T>& params);

/// Gradients of every bound parameter after graph.backward().
template <typename T>
Params<T> collect_grads(const num::Graph<T>& graph, const ParamVars& vars);

std::size_t parameter_count(const Params<float>& p);

}  // namespace stbert::model
