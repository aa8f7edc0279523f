// Copyright 2026 The stbert Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "stbert/common/random.hpp"
#include "stbert/model/packing.hpp"
#include "stbert/model/params.hpp"
#include "stbert/numerics/graph.hpp"

namespace stbert::model {

/// A slot within a batch of packed inputs.
struct Position {
  std::size_t sequence = 0;
  std::size_t slot = 0;
};

/// Hidden states of a batch stacked row-wise; sequence i occupies rows
/// [offsets[i], offsets[i + 1]).
struct EncodedBatch {
  num::Var hidden;
  std::vector<std::size_t> offsets;

  std::size_t row(Position p) const { return offsets[p.sequence] + p.slot; }
  /// Rows holding each sequence's [CLS] slot.
  std::vector<int> cls_rows() const;
};

/// Per-slot input vectors: content + modality embedding + position embedding.
/// Speech content is the posterior-weighted sum of phoneme embedding rows;
/// masked slots use the [MASK] special embedding as content.
template <typename T>
num::Var embed(num::Graph<T>& graph, const ParamVars& params, const PackedInput& input);

/// Post-norm transformer stack over row-stacked sequences of the given
/// lengths. Attention is full and bidirectional within each sequence.
/// Dropout is applied only when `dropout_rng` is non-null and the configured
/// rate is positive.
template <typename T>
num::Var encode(num::Graph<T>& graph, const ParamVars& params, const ModelConfig& config, num::Var x,
                std::span<const std::size_t> lengths, Rng* dropout_rng = nullptr);

/// embed + encode for a batch.
template <typename T>
EncodedBatch forward(num::Graph<T>& graph, const ParamVars& params, const ModelConfig& config,
                     std::span<const PackedInput> batch, Rng* dropout_rng = nullptr);

/// LM logits at `positions`: the untied phoneme head for speech, the tied
/// subword head (E_t^T + bias) for text. Throws DataError if a position is
/// not a content or masked slot of `modality`.
template <typename T>
num::Var lm_logits(num::Graph<T>& graph, const ParamVars& params, const EncodedBatch& encoded,
                   std::span<const PackedInput> batch, std::span<const Position> positions, Modality modality);

/// Intent logits (batch x C) read from each sequence's slot 0.
template <typename T>
num::Var intent_logits(num::Graph<T>& graph, const ParamVars& params, const EncodedBatch& encoded);

}  // namespace stbert::model
