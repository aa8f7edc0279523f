// Copyright 2026 The stbert Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stbert/model/params.hpp"
#include "stbert/trainer/adam.hpp"
#include "stbert/trainer/config.hpp"

namespace stbert::trainer {

struct TrainState {
  std::uint64_t step = 0;
  /// Optimizer moments at the end of the stage; absent for inference-only
  /// checkpoints.
  std::optional<AdamState<float>> adam;
  /// Serialized state of the task-sampling generator.
  std::string rng_state;
};

struct Checkpoint {
  model::ModelConfig model;
  TrainConfig train;
  model::Params<float> params;
  TrainState state;
  /// Stage names from the first stage to this one, e.g. {"pretrain", "dapt"}.
  std::vector<std::string> lineage;

  const std::string& stage() const;
};

/// Container layout: "STBT1\n", u64 little-endian header length, UTF-8 JSON
/// header (configs, lineage, state, tensor directory of name/dtype/shape/
/// offset), then little-endian payloads in directory order.
std::string serialize_checkpoint(const Checkpoint& ckpt);
/// Throws DataError with distinct messages for a bad magic, a truncated
/// payload, an unknown dtype and a shape that disagrees with the payload.
Checkpoint parse_checkpoint(std::string_view bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace stbert::trainer
