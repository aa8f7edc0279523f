// Copyright 2026 The stbert Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include "stbert/common/random.hpp"
#include "stbert/model/packing.hpp"

namespace stbert::masking {

/// Pre-training objectives. Declaration order is the canonical order.
enum class Task : std::uint8_t {
  kCmMlm,      // cross-modal masked LM over speech spans and text tokens
  kClmS2T,     // mask all text, predict it from speech
  kClmT2S,     // mask all speech, predict it from text
  kSpeechMlm,  // span-masked LM on speech-only inputs
  kTextMlm,    // token-masked LM on text-only inputs (base model stage)
};

inline constexpr Task kAllTasks[] = {Task::kCmMlm, Task::kClmS2T, Task::kClmT2S, Task::kSpeechMlm, Task::kTextMlm};

std::string_view task_name(Task task);
std::optional<Task> parse_task(std::string_view name);
/// Input layout a task trains on.
model::PackMode pack_mode_for(Task task);

enum class ClmDirection : std::uint8_t { kSpeechToText, kTextToSpeech };

/// Masked slots and their prediction targets, sorted by position.
struct MaskPlan {
  Task task = Task::kCmMlm;
  std::vector<std::size_t> positions;
  std::vector<int> targets;
  /// Maskable elements considered (phoneme spans + text tokens) and how many
  /// of them were selected.
  std::size_t elements = 0;
  std::size_t masked_elements = 0;

  bool empty() const { return positions.empty(); }
};

/// Each phoneme span (a maximal run of frames with one gold phoneme) and each
/// text token is one element, selected independently with probability
/// `rate`; a selected span masks all of its frames. An empty draw is retried
/// once and then accepted.
MaskPlan plan_cm_mlm(const model::PackedInput& input, double rate, Rng& rng);

/// Masks the whole target modality: text for speech-to-text, speech for
/// text-to-speech.
MaskPlan plan_cm_clm(const model::PackedInput& input, ClmDirection direction);

/// plan_cm_mlm restricted to speech, for speech-only inputs.
MaskPlan plan_speech_mlm(const model::PackedInput& input, double rate, Rng& rng);

/// Per-token masking of text-only inputs.
MaskPlan plan_text_mlm(const model::PackedInput& input, double rate, Rng& rng);

/// Dispatches to the planner for `task`.
MaskPlan plan_for_task(Task task, const model::PackedInput& input, double rate, Rng& rng);

/// Copy of `input` with the planned slots turned into [MASK] placeholders.
/// Targets, modality and positions of every slot are preserved.
model::PackedInput apply_plan(const model::PackedInput& input, const MaskPlan& plan);

}  // namespace stbert::masking
