// Copyright 2026 The stbert Authors
// SPDX-License-Identifier: Apache-2.0

#include "stbert/masking/mask_plan.hpp"

#include <algorithm>
#include <string>

#include "stbert/common/error.hpp"

namespace stbert::masking {

using model::Modality;
using model::PackedInput;
using model::PackMode;
using model::SlotKind;

namespace {

void require_mode(const PackedInput& in, PackMode mode, const char* who) {
  if (in.mode != mode) throw DataError(std::string(who) + ": input has the wrong layout for this task");
}

/// Slot ranges of the maskable elements of one modality, in slot order. A
/// speech element is a maximal run of frames sharing one gold phoneme, so
/// adjacent occurrences of the same phoneme mask together.
std::vector<std::pair<std::size_t, std::size_t>> elements_of(const PackedInput& in, Modality m) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  const auto span = m == Modality::kSpeech ? in.speech : in.text;
  for (std::size_t i = span.begin; i < span.end;) {
    std::size_t j = i + 1;
    if (m == Modality::kSpeech) {
      while (j < span.end && in.slots[j].target == in.slots[i].target) ++j;
    }
    out.emplace_back(i, j);
    i = j;
  }
  return out;
}

MaskPlan element_plan(Task task, const PackedInput& in, double rate, Rng& rng, bool speech, bool text) {
  if (!(rate >= 0.0 && rate < 1.0) && !(rate == 1.0)) throw DataError("mask rate must be in [0, 1]");
  std::vector<std::pair<std::size_t, std::size_t>> elements;
  if (speech) elements = elements_of(in, Modality::kSpeech);
  if (text) {
    auto t = elements_of(in, Modality::kText);
    elements.insert(elements.end(), t.begin(), t.end());
  }
  MaskPlan plan;
  plan.task = task;
  plan.elements = elements.size();
  for (int attempt = 0; attempt < 2 && plan.positions.empty(); ++attempt) {
    plan.masked_elements = 0;
    for (const auto& [b, e] : elements) {
      if (!bernoulli(rng, rate)) continue;
      ++plan.masked_elements;
      for (std::size_t i = b; i < e; ++i) plan.positions.push_back(i);
    }
  }
  std::sort(plan.positions.begin(), plan.positions.end());
  for (auto pos : plan.positions) plan.targets.push_back(in.slots[pos].target);
  return plan;
}

}  // namespace

std::string_view task_name(Task task) {
  switch (task) {
    case Task::kCmMlm:
      return "CM_MLM";
    case Task::kClmS2T:
      return "CLM_S2T";
    case Task::kClmT2S:
      return "CLM_T2S";
    case Task::kSpeechMlm:
      return "SPEECH_MLM";
    case Task::kTextMlm:
      return "TEXT_MLM";
  }
  return "?";
}

std::optional<Task> parse_task(std::string_view name) {
  for (Task t : kAllTasks) {
    if (task_name(t) == name) return t;
  }
  return std::nullopt;
}

PackMode pack_mode_for(Task task) {
  switch (task) {
    case Task::kSpeechMlm:
      return PackMode::kFinetune;
    case Task::kTextMlm:
      return PackMode::kTextOnly;
    default:
      return PackMode::kPretrain;
  }
}

MaskPlan plan_cm_mlm(const PackedInput& in, double rate, Rng& rng) {
  require_mode(in, PackMode::kPretrain, "plan_cm_mlm");
  return element_plan(Task::kCmMlm, in, rate, rng, true, true);
}

MaskPlan plan_speech_mlm(const PackedInput& in, double rate, Rng& rng) {
  if (in.text_slot_count() > 0 || in.mode != PackMode::kFinetune) {
    throw DataError("plan_speech_mlm: input contains text slots");
  }
  return element_plan(Task::kSpeechMlm, in, rate, rng, true, false);
}

MaskPlan plan_text_mlm(const PackedInput& in, double rate, Rng& rng) {
  require_mode(in, PackMode::kTextOnly, "plan_text_mlm");
  return element_plan(Task::kTextMlm, in, rate, rng, false, true);
}

MaskPlan plan_cm_clm(const PackedInput& in, ClmDirection direction) {
  require_mode(in, PackMode::kPretrain, "plan_cm_clm");
  const bool s2t = direction == ClmDirection::kSpeechToText;
  MaskPlan plan;
  plan.task = s2t ? Task::kClmS2T : Task::kClmT2S;
  const auto span = s2t ? in.text : in.speech;
  for (std::size_t i = span.begin; i < span.end; ++i) {
    plan.positions.push_back(i);
    plan.targets.push_back(in.slots[i].target);
  }
  plan.elements = elements_of(in, Modality::kSpeech).size() + in.text.size();
  plan.masked_elements = s2t ? in.text.size() : elements_of(in, Modality::kSpeech).size();
  return plan;
}

MaskPlan plan_for_task(Task task, const PackedInput& in, double rate, Rng& rng) {
  switch (task) {
    case Task::kCmMlm:
      return plan_cm_mlm(in, rate, rng);
    case Task::kClmS2T:
      return plan_cm_clm(in, ClmDirection::kSpeechToText);
    case Task::kClmT2S:
      return plan_cm_clm(in, ClmDirection::kTextToSpeech);
    case Task::kSpeechMlm:
      return plan_speech_mlm(in, rate, rng);
    case Task::kTextMlm:
      return plan_text_mlm(in, rate, rng);
  }
  throw DataError("unknown task");
}

PackedInput apply_plan(const PackedInput& in, const MaskPlan& plan) {
  PackedInput out = in;
  for (auto pos : plan.positions) {
    if (pos >= out.slots.size()) throw DataError("apply_plan: position " + std::to_string(pos) + " out of range");
    auto& slot = out.slots[pos];
    if (slot.is_special()) throw DataError("apply_plan: position " + std::to_string(pos) + " is a special token");
    slot.kind = SlotKind::kMask;
  }
  return out;
}

}  // namespace stbert::masking
