// Copyright 2026 The stbert Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <vector>

#include "stbert/acoustic/posteriorgram.hpp"
#include "stbert/corpus/types.hpp"

namespace stbert::model {

enum class Modality : std::uint8_t { kSpeech = 0, kText = 1 };

/// kPretrain: [CLS] speech [SEP] text [SEP]
/// kFinetune: [CLS] speech [SEP]
/// kTextOnly: [CLS] text [SEP]  (text-only base-model pre-training)
enum class PackMode : std::uint8_t { kPretrain, kFinetune, kTextOnly };

enum class SlotKind : std::uint8_t { kCls, kSep, kMask, kSpeech, kText };

struct Slot {
  SlotKind kind = SlotKind::kCls;
  Modality modality = Modality::kSpeech;
  /// Frame index (speech) or subword id (text); -1 for [CLS]/[SEP].
  int source = -1;
  /// Prediction target: gold phoneme (speech) or subword id (text).
  int target = -1;
  /// Gold segment index (speech) or token index within the text (text).
  int group = -1;

  bool is_special() const { return kind == SlotKind::kCls || kind == SlotKind::kSep; }
  /// Content modality for content and masked slots.
  bool carries(Modality m) const { return !is_special() && modality == m; }
  friend bool operator==(const Slot&, const Slot&) = default;
};

struct SlotSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
  bool contains(std::size_t i) const { return i >= begin && i < end; }
  friend bool operator==(const SlotSpan&, const SlotSpan&) = default;
};

/// One packed sequence. Position ids are the slot indices 0..size()-1.
struct PackedInput {
  PackMode mode = PackMode::kPretrain;
  std::vector<Slot> slots;
  SlotSpan speech;
  SlotSpan text;
  std::shared_ptr<const acoustic::Posteriorgram> posteriors;

  std::size_t size() const { return slots.size(); }
  std::size_t text_slot_count() const;
  std::vector<int> modality_ids() const;
};

/// Lays out an utterance for `mode`. [CLS] and the first [SEP] take the
/// speech modality, the trailing [SEP] the text modality (text-only packs
/// use the text modality throughout). Throws DataError when the packed
/// length exceeds `max_positions`, reporting how many slots must go.
PackedInput pack_input(const corpus::AlignedUtterance& utterance,
                       std::shared_ptr<const acoustic::Posteriorgram> posteriors, PackMode mode,
                       std::size_t max_positions);

/// Packed length without building the input.
std::size_t packed_length(const corpus::AlignedUtterance& utterance, PackMode mode);

}  // namespace stbert::model
