// Copyright 2026 The stbert Authors
// SPDX-License-Identifier: Apache-2.0

#include "stbert/model/packing.hpp"

#include <string>

#include "stbert/common/error.hpp"

namespace stbert::model {

std::size_t PackedInput::text_slot_count() const {
  std::size_t n = 0;
  for (const auto& s : slots) n += s.carries(Modality::kText) ? 1 : 0;
  return n;
}

std::vector<int> PackedInput::modality_ids() const {
  std::vector<int> ids;
  ids.reserve(slots.size());
  for (const auto& s : slots) ids.push_back(static_cast<int>(s.modality));
  return ids;
}

std::size_t packed_length(const corpus::AlignedUtterance& u, PackMode mode) {
  switch (mode) {
    case PackMode::kPretrain:
      return u.frames() + u.subword_ids.size() + 3;
    case PackMode::kFinetune:
      return u.frames() + 2;
    case PackMode::kTextOnly:
      return u.subword_ids.size() + 2;
  }
  return 0;
}

PackedInput pack_input(const corpus::AlignedUtterance& u, std::shared_ptr<const acoustic::Posteriorgram> posteriors,
                       PackMode mode, std::size_t max_positions) {
  const std::size_t length = packed_length(u, mode);
  if (length > max_positions) {
    throw DataError("sequence too long: utterance " + u.id + " packs to " + std::to_string(length) +
                    " slots, max positions " + std::to_string(max_positions) + " (truncate " +
                    std::to_string(length - max_positions) + ")");
  }
  const bool with_speech = mode != PackMode::kTextOnly;
  const bool with_text = mode != PackMode::kFinetune;
  if (with_speech) {
    if (!posteriors) throw DataError("pack_input: speech modes require a posteriorgram");
    if (posteriors->frames() != u.frames()) {
      throw DataError("pack_input: posteriorgram has " + std::to_string(posteriors->frames()) +
                      " frames, alignment has " + std::to_string(u.frames()));
    }
  }
  if (with_text && u.subword_ids.empty()) throw DataError("pack_input: utterance " + u.id + " has no subword ids");

  PackedInput in;
  in.mode = mode;
  in.slots.reserve(length);
  const Modality lead = with_speech ? Modality::kSpeech : Modality::kText;
  in.slots.push_back({SlotKind::kCls, lead, -1, -1, -1});
  if (with_speech) {
    in.posteriors = std::move(posteriors);
    in.speech.begin = in.slots.size();
    for (std::size_t k = 0; k < u.segments.size(); ++k) {
      const auto& seg = u.segments[k];
      for (std::uint32_t t = seg.start; t < seg.end; ++t) {
        in.slots.push_back({SlotKind::kSpeech, Modality::kSpeech, static_cast<int>(t), seg.phoneme, static_cast<int>(k)});
      }
    }
    in.speech.end = in.slots.size();
    in.slots.push_back({SlotKind::kSep, Modality::kSpeech, -1, -1, -1});
  }
  if (with_text) {
    in.text.begin = in.slots.size();
    for (std::size_t k = 0; k < u.subword_ids.size(); ++k) {
      const int id = u.subword_ids[k];
      in.slots.push_back({SlotKind::kText, Modality::kText, id, id, static_cast<int>(k)});
    }
    in.text.end = in.slots.size();
    in.slots.push_back({SlotKind::kSep, Modality::kText, -1, -1, -1});
  } else {
    in.text.begin = in.text.end = in.slots.size();
  }
  if (!with_speech) in.speech.begin = in.speech.end = 1;
  return in;
}

}  // namespace stbert::model
