// Copyright 2026 The stbert Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace stbert::corpus {

/// One phoneme occurrence spanning frames [start, end).
struct Segment {
  int phoneme = 0;
  std::uint32_t start = 0;
  std::uint32_t end = 0;

  std::uint32_t length() const { return end - start; }
  friend bool operator==(const Segment&, const Segment&) = default;
};

/// A transcript with its gold frame alignment and (optionally) an intent.
struct AlignedUtterance {
  std::string id;
  std::string transcript;
  std::vector<Segment> segments;
  std::vector<int> subword_ids;
  std::optional<int> intent;

  /// Frame count: end of the last segment.
  std::uint32_t frames() const { return segments.empty() ? 0 : segments.back().end; }
  friend bool operator==(const AlignedUtterance&, const AlignedUtterance&) = default;
};

/// Throws DataError unless segments start at frame 0, are contiguous, and
/// each covers at least one frame. `phoneme_count`, when non-zero, bounds the
/// phoneme indices.
void validate_segments(std::span<const Segment> segments, std::size_t phoneme_count = 0);

/// Per-frame gold phoneme labels expanded from segments.
std::vector<int> frame_labels(std::span<const Segment> segments);

}  // namespace stbert::corpus
