// Copyright 2026 The stbert Authors
// SPDX-License-Identifier: Apache-2.0

// Frozen stand-in for a pre-trained acoustic model: turns gold phoneme
// segments into noisy frame-level phoneme posteriors. Nothing here is
// trainable; posteriorgrams enter the network as constant inputs.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "stbert/corpus/types.hpp"

namespace stbert::acoustic {

/// Per-frame confusion model. Before temperature, the gold phoneme keeps
/// 1 - confusion_mass and the rest is spread (random Dirichlet(1) split)
/// over phonemes within `neighbor_width` index positions.
struct PosteriorNoise {
  double confusion_mass = 0.15;
  double temperature = 1.0;
  int neighbor_width = 2;

  void validate() const;
};

/// T x P row-stochastic matrix (row-major).
class Posteriorgram {
 public:
  Posteriorgram() = default;
  Posteriorgram(std::size_t frames, std::size_t phonemes);
  Posteriorgram(std::size_t frames, std::size_t phonemes, std::vector<double> values);

  std::size_t frames() const { return frames_; }
  std::size_t phonemes() const { return phonemes_; }
  std::span<const double> row(std::size_t t) const { return {values_.data() + t * phonemes_, phonemes_}; }
  std::span<double> row(std::size_t t) { return {values_.data() + t * phonemes_, phonemes_}; }
  double operator()(std::size_t t, std::size_t q) const { return values_[t * phonemes_ + q]; }
  const std::vector<double>& values() const { return values_; }

  friend bool operator==(const Posteriorgram&, const Posteriorgram&) = default;

 private:
  std::size_t frames_ = 0;
  std::size_t phonemes_ = 0;
  std::vector<double> values_;
};

/// Deterministic in `seed`; noise is drawn independently per frame.
Posteriorgram synthesize_posteriorgram(std::span<const corpus::Segment> segments, std::size_t phoneme_count,
                                       const PosteriorNoise& noise, std::uint64_t seed);

/// Row-wise argmax, ties toward the lower phoneme index.
std::vector<int> posterior_frame_labels(const Posteriorgram& gram);

/// Binary dump: "PGRAM1", T and P as little-endian u32, then T*P
/// little-endian float32 values row-major.
void write_posteriorgram(const Posteriorgram& gram, const std::filesystem::path& path);
Posteriorgram read_posteriorgram(const std::filesystem::path& path);

}  // namespace stbert::acoustic
