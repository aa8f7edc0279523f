// Copyright 2026 The stbert Authors
// SPDX-License-Identifier: Apache-2.0

#include "stbert/acoustic/posteriorgram.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

#include "stbert/common/error.hpp"
#include "stbert/common/random.hpp"

namespace stbert::acoustic {

namespace {

constexpr char kMagic[6] = {'P', 'G', 'R', 'A', 'M', '1'};

void put_u32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw DataError("posteriorgram: truncated file");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void PosteriorNoise::validate() const {
  if (!(confusion_mass >= 0.0 && confusion_mass < 1.0)) {
    throw DataError("posterior noise: confusion mass must be in [0, 1)");
  }
  if (!(temperature > 0.0)) throw DataError("posterior noise: temperature must be positive");
  if (neighbor_width < 0) throw DataError("posterior noise: negative neighbor width");
}

Posteriorgram::Posteriorgram(std::size_t frames, std::size_t phonemes)
    : frames_(frames), phonemes_(phonemes), values_(frames * phonemes, 0.0) {}

Posteriorgram::Posteriorgram(std::size_t frames, std::size_t phonemes, std::vector<double> values)
    : frames_(frames), phonemes_(phonemes), values_(std::move(values)) {
  if (values_.size() != frames_ * phonemes_) throw DataError("posteriorgram: value count mismatch");
}

Posteriorgram synthesize_posteriorgram(std::span<const corpus::Segment> segments, std::size_t phoneme_count,
                                       const PosteriorNoise& noise, std::uint64_t seed) {
  noise.validate();
  corpus::validate_segments(segments);
  for (const auto& s : segments) {
    if (static_cast<std::size_t>(s.phoneme) >= phoneme_count) {
      throw DataError("posteriorgram: phoneme index " + std::to_string(s.phoneme) + " >= P=" +
                      std::to_string(phoneme_count));
    }
  }
  const std::size_t frames = segments.empty() ? 0 : segments.back().end;
  Posteriorgram gram(frames, phoneme_count);
  Rng rng(seed);
  const auto P = static_cast<int>(phoneme_count);
  std::vector<int> neighbors;
  std::vector<double> weights;
  for (const auto& s : segments) {
    neighbors.clear();
    for (int d = 1; d <= noise.neighbor_width; ++d) {
      if (s.phoneme - d >= 0) neighbors.push_back(s.phoneme - d);
      if (s.phoneme + d < P) neighbors.push_back(s.phoneme + d);
    }
    for (std::uint32_t t = s.start; t < s.end; ++t) {
      auto row = gram.row(t);
      if (neighbors.empty() || noise.confusion_mass == 0.0) {
        row[static_cast<std::size_t>(s.phoneme)] = 1.0;
        continue;
      }
      row[static_cast<std::size_t>(s.phoneme)] = 1.0 - noise.confusion_mass;
      weights.resize(neighbors.size());
      double total = 0.0;
      for (auto& w : weights) {
        double u = uniform01(rng);
        while (u <= 0.0) u = uniform01(rng);
        w = -std::log(u);
        total += w;
      }
      for (std::size_t k = 0; k < neighbors.size(); ++k) {
        row[static_cast<std::size_t>(neighbors[k])] += noise.confusion_mass * weights[k] / total;
      }
      if (noise.temperature != 1.0) {
        const double inv_t = 1.0 / noise.temperature;
        double z = 0.0;
        for (auto& p : row) {
          p = p > 0.0 ? std::pow(p, inv_t) : 0.0;
          z += p;
        }
        for (auto& p : row) p /= z;
      }
    }
  }
  return gram;
}

std::vector<int> posterior_frame_labels(const Posteriorgram& gram) {
  std::vector<int> labels(gram.frames());
  for (std::size_t t = 0; t < gram.frames(); ++t) {
    const auto row = gram.row(t);
    std::size_t best = 0;
    for (std::size_t q = 1; q < row.size(); ++q) {
      if (row[q] > row[best]) best = q;
    }
    labels[t] = static_cast<int>(best);
  }
  return labels;
}

void write_posteriorgram(const Posteriorgram& gram, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write posteriorgram " + path.string());
  out.write(kMagic, sizeof(kMagic));
  put_u32(out, static_cast<std::uint32_t>(gram.frames()));
  put_u32(out, static_cast<std::uint32_t>(gram.phonemes()));
  for (double v : gram.values()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  if (!out) throw DataError("write failed for " + path.string());
}

Posteriorgram read_posteriorgram(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read posteriorgram " + path.string());
  char magic[sizeof(kMagic)];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw DataError("posteriorgram: bad magic");
  }
  const std::uint32_t frames = get_u32(in);
  const std::uint32_t phonemes = get_u32(in);
  std::vector<double> values(static_cast<std::size_t>(frames) * phonemes);
  for (auto& v : values) v = static_cast<double>(std::bit_cast<float>(get_u32(in)));
  if (in.peek() != std::char_traits<char>::eof()) throw DataError("posteriorgram: trailing bytes");
  return Posteriorgram(frames, phonemes, std::move(values));
}

}  // namespace stbert::acoustic
