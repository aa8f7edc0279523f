// Copyright 2026 The stbert Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <vector>

#include "stbert/acoustic/posteriorgram.hpp"
#include "stbert/common/random.hpp"
#include "stbert/corpus/types.hpp"
#include "stbert/model/packing.hpp"

namespace stbert::trainer {

/// Utterances with their (cached) posteriorgrams.
struct Dataset {
  std::vector<corpus::AlignedUtterance> utterances;
  std::vector<std::shared_ptr<const acoustic::Posteriorgram>> posteriors;

  std::size_t size() const { return utterances.size(); }
  bool empty() const { return utterances.empty(); }
  /// Subset by index, sharing the cached posteriorgrams.
  Dataset select(const std::vector<std::size_t>& indices) const;
  model::PackedInput pack(std::size_t i, model::PackMode mode, std::size_t max_positions) const;
};

/// Posteriors are synthesized with a per-utterance seed derived from
/// `noise_seed` and the utterance id, so they do not depend on set order.
Dataset make_dataset(std::vector<corpus::AlignedUtterance> utterances, std::size_t phoneme_count,
                     const acoustic::PosteriorNoise& noise, std::uint64_t noise_seed);

/// Throws DataError naming the first utterance whose `mode` packing exceeds
/// `max_positions`.
void check_lengths(const Dataset& data, model::PackMode mode, std::size_t max_positions);

/// Endless shuffled pass over [0, n): each epoch is a fresh permutation.
class BatchSampler {
 public:
  BatchSampler(std::size_t n, std::uint64_t seed);
  std::vector<std::size_t> next(std::size_t batch_size);
  const Rng& rng() const { return rng_; }
  void set_rng(const Rng& rng) { rng_ = rng; }

 private:
  void reshuffle();
  std::size_t n_;
  Rng rng_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
};

}  // namespace stbert::trainer
