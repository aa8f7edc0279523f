// Copyright 2026 The stbert Authors
// SPDX-License-Identifier: Apache-2.0

#include "stbert/trainer/dataset.hpp"

#include <algorithm>
#include <numeric>

#include "stbert/common/error.hpp"
#include "stbert/common/random.hpp"

namespace stbert::trainer {

Dataset Dataset::select(const std::vector<std::size_t>& indices) const {
  Dataset out;
  for (std::size_t i : indices) {
    out.utterances.push_back(utterances.at(i));
    out.posteriors.push_back(posteriors.at(i));
  }
  return out;
}

model::PackedInput Dataset::pack(std::size_t i, model::PackMode mode, std::size_t max_positions) const {
  return model::pack_input(utterances.at(i), posteriors.at(i), mode, max_positions);
}

Dataset make_dataset(std::vector<corpus::AlignedUtterance> utterances, std::size_t phoneme_count,
                     const acoustic::PosteriorNoise& noise, std::uint64_t noise_seed) {
  noise.validate();
  Dataset d;
  d.posteriors.reserve(utterances.size());
  for (const auto& u : utterances) {
    const auto seed = derive_seed(noise_seed, hash_string(u.id));
    d.posteriors.push_back(std::make_shared<const acoustic::Posteriorgram>(
        acoustic::synthesize_posteriorgram(u.segments, phoneme_count, noise, seed)));
  }
  d.utterances = std::move(utterances);
  return d;
}

void check_lengths(const Dataset& data, model::PackMode mode, std::size_t max_positions) {
  for (const auto& u : data.utterances) {
    const auto n = model::packed_length(u, mode);
    if (n > max_positions) {
      throw DataError("utterance " + u.id + " packs to " + std::to_string(n) + " slots, above max_positions " +
                      std::to_string(max_positions));
    }
  }
}

BatchSampler::BatchSampler(std::size_t n, std::uint64_t seed) : n_(n), rng_(seed) {
  if (n == 0) throw DataError("cannot sample batches from an empty set");
  order_.resize(n);
  reshuffle();
}

void BatchSampler::reshuffle() {
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  shuffle(order_.begin(), order_.end(), rng_);
  cursor_ = 0;
}

std::vector<std::size_t> BatchSampler::next(std::size_t batch_size) {
  std::vector<std::size_t> batch;
  batch.reserve(std::min(batch_size, n_));
  for (std::size_t k = 0; k < std::min(batch_size, n_); ++k) {
    if (cursor_ == n_) reshuffle();
    batch.push_back(order_[cursor_++]);
  }
  return batch;
}

}  // namespace stbert::trainer
