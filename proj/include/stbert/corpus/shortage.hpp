// Copyright 2026 The stbert Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "stbert/corpus/types.hpp"

namespace stbert::corpus {

/// Default subset counts for the label-shortage protocol.
std::size_t default_subset_count(double fraction);

/// Draws `n_subsets` independent subsets of round(fraction * |set|) items
/// without replacement, returned as sorted indices into `set`. Sampling is
/// stratified by intent when every intent has at least 1/fraction items.
/// Subsets within one call are pairwise distinct whenever that is possible.
std::vector<std::vector<std::size_t>> split_shortage(std::span<const AlignedUtterance> set, double fraction,
                                                     std::size_t n_subsets, std::uint64_t seed);

}  // namespace stbert::corpus
