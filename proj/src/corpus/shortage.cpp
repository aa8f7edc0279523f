// Copyright 2026 The stbert Authors
// SPDX-License-Identifier: Apache-2.0

#include "stbert/corpus/shortage.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>

#include "stbert/common/error.hpp"
#include "stbert/common/random.hpp"

namespace stbert::corpus {

namespace {

using Groups = std::map<std::optional<int>, std::vector<std::size_t>>;

std::vector<std::size_t> draw_subset(const Groups& groups, std::size_t n_items, std::size_t target,
                                     double fraction, bool stratified, Rng& rng) {
  std::vector<std::size_t> picked;
  if (!stratified) {
    std::vector<std::size_t> all(n_items);
    for (std::size_t i = 0; i < n_items; ++i) all[i] = i;
    shuffle(all.begin(), all.end(), rng);
    picked.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(target));
  } else {
    // Floor quotas, then hand the remainder to the largest fractional parts
    // (random order among equal remainders).
    struct Quota {
      const std::vector<std::size_t>* members;
      std::size_t count;
      double remainder;
      std::uint64_t tiebreak;
    };
    std::vector<Quota> quotas;
    std::size_t assigned = 0;
    for (const auto& [_, members] : groups) {
      const double exact = fraction * static_cast<double>(members.size());
      const auto base = static_cast<std::size_t>(std::floor(exact));
      quotas.push_back({&members, base, exact - static_cast<double>(base), rng()});
      assigned += base;
    }
    std::vector<std::size_t> order(quotas.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (quotas[a].remainder != quotas[b].remainder) return quotas[a].remainder > quotas[b].remainder;
      return quotas[a].tiebreak < quotas[b].tiebreak;
    });
    for (std::size_t k = 0; assigned < target && k < order.size(); ++k) {
      auto& q = quotas[order[k]];
      if (q.count < q.members->size()) {
        ++q.count;
        ++assigned;
      }
    }
    for (const auto& q : quotas) {
      std::vector<std::size_t> members = *q.members;
      shuffle(members.begin(), members.end(), rng);
      picked.insert(picked.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(q.count));
    }
  }
  std::sort(picked.begin(), picked.end());
  return picked;
}

}  // namespace

std::size_t default_subset_count(double fraction) {
  if (fraction >= 1.0) return 1;
  if (fraction >= 0.1) return 10;
  return 20;
}

std::vector<std::vector<std::size_t>> split_shortage(std::span<const AlignedUtterance> set, double fraction,
                                                     std::size_t n_subsets, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw DataError("split_shortage: fraction must be in (0, 1]");
  const auto target = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(set.size())));
  if (target < 1) {
    throw DataError("split_shortage: fraction " + std::to_string(fraction) + " of " +
                    std::to_string(set.size()) + " items yields no items");
  }
  Groups groups;
  for (std::size_t i = 0; i < set.size(); ++i) groups[set[i].intent].push_back(i);
  const bool stratified = std::all_of(groups.begin(), groups.end(), [&](const auto& g) {
    return static_cast<double>(g.second.size()) * fraction >= 1.0 - 1e-9;
  });

  std::vector<std::vector<std::size_t>> subsets;
  constexpr std::uint64_t kMaxRetries = 64;
  for (std::size_t k = 0; k < n_subsets; ++k) {
    for (std::uint64_t attempt = 0;; ++attempt) {
      Rng rng(derive_seed(seed, k + (attempt << 32)));
      auto subset = draw_subset(groups, set.size(), target, fraction, stratified, rng);
      const bool duplicate =
          target < set.size() && std::find(subsets.begin(), subsets.end(), subset) != subsets.end();
      if (!duplicate || attempt >= kMaxRetries) {
        subsets.push_back(std::move(subset));
        break;
      }
    }
  }
  return subsets;
}

}  // namespace stbert::corpus
