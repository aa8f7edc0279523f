// Copyright 2026 The stbert Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stbert/corpus/types.hpp"

namespace stbert::corpus {

/// Ordered set of phoneme symbols; index <-> symbol is a bijection.
class PhonemeInventory {
 public:
  PhonemeInventory() = default;
  explicit PhonemeInventory(std::vector<std::string> symbols);

  /// ARPAbet-style symbols (39 + flap) for the first 40, then "Q<i>".
  static PhonemeInventory standard(std::size_t count = 40);

  std::size_t size() const { return symbols_.size(); }
  const std::string& symbol(int index) const;
  std::optional<int> find(std::string_view symbol) const;
  const std::vector<std::string>& symbols() const { return symbols_; }

 private:
  std::vector<std::string> symbols_;
  std::map<std::string, int, std::less<>> index_;
};

/// Word -> pronunciation (phoneme indices). Word order is insertion order.
class Lexicon {
 public:
  void add(std::string word, std::vector<int> pronunciation);
  bool contains(std::string_view word) const;
  const std::vector<int>& pronunciation(std::string_view word) const;
  const std::vector<std::string>& words() const { return words_; }
  std::size_t size() const { return words_.size(); }

  /// Throws DataError if any phoneme index is >= phoneme_count.
  void validate(std::size_t phoneme_count) const;

 private:
  std::vector<std::string> words_;
  std::map<std::string, std::vector<int>, std::less<>> entries_;
};

/// Throws DataError unless the utterance's segment phonemes spell out the
/// lexicon pronunciations of its transcript words, in order.
void check_pronunciation(const AlignedUtterance& utterance, const Lexicon& lexicon);

std::vector<std::string> split_words(std::string_view text);

}  // namespace stbert::corpus
