// Copyright 2026 The stbert Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace stbert::corpus {

/// Subword vocabulary. The first five entries are always the reserved
/// tokens below; word-internal pieces carry the "##" prefix.
class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kCls = 1;
  static constexpr int kSep = 2;
  static constexpr int kMask = 3;
  static constexpr int kUnk = 4;
  static constexpr std::size_t kReserved = 5;
  static constexpr std::string_view kContinuation = "##";

  Vocab() = default;
  explicit Vocab(std::vector<std::string> tokens);

  std::size_t size() const { return tokens_.size(); }
  const std::string& token(int id) const;
  std::optional<int> find(std::string_view token) const;
  const std::vector<std::string>& tokens() const { return tokens_; }

  /// One token per line; index = line number.
  void save(const std::filesystem::path& path) const;
  static Vocab load(const std::filesystem::path& path);

  friend bool operator==(const Vocab& a, const Vocab& b) { return a.tokens_ == b.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, int, std::less<>> index_;
};

/// Frequency-greedy pair merging over whitespace-separated words. Starts from
/// every seen character in both word-initial and "##" form, then repeatedly
/// merges the most frequent adjacent pair (ties: lexicographically smallest
/// pair) until `vocab_size` tokens exist or no pair remains.
Vocab train_wordpiece(std::span<const std::string> texts, std::size_t vocab_size);

/// Greedy longest-match per word; a word with no full segmentation becomes
/// a single [UNK].
std::vector<int> encode_text(std::string_view text, const Vocab& vocab);

/// Joins pieces, attaching "##" continuations to the previous piece.
std::string decode_text(std::span<const int> ids, const Vocab& vocab);

}  // namespace stbert::corpus
