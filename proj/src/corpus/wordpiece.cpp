// Copyright 2026 The stbert Authors
// SPDX-License-Identifier: Apache-2.0

#include "stbert/corpus/wordpiece.hpp"

#include <fstream>
#include <set>
#include <utility>

#include "stbert/common/error.hpp"
#include "stbert/corpus/phonemes.hpp"

namespace stbert::corpus {

namespace {

const std::vector<std::string>& reserved_tokens() {
  static const std::vector<std::string> kTokens{"[PAD]", "[CLS]", "[SEP]", "[MASK]", "[UNK]"};
  return kTokens;
}

bool is_continuation(std::string_view piece) {
  return piece.substr(0, Vocab::kContinuation.size()) == Vocab::kContinuation;
}

std::string merged(const std::string& left, const std::string& right) {
  return left + (is_continuation(right) ? right.substr(Vocab::kContinuation.size()) : right);
}

}  // namespace

Vocab::Vocab(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  const auto& reserved = reserved_tokens();
  if (tokens_.size() < kReserved) throw DataError("vocab shorter than the reserved token block");
  for (std::size_t i = 0; i < kReserved; ++i) {
    if (tokens_[i] != reserved[i]) {
      throw DataError("vocab entry " + std::to_string(i) + " must be " + reserved[i]);
    }
  }
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (tokens_[i].empty()) throw DataError("empty vocab token at index " + std::to_string(i));
    if (!index_.emplace(tokens_[i], static_cast<int>(i)).second) {
      throw DataError("duplicate vocab token '" + tokens_[i] + "'");
    }
  }
}

const std::string& Vocab::token(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw DataError("token id " + std::to_string(id) + " out of range for vocab of " +
                    std::to_string(tokens_.size()));
  }
  return tokens_[static_cast<std::size_t>(id)];
}

std::optional<int> Vocab::find(std::string_view token) const {
  auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void Vocab::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write vocab file " + path.string());
  for (const auto& t : tokens_) out << t << '\n';
}

Vocab Vocab::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read vocab file " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) tokens.push_back(line);
  return Vocab(std::move(tokens));
}

Vocab train_wordpiece(std::span<const std::string> texts, std::size_t vocab_size) {
  std::map<std::string, std::size_t> word_counts;
  for (const auto& t : texts) {
    for (auto& w : split_words(t)) ++word_counts[w];
  }
  if (word_counts.empty()) throw DataError("train_wordpiece: empty corpus");

  std::set<char> chars;
  for (const auto& [w, _] : word_counts) chars.insert(w.begin(), w.end());
  const std::size_t minimum = Vocab::kReserved + 2 * chars.size();
  if (vocab_size < minimum) {
    throw DataError("train_wordpiece: vocab_size " + std::to_string(vocab_size) +
                    " below minimum " + std::to_string(minimum) + " (reserved + alphabet)");
  }

  std::vector<std::string> tokens = reserved_tokens();
  for (char c : chars) tokens.emplace_back(1, c);
  for (char c : chars) tokens.push_back(std::string(Vocab::kContinuation) + c);
  std::set<std::string> known(tokens.begin(), tokens.end());

  struct Word {
    std::vector<std::string> pieces;
    std::size_t count;
  };
  std::vector<Word> words;
  for (const auto& [w, n] : word_counts) {
    Word word{{}, n};
    for (std::size_t i = 0; i < w.size(); ++i) {
      word.pieces.push_back(i == 0 ? std::string(1, w[i])
                                   : std::string(Vocab::kContinuation) + w[i]);
    }
    words.push_back(std::move(word));
  }

  while (tokens.size() < vocab_size) {
    std::map<std::pair<std::string, std::string>, std::size_t> pairs;
    for (const auto& w : words) {
      for (std::size_t i = 0; i + 1 < w.pieces.size(); ++i) {
        pairs[{w.pieces[i], w.pieces[i + 1]}] += w.count;
      }
    }
    if (pairs.empty()) break;
    // std::map iterates in lexicographic order, so the first maximum wins ties.
    auto best = pairs.begin();
    for (auto it = pairs.begin(); it != pairs.end(); ++it) {
      if (it->second > best->second) best = it;
    }
    const auto [left, right] = best->first;
    const std::string token = merged(left, right);
    for (auto& w : words) {
      std::vector<std::string> next;
      for (std::size_t i = 0; i < w.pieces.size(); ++i) {
        if (i + 1 < w.pieces.size() && w.pieces[i] == left && w.pieces[i + 1] == right) {
          next.push_back(token);
          ++i;
        } else {
          next.push_back(w.pieces[i]);
        }
      }
      w.pieces = std::move(next);
    }
    if (known.insert(token).second) tokens.push_back(token);
  }
  return Vocab(std::move(tokens));
}

std::vector<int> encode_text(std::string_view text, const Vocab& vocab) {
  std::vector<int> ids;
  for (const auto& word : split_words(text)) {
    std::vector<int> pieces;
    std::size_t start = 0;
    bool ok = true;
    while (start < word.size()) {
      std::optional<int> match;
      std::size_t end = word.size();
      for (; end > start; --end) {
        std::string piece = word.substr(start, end - start);
        if (start > 0) piece = std::string(Vocab::kContinuation) + piece;
        if ((match = vocab.find(piece))) break;
      }
      if (!match) {
        ok = false;
        break;
      }
      pieces.push_back(*match);
      start = end;
    }
    if (ok) {
      ids.insert(ids.end(), pieces.begin(), pieces.end());
    } else {
      ids.push_back(Vocab::kUnk);
    }
  }
  return ids;
}

std::string decode_text(std::span<const int> ids, const Vocab& vocab) {
  std::string out;
  for (int id : ids) {
    const auto& t = vocab.token(id);
    if (is_continuation(t) && id >= static_cast<int>(Vocab::kReserved)) {
      out += t.substr(Vocab::kContinuation.size());
    } else {
      if (!out.empty()) out += ' ';
      out += t;
    }
  }
  return out;
}

}  // namespace stbert::corpus
