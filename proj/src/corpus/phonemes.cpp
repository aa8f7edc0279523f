// Copyright 2026 The stbert Authors
// SPDX-License-Identifier: Apache-2.0

#include "stbert/corpus/phonemes.hpp"

#include <sstream>

#include "stbert/common/error.hpp"

namespace stbert::corpus {

void validate_segments(std::span<const Segment> segments, std::size_t phoneme_count) {
  std::uint32_t expected = 0;
  for (std::size_t k = 0; k < segments.size(); ++k) {
    const auto& s = segments[k];
    if (s.start < expected) {
      throw DataError("overlapping segments at segment " + std::to_string(k));
    }
    if (s.start != expected) {
      throw DataError("non-contiguous segments at segment " + std::to_string(k) + " (expected start " +
                      std::to_string(expected) + ", got " + std::to_string(s.start) + ")");
    }
    if (s.end <= s.start) throw DataError("empty segment at segment " + std::to_string(k));
    if (s.phoneme < 0 || (phoneme_count && static_cast<std::size_t>(s.phoneme) >= phoneme_count)) {
      throw DataError("phoneme index " + std::to_string(s.phoneme) + " out of range");
    }
    expected = s.end;
  }
}

std::vector<int> frame_labels(std::span<const Segment> segments) {
  std::vector<int> labels;
  for (const auto& s : segments) labels.insert(labels.end(), s.length(), s.phoneme);
  return labels;
}

PhonemeInventory::PhonemeInventory(std::vector<std::string> symbols) : symbols_(std::move(symbols)) {
  if (symbols_.empty()) throw DataError("phoneme inventory is empty");
  for (std::size_t i = 0; i < symbols_.size(); ++i) {
    if (symbols_[i].empty()) throw DataError("empty phoneme symbol");
    if (!index_.emplace(symbols_[i], static_cast<int>(i)).second) {
      throw DataError("duplicate phoneme symbol '" + symbols_[i] + "'");
    }
  }
}

PhonemeInventory PhonemeInventory::standard(std::size_t count) {
  static const char* kArpabet[] = {"AA", "AE", "AH", "AO", "AW", "AY", "B",  "CH", "D",  "DH",
                                   "EH", "ER", "EY", "F",  "G",  "HH", "IH", "IY", "JH", "K",
                                   "L",  "M",  "N",  "NG", "OW", "OY", "P",  "R",  "S",  "SH",
                                   "T",  "TH", "UH", "UW", "V",  "W",  "Y",  "Z",  "ZH", "DX"};
  std::vector<std::string> symbols;
  for (std::size_t i = 0; i < count; ++i) {
    symbols.push_back(i < std::size(kArpabet) ? kArpabet[i] : "Q" + std::to_string(i));
  }
  return PhonemeInventory(std::move(symbols));
}

const std::string& PhonemeInventory::symbol(int index) const {
  if (index < 0 || static_cast<std::size_t>(index) >= symbols_.size()) {
    throw DataError("phoneme index " + std::to_string(index) + " out of range");
  }
  return symbols_[static_cast<std::size_t>(index)];
}

std::optional<int> PhonemeInventory::find(std::string_view symbol) const {
  auto it = index_.find(symbol);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void Lexicon::add(std::string word, std::vector<int> pronunciation) {
  if (pronunciation.empty()) throw DataError("empty pronunciation for '" + word + "'");
  if (entries_.count(word)) throw DataError("duplicate lexicon word '" + word + "'");
  words_.push_back(word);
  entries_.emplace(std::move(word), std::move(pronunciation));
}

bool Lexicon::contains(std::string_view word) const { return entries_.find(word) != entries_.end(); }

const std::vector<int>& Lexicon::pronunciation(std::string_view word) const {
  auto it = entries_.find(word);
  if (it == entries_.end()) throw DataError("word '" + std::string(word) + "' not in lexicon");
  return it->second;
}

void Lexicon::validate(std::size_t phoneme_count) const {
  for (const auto& [word, pron] : entries_) {
    for (int p : pron) {
      if (p < 0 || static_cast<std::size_t>(p) >= phoneme_count) {
        throw DataError("lexicon entry '" + word + "' uses phoneme " + std::to_string(p));
      }
    }
  }
}

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

void check_pronunciation(const AlignedUtterance& utterance, const Lexicon& lexicon) {
  std::vector<int> expected;
  for (const auto& w : split_words(utterance.transcript)) {
    const auto& p = lexicon.pronunciation(w);
    expected.insert(expected.end(), p.begin(), p.end());
  }
  std::vector<int> actual;
  for (const auto& s : utterance.segments) actual.push_back(s.phoneme);
  if (actual != expected) {
    throw DataError("utterance " + utterance.id + ": segments do not match lexicon pronunciation");
  }
}

}  // namespace stbert::corpus
