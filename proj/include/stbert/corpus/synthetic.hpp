// Copyright 2026 The stbert Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "stbert/corpus/phonemes.hpp"
#include "stbert/corpus/types.hpp"
#include "stbert/corpus/wordpiece.hpp"

namespace stbert::corpus {

/// Shape of the synthetic paired speech/text corpus.
struct SyntheticSpec {
  std::size_t phonemes = 40;
  std::size_t words = 200;
  std::size_t min_words = 3;
  std::size_t max_words = 10;
  std::size_t min_word_phonemes = 2;
  std::size_t max_word_phonemes = 6;
  std::size_t min_frames = 2;
  std::size_t max_frames = 5;
  /// Per-utterance speaking-rate jitter: durations scale by a factor drawn
  /// from [1 - jitter, 1 + jitter].
  double duration_jitter = 0.25;
  std::size_t actions = 6;
  std::size_t objects = 5;
  /// Pretraining-only words as a fraction of the fine-tuning domain's size.
  double extra_vocab_fraction = 0.2;
  std::size_t pretrain_size = 2000;
  std::size_t finetune_size = 2000;
  std::size_t test_size = 500;
  std::size_t vocab_size = 256;
  /// Longest allowed packed pretraining sequence ([CLS] speech [SEP] text [SEP]).
  std::size_t max_sequence = 256;
  /// Fine-tune/test filler words follow a skewed (Zipf) distribution over a
  /// reshuffled domain word list instead of the uniform one.
  bool domain_shift = false;

  std::size_t intent_count() const { return actions * objects + 1; }
  int null_intent() const { return static_cast<int>(actions * objects); }
  /// Words shared by pretraining and fine-tuning (keywords included).
  std::size_t domain_words() const;
  /// Throws DataError when a range is empty or infeasible.
  void validate() const;
};

struct SyntheticCorpus {
  PhonemeInventory inventory;
  Lexicon lexicon;
  Vocab vocab;
  std::vector<std::string> action_keywords;
  std::vector<std::string> object_keywords;
  std::vector<AlignedUtterance> pretrain;
  std::vector<AlignedUtterance> finetune;
  std::vector<AlignedUtterance> test;
};

/// Deterministic in (spec, seed). Intents are a function of the transcript
/// (see intent_from_transcript); pretraining utterances carry no intent.
SyntheticCorpus generate_corpus(const SyntheticSpec& spec, std::uint64_t seed);

/// Intent rule: exactly one action keyword occurrence and exactly one object
/// keyword occurrence give action * |objects| + object; anything else is
/// the null intent.
int intent_from_transcript(std::string_view transcript, std::span<const std::string> actions,
                           std::span<const std::string> objects);

}  // namespace stbert::corpus
