// Copyright 2026 The stbert Authors
// SPDX-License-Identifier: Apache-2.0

#include "stbert/corpus/synthetic.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <set>

#include "stbert/common/error.hpp"
#include "stbert/common/random.hpp"

namespace stbert::corpus {

namespace {

enum class Split : std::uint64_t { kPretrain = 1, kFinetune = 2, kTest = 3 };

constexpr std::uint64_t kLexiconStream = 0xC0FFEEULL;
constexpr std::uint64_t kDomainStream = 0xD0D0ULL;

std::string spell(const PhonemeInventory& inv, const std::vector<int>& pron) {
  std::string word;
  for (int p : pron) {
    for (char c : inv.symbol(p)) word += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return word;
}

Lexicon make_lexicon(const SyntheticSpec& spec, const PhonemeInventory& inv, std::uint64_t seed) {
  Rng rng(derive_seed(seed, kLexiconStream));
  Lexicon lex;
  std::set<std::vector<int>> prons;
  std::size_t attempts = 0;
  const std::size_t max_attempts = 1000 * spec.words + 1000;
  while (lex.size() < spec.words) {
    if (++attempts > max_attempts) {
      throw DataError("cannot draw " + std::to_string(spec.words) +
                      " distinct words from the phoneme inventory");
    }
    const auto len = static_cast<std::size_t>(uniform_int(
        rng, static_cast<std::int64_t>(spec.min_word_phonemes), static_cast<std::int64_t>(spec.max_word_phonemes)));
    std::vector<int> pron(len);
    for (auto& p : pron) p = static_cast<int>(uniform_int(rng, 0, static_cast<std::int64_t>(inv.size()) - 1));
    std::string word = spell(inv, pron);
    if (prons.count(pron) || lex.contains(word)) continue;
    prons.insert(pron);
    lex.add(std::move(word), std::move(pron));
  }
  return lex;
}

/// Categorical sampler over a word list.
struct WordSampler {
  std::vector<std::string> words;
  std::vector<double> cumulative;  // empty => uniform

  const std::string& draw(Rng& rng) const {
    if (cumulative.empty()) {
      return words[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(words.size()) - 1))];
    }
    const double u = uniform01(rng) * cumulative.back();
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    return words[std::min(static_cast<std::size_t>(it - cumulative.begin()), words.size() - 1)];
  }
};

struct Generator {
  const SyntheticSpec& spec;
  const PhonemeInventory& inventory;
  const Lexicon& lexicon;
  std::vector<std::string> actions;
  std::vector<std::string> objects;
  WordSampler pretrain_words;
  WordSampler domain_fillers;

  AlignedUtterance align(std::string id, const std::vector<std::string>& words, Rng& rng) const {
    AlignedUtterance u;
    u.id = std::move(id);
    const double rate = 1.0 + spec.duration_jitter * (2.0 * uniform01(rng) - 1.0);
    std::uint32_t t = 0;
    for (std::size_t i = 0; i < words.size(); ++i) {
      if (i) u.transcript += ' ';
      u.transcript += words[i];
      for (int p : lexicon.pronunciation(words[i])) {
        const auto base = static_cast<double>(uniform_int(
            rng, static_cast<std::int64_t>(spec.min_frames), static_cast<std::int64_t>(spec.max_frames)));
        const auto dur = static_cast<std::uint32_t>(std::max(1L, std::lround(base * rate)));
        u.segments.push_back({p, t, t + dur});
        t += dur;
      }
    }
    return u;
  }

  std::size_t draw_length(Rng& rng) const {
    return static_cast<std::size_t>(uniform_int(rng, static_cast<std::int64_t>(spec.min_words),
                                                static_cast<std::int64_t>(spec.max_words)));
  }

  AlignedUtterance pretrain_utterance(std::string id, Rng& rng) const {
    std::vector<std::string> words(draw_length(rng));
    for (auto& w : words) w = pretrain_words.draw(rng);
    return align(std::move(id), words, rng);
  }

  AlignedUtterance labeled_utterance(std::string id, Rng& rng) const {
    const int intent = static_cast<int>(uniform_int(rng, 0, static_cast<std::int64_t>(spec.intent_count()) - 1));
    std::vector<std::string> words(draw_length(rng));
    for (auto& w : words) w = domain_fillers.draw(rng);
    const auto pick_slot = [&] {
      return static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(words.size()) - 1));
    };
    if (intent != spec.null_intent()) {
      const auto a = static_cast<std::size_t>(intent) / spec.objects;
      const auto o = static_cast<std::size_t>(intent) % spec.objects;
      const std::size_t action_slot = pick_slot();
      std::size_t object_slot = pick_slot();
      while (object_slot == action_slot) object_slot = pick_slot();
      words[action_slot] = actions[a];
      words[object_slot] = objects[o];
    } else if (bernoulli(rng, 0.5)) {
      // A lone keyword of one kind still leaves the utterance intent-free.
      const bool use_action = bernoulli(rng, 0.5);
      const auto& pool = use_action ? actions : objects;
      words[pick_slot()] =
          pool[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(pool.size()) - 1))];
    }
    auto u = align(std::move(id), words, rng);
    u.intent = intent;
    return u;
  }

  AlignedUtterance make(Split split, std::size_t index, std::uint64_t seed, std::uint64_t attempt) const {
    const auto stream = (static_cast<std::uint64_t>(split) << 56) ^ (attempt << 32) ^ index;
    Rng rng(derive_seed(seed, stream));
    static const char* kPrefix[] = {"", "pt", "ft", "te"};
    char id[32];
    std::snprintf(id, sizeof(id), "%s-%06zu", kPrefix[static_cast<int>(split)], index);
    return split == Split::kPretrain ? pretrain_utterance(id, rng) : labeled_utterance(id, rng);
  }
};

}  // namespace

std::size_t SyntheticSpec::domain_words() const {
  return static_cast<std::size_t>(std::lround(static_cast<double>(words) / (1.0 + extra_vocab_fraction)));
}

void SyntheticSpec::validate() const {
  auto range = [](std::size_t lo, std::size_t hi, const char* what) {
    if (lo > hi) throw DataError(std::string("synthetic spec: empty range for ") + what);
  };
  if (phonemes == 0) throw DataError("synthetic spec: phonemes must be positive");
  range(min_words, max_words, "words per utterance");
  range(min_word_phonemes, max_word_phonemes, "phonemes per word");
  range(min_frames, max_frames, "frames per phoneme");
  if (min_words < 2) throw DataError("synthetic spec: utterances need at least 2 words");
  if (min_word_phonemes == 0 || min_frames == 0) throw DataError("synthetic spec: zero-length unit");
  if (actions == 0 || objects == 0) throw DataError("synthetic spec: intent count must be at least 2");
  if (duration_jitter < 0.0 || duration_jitter >= 1.0) throw DataError("synthetic spec: jitter must be in [0,1)");
  if (extra_vocab_fraction < 0.0) throw DataError("synthetic spec: negative extra vocabulary");
  if (domain_words() <= actions + objects || words < actions + objects + 1) {
    throw DataError("synthetic spec: W=" + std::to_string(words) +
                    " leaves no filler words beyond the " + std::to_string(actions + objects) +
                    " keywords");
  }
  const std::size_t shortest = min_words * min_word_phonemes * 1 + min_words + 3;
  if (shortest > max_sequence) throw DataError("synthetic spec: max_sequence too small for any utterance");
}

int intent_from_transcript(std::string_view transcript, std::span<const std::string> actions,
                           std::span<const std::string> objects) {
  int action = -1, object = -1, action_hits = 0, object_hits = 0;
  for (const auto& w : split_words(transcript)) {
    for (std::size_t i = 0; i < actions.size(); ++i) {
      if (w == actions[i]) {
        action = static_cast<int>(i);
        ++action_hits;
      }
    }
    for (std::size_t i = 0; i < objects.size(); ++i) {
      if (w == objects[i]) {
        object = static_cast<int>(i);
        ++object_hits;
      }
    }
  }
  if (action_hits == 1 && object_hits == 1) return action * static_cast<int>(objects.size()) + object;
  return static_cast<int>(actions.size() * objects.size());
}

SyntheticCorpus generate_corpus(const SyntheticSpec& spec, std::uint64_t seed) {
  spec.validate();
  SyntheticCorpus c;
  c.inventory = PhonemeInventory::standard(spec.phonemes);
  c.lexicon = make_lexicon(spec, c.inventory, seed);
  c.lexicon.validate(spec.phonemes);

  const auto& words = c.lexicon.words();
  const std::size_t n_keywords = spec.actions + spec.objects;
  const std::size_t n_domain = spec.domain_words();
  c.action_keywords.assign(words.begin(), words.begin() + static_cast<std::ptrdiff_t>(spec.actions));
  c.object_keywords.assign(words.begin() + static_cast<std::ptrdiff_t>(spec.actions),
                           words.begin() + static_cast<std::ptrdiff_t>(n_keywords));

  Generator gen{spec, c.inventory, c.lexicon, c.action_keywords, c.object_keywords, {}, {}};
  gen.pretrain_words.words = words;
  gen.domain_fillers.words.assign(words.begin() + static_cast<std::ptrdiff_t>(n_keywords),
                                  words.begin() + static_cast<std::ptrdiff_t>(n_domain));
  if (spec.domain_shift) {
    Rng rng(derive_seed(seed, kDomainStream));
    shuffle(gen.domain_fillers.words.begin(), gen.domain_fillers.words.end(), rng);
    double acc = 0.0;
    for (std::size_t r = 0; r < gen.domain_fillers.words.size(); ++r) {
      acc += 1.0 / static_cast<double>(r + 1);
      gen.domain_fillers.cumulative.push_back(acc);
    }
  }

  const std::pair<Split, std::size_t> plan[] = {
      {Split::kPretrain, spec.pretrain_size}, {Split::kFinetune, spec.finetune_size}, {Split::kTest, spec.test_size}};
  std::vector<AlignedUtterance>* outputs[] = {&c.pretrain, &c.finetune, &c.test};
  for (std::size_t s = 0; s < 3; ++s) {
    for (std::size_t i = 0; i < plan[s].second; ++i) outputs[s]->push_back(gen.make(plan[s].first, i, seed, 0));
  }

  std::vector<std::string> texts;
  for (const auto* split : {&c.pretrain, &c.finetune}) {
    for (const auto& u : *split) texts.push_back(u.transcript);
  }
  if (texts.empty()) {
    for (const auto& u : c.test) texts.push_back(u.transcript);
  }
  c.vocab = train_wordpiece(texts, spec.vocab_size);

  for (std::size_t s = 0; s < 3; ++s) {
    auto& split = *outputs[s];
    for (std::size_t i = 0; i < split.size(); ++i) {
      for (std::uint64_t attempt = 1;; ++attempt) {
        auto& u = split[i];
        u.subword_ids = encode_text(u.transcript, c.vocab);
        if (u.frames() + u.subword_ids.size() + 3 <= spec.max_sequence) break;
        if (attempt > 1000) throw DataError("synthetic spec: cannot fit utterances within max_sequence");
        u = gen.make(plan[s].first, i, seed, attempt);
      }
      validate_segments(split[i].segments, spec.phonemes);
      check_pronunciation(split[i], c.lexicon);
    }
  }
  return c;
}

}  // namespace stbert::corpus
