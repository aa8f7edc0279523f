// Copyright 2026 The stbert Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "doctest.h"
#include "stbert/common/error.hpp"
#include "stbert/corpus/alignment_io.hpp"
#include "stbert/corpus/shortage.hpp"
#include "stbert/corpus/synthetic.hpp"

using namespace stbert;
using namespace stbert::corpus;

namespace {

SyntheticSpec small_spec() {
  SyntheticSpec s;
  s.pretrain_size = 150;
  s.finetune_size = 300;
  s.test_size = 60;
  return s;
}

const SyntheticCorpus& small_corpus() {
  static const SyntheticCorpus c = generate_corpus(small_spec(), 7);
  return c;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("stbert_corpus_test_" + name);
}

// Counts whole-word occurrences with a stream tokenizer.
int keyword_intent(const std::string& transcript, const std::vector<std::string>& actions,
                   const std::vector<std::string>& objects) {
  std::istringstream in(transcript);
  std::vector<std::string> words;
  for (std::string w; in >> w;) words.push_back(w);
  std::vector<int> a_hits, o_hits;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    for (int k = 0; k < std::count(words.begin(), words.end(), actions[i]); ++k) a_hits.push_back(static_cast<int>(i));
  }
  for (std::size_t i = 0; i < objects.size(); ++i) {
    for (int k = 0; k < std::count(words.begin(), words.end(), objects[i]); ++k) o_hits.push_back(static_cast<int>(i));
  }
  const int null_intent = static_cast<int>(actions.size() * objects.size());
  if (a_hits.size() != 1 || o_hits.size() != 1) return null_intent;
  return a_hits[0] * static_cast<int>(objects.size()) + o_hits[0];
}

AlignedUtterance toy_utterance(std::string id, std::vector<Segment> segments) {
  AlignedUtterance u;
  u.id = std::move(id);
  u.transcript = "word";
  u.segments = std::move(segments);
  return u;
}

}  // namespace

TEST_CASE("phoneme inventory is a bijection and rejects duplicates") {
  const auto inv = PhonemeInventory::standard(45);
  CHECK(inv.size() == 45);
  for (int i = 0; i < 45; ++i) CHECK(inv.find(inv.symbol(i)) == i);
  CHECK_THROWS_AS(PhonemeInventory({"AA", "AA"}), DataError);
  CHECK_THROWS_AS(inv.symbol(45), DataError);
}

TEST_CASE("segment validation") {
  CHECK_NOTHROW(validate_segments(std::vector<Segment>{{0, 0, 2}, {1, 2, 3}}, 2));
  CHECK_THROWS_WITH_AS(validate_segments(std::vector<Segment>{{0, 0, 5}, {1, 7, 9}}),
                       doctest::Contains("non-contiguous segments"), DataError);
  CHECK_THROWS_AS(validate_segments(std::vector<Segment>{{0, 1, 2}}), DataError);
  CHECK_THROWS_AS(validate_segments(std::vector<Segment>{{0, 0, 0}}), DataError);
  CHECK_THROWS_AS(validate_segments(std::vector<Segment>{{3, 0, 1}}, 3), DataError);
  CHECK(frame_labels(std::vector<Segment>{{4, 0, 2}, {1, 2, 3}}) == std::vector<int>{4, 4, 1});
}

TEST_CASE("generated intents stay in range and match an independent keyword matcher") {
  SyntheticSpec spec = small_spec();
  spec.actions = 6;
  spec.objects = 5;
  REQUIRE(spec.intent_count() == 31);
  const auto& c = small_corpus();
  std::set<int> seen;
  for (const auto* split : {&c.finetune, &c.test}) {
    for (const auto& u : *split) {
      REQUIRE(u.intent.has_value());
      CHECK(*u.intent >= 0);
      CHECK(*u.intent < 31);
      CHECK(*u.intent == keyword_intent(u.transcript, c.action_keywords, c.object_keywords));
      seen.insert(*u.intent);
    }
  }
  CHECK(seen.size() > 20);
  for (const auto& u : c.pretrain) CHECK_FALSE(u.intent.has_value());
}

TEST_CASE("generated utterances satisfy the alignment invariants") {
  const auto& c = small_corpus();
  const auto spec = small_spec();
  for (const auto* split : {&c.pretrain, &c.finetune, &c.test}) {
    for (const auto& u : *split) {
      CHECK_NOTHROW(validate_segments(u.segments, spec.phonemes));
      CHECK_NOTHROW(check_pronunciation(u, c.lexicon));
      CHECK(u.frames() + u.subword_ids.size() + 3 <= spec.max_sequence);
      CHECK(u.subword_ids == encode_text(u.transcript, c.vocab));
    }
  }
}

TEST_CASE("generation is deterministic in spec and seed") {
  const auto a = generate_corpus(small_spec(), 7);
  const auto& b = small_corpus();
  CHECK(a.pretrain == b.pretrain);
  CHECK(a.finetune == b.finetune);
  CHECK(a.test == b.test);
  CHECK(a.vocab == b.vocab);
  const auto other = generate_corpus(small_spec(), 8);
  CHECK_FALSE(other.finetune == b.finetune);
}

TEST_CASE("domain shift skews filler frequencies") {
  auto spec = small_spec();
  spec.domain_shift = true;
  spec.finetune_size = 600;
  const auto c = generate_corpus(spec, 7);
  std::map<std::string, int> counts;
  int total = 0;
  for (const auto& u : c.finetune) {
    for (const auto& w : split_words(u.transcript)) {
      ++counts[w];
      ++total;
    }
  }
  int top = 0;
  for (const auto& [w, n] : counts) top = std::max(top, n);
  // A uniform draw over about 150 fillers would give each well under 2%.
  CHECK(static_cast<double>(top) / total > 0.05);
}

TEST_CASE("infeasible specs are rejected") {
  auto spec = small_spec();
  spec.words = 10;
  CHECK_THROWS_AS(spec.validate(), DataError);
  spec = small_spec();
  spec.max_sequence = 4;
  CHECK_THROWS_AS(spec.validate(), DataError);
  spec = small_spec();
  spec.min_words = 5;
  spec.max_words = 4;
  CHECK_THROWS_AS(spec.validate(), DataError);
}

TEST_CASE("wordpiece on a three-word corpus performs the hand-derived merge") {
  // Pairs over {aa: 2, ab: 1}: (a, ##a) twice, (a, ##b) once. The minimum
  // vocabulary is 5 reserved + 4 character forms, so size 10 allows one merge.
  const std::vector<std::string> texts{"aa aa ab"};
  const auto v = train_wordpiece(texts, 10);
  CHECK(v.size() == 10);
  for (const char* t : {"a", "b", "##a", "##b", "aa"}) CHECK(v.find(t).has_value());
  CHECK(encode_text("aa", v) == std::vector<int>{*v.find("aa")});
  CHECK(encode_text("ab", v) == std::vector<int>{*v.find("a"), *v.find("##b")});
}

TEST_CASE("wordpiece at the minimum size holds only reserved tokens and characters") {
  const std::vector<std::string> texts{"abc cab"};
  const auto v = train_wordpiece(texts, Vocab::kReserved + 6);
  CHECK(v.size() == Vocab::kReserved + 6);
  for (std::size_t i = Vocab::kReserved; i < v.size(); ++i) {
    const auto& t = v.token(static_cast<int>(i));
    CHECK((t.size() == 1 || (t.size() == 3 && t.rfind("##", 0) == 0)));
  }
  CHECK_THROWS_AS(train_wordpiece(texts, Vocab::kReserved + 5), DataError);
}

TEST_CASE("encode and decode roundtrip on every generated transcript") {
  const auto& c = small_corpus();
  CHECK(encode_text("", c.vocab).empty());
  CHECK(decode_text(std::vector<int>{}, c.vocab).empty());
  for (const auto* split : {&c.pretrain, &c.finetune, &c.test}) {
    for (const auto& u : *split) CHECK(decode_text(encode_text(u.transcript, c.vocab), c.vocab) == u.transcript);
  }
  const auto& some_word = c.lexicon.words().front();
  const auto ids = encode_text(some_word, c.vocab);
  if (c.vocab.find(some_word)) CHECK(ids.size() == 1);
  CHECK(decode_text(std::vector<int>{Vocab::kUnk}, c.vocab) == "[UNK]");
  CHECK(encode_text("zzzz", Vocab(std::vector<std::string>{"[PAD]", "[CLS]", "[SEP]", "[MASK]", "[UNK]", "a"})) ==
        std::vector<int>{Vocab::kUnk});
}

TEST_CASE("vocab save and load roundtrip") {
  const auto path = temp_path("vocab.txt");
  small_corpus().vocab.save(path);
  CHECK(Vocab::load(path) == small_corpus().vocab);
  std::filesystem::remove(path);
}

TEST_CASE("alignment files roundtrip and reject gaps") {
  const auto& c = small_corpus();
  const auto path = temp_path("a.align");
  write_alignment(std::span<const AlignedUtterance>(), c.inventory, path);
  CHECK(std::filesystem::file_size(path) == 0);
  CHECK(read_alignment(path, c.inventory).empty());

  const std::vector<AlignedUtterance> two{c.finetune[0], c.pretrain[1]};
  write_alignment(two, c.inventory, path);
  CHECK(read_alignment(path, c.inventory, &c.vocab) == two);

  {
    std::ofstream out(path);
    out << "u1\tword\t-\nAA\t0\t5\nB\t7\t9\n";
  }
  CHECK_THROWS_WITH_AS(read_alignment(path, c.inventory), doctest::Contains("non-contiguous segments"), DataError);
  std::filesystem::remove(path);
}

TEST_CASE("pronunciation check catches mismatched segments") {
  const auto& c = small_corpus();
  auto u = c.pretrain[0];
  u.segments.front().phoneme = (u.segments.front().phoneme + 1) % 40;
  CHECK_THROWS_AS(check_pronunciation(u, c.lexicon), DataError);
}

TEST_CASE("shortage subsets: sizes, defaults and full fraction") {
  const auto& set = small_corpus().finetune;
  CHECK(default_subset_count(1.0) == 1);
  CHECK(default_subset_count(0.1) == 10);
  CHECK(default_subset_count(0.01) == 20);
  const auto full = split_shortage(set, 1.0, 3, 1);
  REQUIRE(full.size() == 3);
  for (const auto& s : full) CHECK(s.size() == set.size());
  const auto tenth = split_shortage(set, 0.1, 10, 1);
  REQUIRE(tenth.size() == 10);
  std::set<std::vector<std::size_t>> distinct(tenth.begin(), tenth.end());
  CHECK(distinct.size() == 10);
  for (const auto& s : tenth) {
    CHECK(s.size() == 30);
    CHECK(std::is_sorted(s.begin(), s.end()));
    CHECK(std::adjacent_find(s.begin(), s.end()) == s.end());
  }
  CHECK(split_shortage(set, 0.1, 10, 1) == tenth);
  CHECK_THROWS_AS(split_shortage(set, 0.0, 1, 1), DataError);
}

TEST_CASE("stratified subsets track the full-set intent histogram within one per class") {
  std::vector<AlignedUtterance> set;
  for (int i = 0; i < 1000; ++i) {
    auto u = toy_utterance("u" + std::to_string(i), {{0, 0, 1}});
    u.intent = (i * 7) % 10 < 6 ? i % 4 : 4;
    set.push_back(std::move(u));
  }
  std::map<int, double> full;
  for (const auto& u : set) full[*u.intent] += 1.0;
  const auto subsets = split_shortage(set, 0.1, 10, 5);
  REQUIRE(subsets.size() == 10);
  for (const auto& s : subsets) {
    REQUIRE(s.size() == 100);
    std::map<int, double> hist;
    for (auto i : s) hist[*set[i].intent] += 1.0;
    for (const auto& [intent, n] : full) CHECK(std::abs(hist[intent] - 0.1 * n) <= 1.0);
  }
}
