// Copyright 2026 The stbert Authors
// SPDX-License-Identifier: Apache-2.0

#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "stbert/acoustic/posteriorgram.hpp"
#include "stbert/common/error.hpp"
#include "stbert/corpus/synthetic.hpp"

using namespace stbert;
using namespace stbert::acoustic;
using corpus::Segment;

namespace {

const std::vector<Segment> kSegments{{3, 0, 4}, {0, 4, 5}, {39, 5, 9}, {17, 9, 12}};

}  // namespace

TEST_CASE("zero confusion gives one-hot rows of the gold labels") {
  PosteriorNoise noise;
  noise.confusion_mass = 0.0;
  const auto g = synthesize_posteriorgram(kSegments, 40, noise, 1);
  REQUIRE(g.frames() == 12);
  REQUIRE(g.phonemes() == 40);
  const auto gold = corpus::frame_labels(kSegments);
  for (std::size_t t = 0; t < g.frames(); ++t) {
    for (std::size_t q = 0; q < 40; ++q) CHECK(g(t, q) == (static_cast<int>(q) == gold[t] ? 1.0 : 0.0));
  }
}

TEST_CASE("noisy rows are distributions peaked at the gold phoneme") {
  const auto c = corpus::generate_corpus([] {
    corpus::SyntheticSpec s;
    s.pretrain_size = 100;
    s.finetune_size = 0;
    s.test_size = 0;
    return s;
  }(), 3);
  PosteriorNoise noise;
  noise.confusion_mass = 0.15;
  std::uint64_t seed = 0;
  for (const auto& u : c.pretrain) {
    const auto g = synthesize_posteriorgram(u.segments, 40, noise, ++seed);
    CHECK(g.frames() == u.frames());
    const auto gold = corpus::frame_labels(u.segments);
    for (std::size_t t = 0; t < g.frames(); ++t) {
      double sum = 0;
      for (double p : g.row(t)) {
        CHECK(p >= 0.0);
        sum += p;
      }
      CHECK(std::abs(sum - 1.0) < 1e-6);
    }
    CHECK(posterior_frame_labels(g) == gold);
  }
}

TEST_CASE("confusion mass stays within the neighbor window") {
  PosteriorNoise noise;
  noise.confusion_mass = 0.3;
  noise.neighbor_width = 1;
  const auto g = synthesize_posteriorgram(kSegments, 40, noise, 9);
  const auto gold = corpus::frame_labels(kSegments);
  for (std::size_t t = 0; t < g.frames(); ++t) {
    for (std::size_t q = 0; q < 40; ++q) {
      if (std::abs(static_cast<int>(q) - gold[t]) > 1) CHECK(g(t, q) == 0.0);
    }
  }
}

TEST_CASE("synthesis is deterministic in the seed") {
  PosteriorNoise noise;
  const auto a = synthesize_posteriorgram(kSegments, 40, noise, 5);
  const auto b = synthesize_posteriorgram(kSegments, 40, noise, 5);
  const auto c = synthesize_posteriorgram(kSegments, 40, noise, 6);
  CHECK(a == b);
  CHECK_FALSE(a == c);
}

TEST_CASE("argmax labels: one-hot rows and uniform ties") {
  Posteriorgram g(2, 4, {0, 0, 1, 0, 0.25, 0.25, 0.25, 0.25});
  CHECK(posterior_frame_labels(g) == std::vector<int>{2, 0});
}

TEST_CASE("invalid noise settings and segments are rejected") {
  PosteriorNoise noise;
  noise.confusion_mass = 1.0;
  CHECK_THROWS_AS(noise.validate(), DataError);
  noise = {};
  noise.temperature = 0.0;
  CHECK_THROWS_AS(noise.validate(), DataError);
  CHECK_THROWS_AS(synthesize_posteriorgram(std::vector<Segment>{{0, 1, 2}}, 40, {}, 1), DataError);
  CHECK_THROWS_AS(synthesize_posteriorgram(std::vector<Segment>{{40, 0, 2}}, 40, {}, 1), DataError);
}

TEST_CASE("binary dump roundtrips at float precision and rejects bad files") {
  const auto path = std::filesystem::temp_directory_path() / "stbert_acoustic_test.pgram";
  const auto g = synthesize_posteriorgram(kSegments, 40, {}, 2);
  write_posteriorgram(g, path);
  CHECK(std::filesystem::file_size(path) == 6 + 8 + 12 * 40 * 4);
  const auto back = read_posteriorgram(path);
  REQUIRE(back.frames() == 12);
  REQUIRE(back.phonemes() == 40);
  for (std::size_t i = 0; i < g.values().size(); ++i) {
    CHECK(back.values()[i] == static_cast<double>(static_cast<float>(g.values()[i])));
  }
  {
    std::ofstream out(path, std::ios::binary);
    out << "PGRAM0";
  }
  CHECK_THROWS_AS(read_posteriorgram(path), DataError);
  std::filesystem::remove(path);
}
