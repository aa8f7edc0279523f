// Copyright 2026 The stbert Authors
// SPDX-License-Identifier: Apache-2.0

#include "stbert/corpus/alignment_io.hpp"

#include <charconv>
#include <fstream>
#include <string>
#include <string_view>

#include "stbert/common/error.hpp"

namespace stbert::corpus {

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return fields;
}

template <typename Int>
bool parse_int(std::string_view s, Int& out) {
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end && !s.empty();
}

[[noreturn]] void fail(std::size_t line_no, const std::string& what) {
  throw DataError("alignment line " + std::to_string(line_no) + ": " + what);
}

}  // namespace

void write_alignment(std::span<const AlignedUtterance> utterances, const PhonemeInventory& inventory,
                     const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write alignment file " + path.string());
  for (std::size_t i = 0; i < utterances.size(); ++i) {
    const auto& u = utterances[i];
    validate_segments(u.segments, inventory.size());
    if (i) out << '\n';
    out << u.id << '\t' << u.transcript << '\t' << (u.intent ? std::to_string(*u.intent) : "-") << '\n';
    for (const auto& s : u.segments) {
      out << inventory.symbol(s.phoneme) << '\t' << s.start << '\t' << s.end << '\n';
    }
  }
  if (!out) throw DataError("write failed for " + path.string());
}

std::vector<AlignedUtterance> read_alignment(const std::filesystem::path& path,
                                             const PhonemeInventory& inventory, const Vocab* vocab) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read alignment file " + path.string());
  std::vector<AlignedUtterance> out;
  std::string line;
  std::size_t line_no = 0;
  std::size_t header_line = 0;
  bool in_utterance = false;

  const auto finish = [&] {
    if (!in_utterance) return;
    auto& u = out.back();
    if (u.segments.empty()) fail(header_line, "utterance '" + u.id + "' has no segments");
    if (vocab) u.subword_ids = encode_text(u.transcript, *vocab);
    in_utterance = false;
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      finish();
      continue;
    }
    const auto fields = split_tabs(line);
    if (fields.size() != 3) fail(line_no, "expected 3 tab-separated fields, got " + std::to_string(fields.size()));
    if (!in_utterance) {
      AlignedUtterance u;
      if (fields[0].empty()) fail(line_no, "empty utterance id");
      u.id = std::string(fields[0]);
      u.transcript = std::string(fields[1]);
      if (fields[2] != "-") {
        int intent = 0;
        if (!parse_int(fields[2], intent) || intent < 0) fail(line_no, "bad intent '" + std::string(fields[2]) + "'");
        u.intent = intent;
      }
      out.push_back(std::move(u));
      in_utterance = true;
      header_line = line_no;
      continue;
    }
    Segment s;
    const auto phoneme = inventory.find(fields[0]);
    if (!phoneme) fail(line_no, "unknown phoneme '" + std::string(fields[0]) + "'");
    s.phoneme = *phoneme;
    if (!parse_int(fields[1], s.start) || !parse_int(fields[2], s.end)) fail(line_no, "bad frame number");
    auto& segs = out.back().segments;
    const std::uint32_t expected = segs.empty() ? 0 : segs.back().end;
    if (s.start < expected) fail(line_no, "overlapping segments");
    if (s.start != expected) fail(line_no, "non-contiguous segments");
    if (s.end <= s.start) fail(line_no, "empty segment");
    segs.push_back(s);
  }
  finish();
  return out;
}

}  // namespace stbert::corpus
