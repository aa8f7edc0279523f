// Copyright 2026 The stbert Authors
// SPDX-License-Identifier: Apache-2.0

// Alignment TSV, UTF-8:
//
//   <id>\t<transcript>\t<intent index or "-">
//   <phoneme symbol>\t<start frame>\t<end frame, exclusive>
//   ...
//   <blank line between utterances>

#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "stbert/corpus/phonemes.hpp"
#include "stbert/corpus/types.hpp"
#include "stbert/corpus/wordpiece.hpp"

namespace stbert::corpus {

void write_alignment(std::span<const AlignedUtterance> utterances, const PhonemeInventory& inventory,
                     const std::filesystem::path& path);

/// Parses and validates an alignment file. Subword ids are not stored in the
/// file; they are re-derived from the transcript when `vocab` is given.
/// Errors name the offending line.
std::vector<AlignedUtterance> read_alignment(const std::filesystem::path& path,
                                             const PhonemeInventory& inventory,
                                             const Vocab* vocab = nullptr);

}  // namespace stbert::corpus
