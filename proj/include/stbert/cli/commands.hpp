// Copyright 2026 The stbert Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "stbert/cli/run_config.hpp"
#include "stbert/corpus/phonemes.hpp"
#include "stbert/corpus/synthetic.hpp"
#include "stbert/corpus/wordpiece.hpp"
#include "stbert/trainer/dataset.hpp"
#include "stbert/trainer/metrics.hpp"

namespace stbert::cli {

/// A corpus ready for training: pretraining, fine-tuning and test sets with
/// posteriorgrams attached.
struct CorpusBundle {
  corpus::PhonemeInventory inventory;
  corpus::Vocab vocab;
  trainer::Dataset pretrain;
  trainer::Dataset finetune;
  trainer::Dataset test;
};

/// Writes inventory.txt, vocab.txt and {pretrain,finetune,test}.align.
void write_corpus(const corpus::SyntheticCorpus& corpus, const std::filesystem::path& dir);
CorpusBundle load_corpus(const RunConfig& config, const std::filesystem::path& dir);
/// Attaches posteriorgrams to an in-memory corpus. Fine-tuning and test
/// posteriors use the domain confusion mass.
CorpusBundle make_bundle(const corpus::SyntheticCorpus& corpus, const RunConfig& config);

struct GradientResult {
  std::string name;
  double max_relative_error = 0.0;
  std::size_t coordinates = 0;
};

inline constexpr double kGradientThreshold = 1e-5;

/// Finite-difference checks of every differentiable op and of the full
/// pre-training and fine-tuning losses on a 2-utterance batch, in double.
std::vector<GradientResult> gradient_suite(std::uint64_t seed = 0);

struct AblationRow {
  std::string stage;
  std::string regime;
  double fraction = 0.0;
  double mean = 0.0;
  double stddev = 0.0;
};

inline constexpr double kAblationFractions[] = {1.0, 0.1, 0.01};

/// Regimes full, -CM-CLM, -text-data and +DAPT, each fine-tuned at label
/// fractions 1.0, 0.1 and 0.01. Accuracies are pooled over ablate.seeds
/// pre-training seeds.
std::vector<AblationRow> run_ablation(const RunConfig& config, const CorpusBundle& data,
                                      trainer::MetricsLog* log = nullptr, std::ostream* progress = nullptr);
void write_summary(const std::vector<AblationRow>& rows, std::ostream& out);

/// Command-line entry point: 0 on success, 1 on usage errors, 2 on data,
/// configuration or validation errors.
int run_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace stbert::cli
