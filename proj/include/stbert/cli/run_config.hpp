// Copyright 2026 The stbert Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "stbert/acoustic/posteriorgram.hpp"
#include "stbert/common/error.hpp"
#include "stbert/corpus/synthetic.hpp"
#include "stbert/model/params.hpp"
#include "stbert/trainer/config.hpp"

namespace stbert::cli {

struct ConfigError : DataError {
  using DataError::DataError;
};

/// Everything a run needs. Model vocabulary sizes (phonemes, subwords,
/// intents) follow the corpus settings.
struct RunConfig {
  corpus::SyntheticSpec corpus;
  std::uint64_t corpus_seed = 1;

  acoustic::PosteriorNoise noise;
  /// Confusion mass for fine-tuning and test posteriors.
  double domain_confusion_mass = 0.15;
  std::uint64_t acoustic_seed = 2;

  model::ModelConfig model;

  /// Text-only base stage; base.total_steps = 0 skips it.
  trainer::TrainConfig base;
  trainer::TrainConfig pretrain;
  trainer::TrainConfig dapt;
  trainer::TrainConfig finetune;

  double shortage_fraction = 0.01;
  /// 0 selects the default count for the fraction.
  std::size_t shortage_subsets = 0;
  std::size_t ablate_seeds = 1;

  std::string run_dir = "run";
  std::string corpus_dir;
  std::string checkpoint_in;
  std::string checkpoint_out;
  std::string metrics;
  std::string summary;
  bool log_wall_time = false;

  RunConfig();

  /// Fully resolved settings in canonical key order.
  std::vector<std::pair<std::string, std::string>> to_pairs() const;
  /// Throws ConfigError for unknown keys or malformed values.
  void set(std::string_view key, std::string_view value);
  /// Copies corpus-derived sizes into the model config and validates.
  void finalize();

  friend bool operator==(const RunConfig&, const RunConfig&);
};

/// `key = value` lines; `#` starts a comment; blank lines are ignored.
void apply_config_text(RunConfig& config, std::string_view text, std::string_view origin = "config");
void apply_config_file(RunConfig& config, const std::filesystem::path& path);
/// "key=value" override as given on the command line.
void apply_override(RunConfig& config, std::string_view assignment);

std::string format_double(double v);

}  // namespace stbert::cli
