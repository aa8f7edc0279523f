// Copyright 2026 The stbert Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace stbert::trainer {

struct StepRecord {
  std::size_t step = 0;
  std::string stage;
  std::string task;
  double loss = 0.0;
  double lr = 0.0;
  std::size_t masked_count = 0;
  bool skipped = false;
};

struct EvalRecord {
  std::size_t step = 0;
  std::string stage;
  std::string split;
  double accuracy = 0.0;
  std::optional<double> loss;
  std::optional<int> subset_id;
};

/// JSON-lines metrics sink. Wall-clock time is written only when enabled,
/// so that logs of identical runs are byte-identical by default.
class MetricsLog {
 public:
  explicit MetricsLog(std::ostream& out, bool wall_time = false);
  static std::unique_ptr<MetricsLog> open(const std::filesystem::path& path, bool wall_time = false);

  /// First line: the fully resolved run configuration.
  void header(const std::vector<std::pair<std::string, std::string>>& config);
  void step(const StepRecord& r);
  void eval(const EvalRecord& r);
  /// Subset id attached to subsequent evaluation records.
  void set_subset(std::optional<int> id) { subset_ = id; }

 private:
  double wall_ms() const;

  std::unique_ptr<std::ofstream> owned_;
  std::ostream* out_;
  bool wall_time_;
  std::optional<int> subset_;
  std::chrono::steady_clock::time_point start_;
};

/// Parses the header line written by MetricsLog::header.
std::vector<std::pair<std::string, std::string>> parse_metrics_header(const std::string& line);

}  // namespace stbert::trainer
