// Copyright 2026 The stbert Authors
// SPDX-License-Identifier: Apache-2.0

#include "stbert/trainer/metrics.hpp"

#include "json.hpp"
#include "stbert/common/error.hpp"

namespace stbert::trainer {

using json = nlohmann::ordered_json;

MetricsLog::MetricsLog(std::ostream& out, bool wall_time)
    : out_(&out), wall_time_(wall_time), start_(std::chrono::steady_clock::now()) {}

std::unique_ptr<MetricsLog> MetricsLog::open(const std::filesystem::path& path, bool wall_time) {
  auto file = std::make_unique<std::ofstream>(path, std::ios::trunc);
  if (!*file) throw DataError("cannot write metrics file " + path.string());
  auto log = std::make_unique<MetricsLog>(*file, wall_time);
  log->owned_ = std::move(file);
  return log;
}

double MetricsLog::wall_ms() const {
  if (!wall_time_) return 0.0;
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
}

void MetricsLog::header(const std::vector<std::pair<std::string, std::string>>& config) {
  json cfg = json::object();
  for (const auto& [k, v] : config) cfg[k] = v;
  *out_ << json{{"config", cfg}}.dump() << '\n';
  out_->flush();
}

void MetricsLog::step(const StepRecord& r) {
  json j{{"step", r.step}, {"stage", r.stage}, {"task", r.task}, {"loss", r.loss},
         {"lr", r.lr},     {"masked_count", r.masked_count},     {"wall_ms", wall_ms()}};
  if (r.skipped) j["skipped"] = true;
  *out_ << j.dump() << '\n';
}

void MetricsLog::eval(const EvalRecord& r) {
  json j{{"step", r.step}, {"stage", r.stage}, {"split", r.split}, {"accuracy", r.accuracy}};
  if (r.loss) j["loss"] = *r.loss;
  if (subset_) j["subset_id"] = *subset_;
  j["wall_ms"] = wall_ms();
  *out_ << j.dump() << '\n';
  out_->flush();
}

std::vector<std::pair<std::string, std::string>> parse_metrics_header(const std::string& line) {
  std::vector<std::pair<std::string, std::string>> out;
  try {
    const auto j = json::parse(line);
    for (const auto& [k, v] : j.at("config").items()) out.emplace_back(k, v.get<std::string>());
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed metrics header: ") + e.what());
  }
  return out;
}

}  // namespace stbert::trainer
