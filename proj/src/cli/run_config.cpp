// Copyright 2026 The stbert Authors
// SPDX-License-Identifier: Apache-2.0

#include "stbert/cli/run_config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace stbert::cli {

namespace {

using trainer::TrainConfig;

struct Field {
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, std::string_view)> set;
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename N>
N parse_number(std::string_view key, std::string_view v) {
  N out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError("invalid value '" + std::string(v) + "' for " + std::string(key));
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("invalid boolean '" + std::string(v) + "' for " + std::string(key));
}

template <typename M>
Field size_field(std::string key, M member) {
  return {key, [member](const RunConfig& c) { return std::to_string(member(const_cast<RunConfig&>(c))); },
          [member, key](RunConfig& c, std::string_view v) { member(c) = parse_number<std::size_t>(key, v); }};
}

template <typename M>
Field u64_field(std::string key, M member) {
  return {key, [member](const RunConfig& c) { return std::to_string(member(const_cast<RunConfig&>(c))); },
          [member, key](RunConfig& c, std::string_view v) { member(c) = parse_number<std::uint64_t>(key, v); }};
}

template <typename M>
Field double_field(std::string key, M member) {
  return {key, [member](const RunConfig& c) { return format_double(member(const_cast<RunConfig&>(c))); },
          [member, key](RunConfig& c, std::string_view v) { member(c) = parse_number<double>(key, v); }};
}

template <typename M>
Field int_field(std::string key, M member) {
  return {key, [member](const RunConfig& c) { return std::to_string(member(const_cast<RunConfig&>(c))); },
          [member, key](RunConfig& c, std::string_view v) { member(c) = parse_number<int>(key, v); }};
}

template <typename M>
Field bool_field(std::string key, M member) {
  return {key, [member](const RunConfig& c) { return std::string(member(const_cast<RunConfig&>(c)) ? "true" : "false"); },
          [member, key](RunConfig& c, std::string_view v) { member(c) = parse_bool(key, v); }};
}

template <typename M>
Field string_field(std::string key, M member) {
  return {key, [member](const RunConfig& c) { return member(const_cast<RunConfig&>(c)); },
          [member](RunConfig& c, std::string_view v) { member(c) = std::string(v); }};
}

void add_train_fields(std::vector<Field>& f, const std::string& prefix, TrainConfig RunConfig::*stage) {
  const auto sel = [stage](auto field) {
    return [stage, field](RunConfig& c) -> auto& { return (c.*stage).*field; };
  };
  f.push_back(size_field(prefix + ".total_steps", sel(&TrainConfig::total_steps)));
  f.push_back(size_field(prefix + ".batch_size", sel(&TrainConfig::batch_size)));
  f.push_back(double_field(prefix + ".peak_lr", sel(&TrainConfig::peak_lr)));
  f.push_back(double_field(prefix + ".warmup_fraction", sel(&TrainConfig::warmup_fraction)));
  f.push_back(double_field(prefix + ".curriculum_fraction", sel(&TrainConfig::curriculum_fraction)));
  f.push_back(double_field(prefix + ".mask_rate", sel(&TrainConfig::mask_rate)));
  f.push_back({prefix + ".tasks", [stage](const RunConfig& c) { return trainer::tasks_to_string((c.*stage).tasks); },
               [stage](RunConfig& c, std::string_view v) {
                 try {
                   (c.*stage).tasks = trainer::tasks_from_string(std::string(v));
                 } catch (const DataError& e) {
                   throw ConfigError(e.what());
                 }
               }});
  f.push_back(u64_field(prefix + ".seed", sel(&TrainConfig::seed)));
  f.push_back(size_field(prefix + ".eval_every", sel(&TrainConfig::eval_every)));
  f.push_back(double_field(prefix + ".beta1", sel(&TrainConfig::beta1)));
  f.push_back(double_field(prefix + ".beta2", sel(&TrainConfig::beta2)));
  f.push_back(double_field(prefix + ".adam_eps", sel(&TrainConfig::adam_eps)));
  f.push_back(double_field(prefix + ".max_grad_norm", sel(&TrainConfig::max_grad_norm)));
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    const auto corpus = [](auto field) { return [field](RunConfig& c) -> auto& { return c.corpus.*field; }; };
    using S = corpus::SyntheticSpec;
    f.push_back(size_field("corpus.phonemes", corpus(&S::phonemes)));
    f.push_back(size_field("corpus.words", corpus(&S::words)));
    f.push_back(size_field("corpus.min_words", corpus(&S::min_words)));
    f.push_back(size_field("corpus.max_words", corpus(&S::max_words)));
    f.push_back(size_field("corpus.min_word_phonemes", corpus(&S::min_word_phonemes)));
    f.push_back(size_field("corpus.max_word_phonemes", corpus(&S::max_word_phonemes)));
    f.push_back(size_field("corpus.min_frames", corpus(&S::min_frames)));
    f.push_back(size_field("corpus.max_frames", corpus(&S::max_frames)));
    f.push_back(double_field("corpus.duration_jitter", corpus(&S::duration_jitter)));
    f.push_back(size_field("corpus.actions", corpus(&S::actions)));
    f.push_back(size_field("corpus.objects", corpus(&S::objects)));
    f.push_back(double_field("corpus.extra_vocab_fraction", corpus(&S::extra_vocab_fraction)));
    f.push_back(size_field("corpus.pretrain_size", corpus(&S::pretrain_size)));
    f.push_back(size_field("corpus.finetune_size", corpus(&S::finetune_size)));
    f.push_back(size_field("corpus.test_size", corpus(&S::test_size)));
    f.push_back(size_field("corpus.vocab_size", corpus(&S::vocab_size)));
    f.push_back(size_field("corpus.max_sequence", corpus(&S::max_sequence)));
    f.push_back(bool_field("corpus.domain_shift", corpus(&S::domain_shift)));
    f.push_back(u64_field("corpus.seed", [](RunConfig& c) -> auto& { return c.corpus_seed; }));

    f.push_back(double_field("acoustic.confusion_mass", [](RunConfig& c) -> auto& { return c.noise.confusion_mass; }));
    f.push_back(double_field("acoustic.temperature", [](RunConfig& c) -> auto& { return c.noise.temperature; }));
    f.push_back(int_field("acoustic.neighbor_width", [](RunConfig& c) -> auto& { return c.noise.neighbor_width; }));
    f.push_back(
        double_field("acoustic.domain_confusion_mass", [](RunConfig& c) -> auto& { return c.domain_confusion_mass; }));
    f.push_back(u64_field("acoustic.seed", [](RunConfig& c) -> auto& { return c.acoustic_seed; }));

    const auto model = [](auto field) { return [field](RunConfig& c) -> auto& { return c.model.*field; }; };
    using M = model::ModelConfig;
    f.push_back(size_field("model.hidden", model(&M::hidden)));
    f.push_back(size_field("model.layers", model(&M::layers)));
    f.push_back(size_field("model.heads", model(&M::heads)));
    f.push_back(size_field("model.ff_dim", model(&M::ff_dim)));
    f.push_back(size_field("model.max_positions", model(&M::max_positions)));
    f.push_back(double_field("model.init_std", model(&M::init_std)));
    f.push_back(double_field("model.dropout", model(&M::dropout)));
    f.push_back(double_field("model.layer_norm_eps", model(&M::layer_norm_eps)));

    add_train_fields(f, "base", &RunConfig::base);
    add_train_fields(f, "pretrain", &RunConfig::pretrain);
    add_train_fields(f, "dapt", &RunConfig::dapt);
    add_train_fields(f, "finetune", &RunConfig::finetune);

    f.push_back(double_field("shortage.fraction", [](RunConfig& c) -> auto& { return c.shortage_fraction; }));
    f.push_back(size_field("shortage.subsets", [](RunConfig& c) -> auto& { return c.shortage_subsets; }));
    f.push_back(size_field("ablate.seeds", [](RunConfig& c) -> auto& { return c.ablate_seeds; }));

    f.push_back(string_field("paths.run_dir", [](RunConfig& c) -> auto& { return c.run_dir; }));
    f.push_back(string_field("paths.corpus_dir", [](RunConfig& c) -> auto& { return c.corpus_dir; }));
    f.push_back(string_field("paths.checkpoint_in", [](RunConfig& c) -> auto& { return c.checkpoint_in; }));
    f.push_back(string_field("paths.checkpoint_out", [](RunConfig& c) -> auto& { return c.checkpoint_out; }));
    f.push_back(string_field("paths.metrics", [](RunConfig& c) -> auto& { return c.metrics; }));
    f.push_back(string_field("paths.summary", [](RunConfig& c) -> auto& { return c.summary; }));
    f.push_back(bool_field("run.log_wall_time", [](RunConfig& c) -> auto& { return c.log_wall_time; }));
    return f;
  }();
  return table;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

RunConfig::RunConfig() {
  base.tasks = {trainer::Task::kTextMlm};
  base.total_steps = 0;
  dapt.total_steps = 500;
  finetune = TrainConfig::finetune_defaults();
}

std::vector<std::pair<std::string, std::string>> RunConfig::to_pairs() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& f : fields()) out.emplace_back(f.key, f.get(*this));
  return out;
}

void RunConfig::set(std::string_view key, std::string_view value) {
  for (const auto& f : fields()) {
    if (f.key == key) {
      f.set(*this, trim(value));
      return;
    }
  }
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

void RunConfig::finalize() {
  try {
    corpus.validate();
    noise.validate();
    acoustic::PosteriorNoise domain = noise;
    domain.confusion_mass = domain_confusion_mass;
    domain.validate();
    model.phonemes = corpus.phonemes;
    model.vocab = corpus.vocab_size;
    model.intents = corpus.intent_count();
    model.validate();
    for (const auto* t : {&pretrain, &dapt, &finetune}) t->validate();
    if (base.total_steps > 0) base.validate();
    if (!(shortage_fraction > 0.0 && shortage_fraction <= 1.0)) {
      throw DataError("shortage.fraction must be in (0, 1]");
    }
    if (ablate_seeds == 0) throw DataError("ablate.seeds must be positive");
  } catch (const ConfigError&) {
    throw;
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
}

bool operator==(const RunConfig& a, const RunConfig& b) { return a.to_pairs() == b.to_pairs(); }

void apply_config_text(RunConfig& config, std::string_view text, std::string_view origin) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(std::string(origin) + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    try {
      config.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(std::string(origin) + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

void apply_config_file(RunConfig& config, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  apply_config_text(config, buf.str(), path.string());
}

void apply_override(RunConfig& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError("override '" + std::string(assignment) + "' is not key=value");
  }
  config.set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

}  // namespace stbert::cli
