// Copyright 2026 The stbert Authors
// SPDX-License-Identifier: Apache-2.0

#include "stbert/cli/commands.hpp"

#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "stbert/corpus/alignment_io.hpp"
#include "stbert/corpus/shortage.hpp"
#include "stbert/trainer/pipeline.hpp"

namespace stbert::cli {

namespace fs = std::filesystem;
using trainer::Checkpoint;
using trainer::Dataset;
using trainer::MetricsLog;
using trainer::Task;

namespace {

constexpr const char* kSplits[] = {"pretrain", "finetune", "test"};

acoustic::PosteriorNoise domain_noise(const RunConfig& c) {
  auto n = c.noise;
  n.confusion_mass = c.domain_confusion_mass;
  return n;
}

void check_vocab(const RunConfig& c, const corpus::Vocab& vocab) {
  if (vocab.size() > c.model.vocab) {
    throw DataError("vocabulary has " + std::to_string(vocab.size()) + " tokens, model.vocab is " +
                    std::to_string(c.model.vocab));
  }
}

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string join_lineage(const std::vector<std::string>& lineage) {
  std::string s;
  for (const auto& name : lineage) s += (s.empty() ? "" : ">") + name;
  return s;
}

struct Context {
  RunConfig config;
  std::string command;
  std::ostream& out;

  fs::path run_dir() const { return config.run_dir; }
  fs::path corpus_dir() const { return config.corpus_dir.empty() ? run_dir() / "corpus" : fs::path(config.corpus_dir); }
  fs::path metrics_path() const {
    return config.metrics.empty() ? run_dir() / (command + ".metrics.jsonl") : fs::path(config.metrics);
  }
  fs::path checkpoint_out() const {
    return config.checkpoint_out.empty() ? run_dir() / (command + ".ckpt") : fs::path(config.checkpoint_out);
  }
  /// Input checkpoint, or none when paths.checkpoint_in is "none" (or empty
  /// with an empty default).
  std::unique_ptr<Checkpoint> checkpoint_in(const std::string& default_name) const {
    std::string path = config.checkpoint_in;
    if (path == "none") return nullptr;
    if (path.empty()) {
      if (default_name.empty()) return nullptr;
      path = (run_dir() / default_name).string();
    }
    return std::make_unique<Checkpoint>(trainer::load_checkpoint(path));
  }
  std::unique_ptr<MetricsLog> open_log() const {
    const auto path = metrics_path();
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    auto log = MetricsLog::open(path, config.log_wall_time);
    log->header(config.to_pairs());
    return log;
  }
  void save(const Checkpoint& c) const {
    const auto path = checkpoint_out();
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    trainer::save_checkpoint(c, path);
    out << "checkpoint: " << path.string() << " (" << join_lineage(c.lineage) << ")\n";
  }
};

double final_mean(const std::vector<trainer::StepLoss>& history, std::size_t window) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = history.size() > window ? history.size() - window : 0; i < history.size(); ++i) {
    if (history[i].skipped) continue;
    sum += history[i].value;
    ++n;
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

int cmd_gen(Context& ctx) {
  const auto log = ctx.open_log();
  const auto corpus = corpus::generate_corpus(ctx.config.corpus, ctx.config.corpus_seed);
  check_vocab(ctx.config, corpus.vocab);
  write_corpus(corpus, ctx.corpus_dir());
  log->eval({0, "gen", "pretrain", 0.0, std::nullopt, std::nullopt});
  ctx.out << "corpus: " << ctx.corpus_dir().string() << " pretrain=" << corpus.pretrain.size()
          << " finetune=" << corpus.finetune.size() << " test=" << corpus.test.size()
          << " vocab=" << corpus.vocab.size() << "\n";
  return 0;
}

int cmd_pretrain(Context& ctx) {
  const auto data = load_corpus(ctx.config, ctx.corpus_dir());
  const auto log = ctx.open_log();
  auto base = ctx.checkpoint_in("");
  if (!base && ctx.config.base.total_steps > 0) {
    base = std::make_unique<Checkpoint>(
        trainer::pretrain(data.pretrain, ctx.config.model, ctx.config.base, nullptr, {log.get(), nullptr}));
    const auto path = ctx.run_dir() / "base.ckpt";
    fs::create_directories(ctx.run_dir());
    trainer::save_checkpoint(*base, path);
    ctx.out << "base checkpoint: " << path.string() << "\n";
  }
  std::vector<trainer::StepLoss> history;
  const auto ckpt =
      trainer::pretrain(data.pretrain, ctx.config.model, ctx.config.pretrain, base.get(), {log.get(), &history});
  ctx.out << "pretrain: " << history.size() << " steps, final 100-step mean loss " << fmt(final_mean(history, 100))
          << "\n";
  ctx.save(ckpt);
  return 0;
}

int cmd_dapt(Context& ctx) {
  const auto data = load_corpus(ctx.config, ctx.corpus_dir());
  const auto from = ctx.checkpoint_in("pretrain.ckpt");
  const auto log = ctx.open_log();
  std::vector<trainer::StepLoss> history;
  const auto ckpt = trainer::dapt(*from, data.finetune, ctx.config.dapt, {log.get(), &history});
  ctx.out << "dapt: " << history.size() << " steps, final 100-step mean loss " << fmt(final_mean(history, 100))
          << "\n";
  ctx.save(ckpt);
  return 0;
}

int cmd_finetune(Context& ctx) {
  const auto data = load_corpus(ctx.config, ctx.corpus_dir());
  const auto from = ctx.checkpoint_in("pretrain.ckpt");
  const auto log = ctx.open_log();
  const auto result = trainer::finetune(from.get(), ctx.config.model, data.finetune, ctx.config.finetune, log.get());
  const auto test = trainer::evaluate_detailed(result.params, result.model, data.test);
  log->eval({result.best_step, "finetune", "test", test.accuracy, test.loss, std::nullopt});
  ctx.out << "finetune: best validation accuracy " << fmt(result.best_accuracy) << " at step " << result.best_step
          << "\naccuracy: " << fmt(test.accuracy) << "\n";
  ctx.save(result.to_checkpoint(ctx.config.finetune));
  return 0;
}

int cmd_eval(Context& ctx) {
  const auto data = load_corpus(ctx.config, ctx.corpus_dir());
  const auto from = ctx.checkpoint_in("finetune.ckpt");
  if (!from) throw DataError("eval needs a checkpoint");
  const auto log = ctx.open_log();
  const auto test = trainer::evaluate_detailed(from->params, from->model, data.test);
  log->eval({from->state.step, from->stage(), "test", test.accuracy, test.loss, std::nullopt});
  ctx.out << "accuracy: " << fmt(test.accuracy) << "\n";
  return 0;
}

int cmd_shortage(Context& ctx) {
  const auto data = load_corpus(ctx.config, ctx.corpus_dir());
  const auto from = ctx.checkpoint_in("pretrain.ckpt");
  const auto log = ctx.open_log();
  const double f = ctx.config.shortage_fraction;
  const auto n = ctx.config.shortage_subsets ? ctx.config.shortage_subsets : corpus::default_subset_count(f);
  const auto r =
      trainer::shortage_eval(from.get(), ctx.config.model, data.finetune, data.test, f, n, ctx.config.finetune, log.get());
  for (std::size_t k = 0; k < r.accuracies.size(); ++k) {
    ctx.out << "subset " << k << " (" << r.subsets[k].size() << " items): " << fmt(r.accuracies[k]) << "\n";
  }
  ctx.out << "mean accuracy: " << fmt(r.mean) << " std: " << fmt(r.stddev) << "\n";
  return 0;
}

int cmd_ablate(Context& ctx) {
  const auto data = load_corpus(ctx.config, ctx.corpus_dir());
  const auto log = ctx.open_log();
  const auto rows = run_ablation(ctx.config, data, log.get(), &ctx.out);
  const fs::path path = ctx.config.summary.empty() ? ctx.run_dir() / "ablate.tsv" : fs::path(ctx.config.summary);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream file(path);
  if (!file) throw DataError("cannot write summary " + path.string());
  write_summary(rows, file);
  write_summary(rows, ctx.out);
  return 0;
}

int cmd_gradcheck(Context& ctx) {
  bool ok = true;
  for (const auto& r : gradient_suite(ctx.config.pretrain.seed)) {
    const bool pass = r.max_relative_error < kGradientThreshold;
    ok = ok && pass;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%-22s max_rel_err=%.3e coords=%zu %s\n", r.name.c_str(), r.max_relative_error,
                  r.coordinates, pass ? "PASS" : "FAIL");
    ctx.out << buf;
  }
  return ok ? 0 : 2;
}

}  // namespace

void write_corpus(const corpus::SyntheticCorpus& c, const fs::path& dir) {
  fs::create_directories(dir);
  {
    std::ofstream inv(dir / "inventory.txt");
    if (!inv) throw DataError("cannot write " + (dir / "inventory.txt").string());
    for (const auto& s : c.inventory.symbols()) inv << s << '\n';
  }
  c.vocab.save(dir / "vocab.txt");
  const std::vector<corpus::AlignedUtterance>* splits[] = {&c.pretrain, &c.finetune, &c.test};
  for (int s = 0; s < 3; ++s) corpus::write_alignment(*splits[s], c.inventory, dir / (std::string(kSplits[s]) + ".align"));
}

CorpusBundle load_corpus(const RunConfig& config, const fs::path& dir) {
  CorpusBundle b;
  std::ifstream inv(dir / "inventory.txt");
  if (!inv) throw DataError("cannot read " + (dir / "inventory.txt").string() + " (run gen first)");
  std::vector<std::string> symbols;
  for (std::string line; std::getline(inv, line);) {
    if (!line.empty()) symbols.push_back(line);
  }
  b.inventory = corpus::PhonemeInventory(std::move(symbols));
  if (b.inventory.size() != config.model.phonemes) {
    throw DataError("corpus has " + std::to_string(b.inventory.size()) + " phonemes, config expects " +
                    std::to_string(config.model.phonemes));
  }
  b.vocab = corpus::Vocab::load(dir / "vocab.txt");
  check_vocab(config, b.vocab);
  Dataset* sets[] = {&b.pretrain, &b.finetune, &b.test};
  for (int s = 0; s < 3; ++s) {
    auto utts = corpus::read_alignment(dir / (std::string(kSplits[s]) + ".align"), b.inventory, &b.vocab);
    *sets[s] = trainer::make_dataset(std::move(utts), b.inventory.size(), s == 0 ? config.noise : domain_noise(config),
                                     config.acoustic_seed);
  }
  return b;
}

CorpusBundle make_bundle(const corpus::SyntheticCorpus& c, const RunConfig& config) {
  check_vocab(config, c.vocab);
  CorpusBundle b;
  b.inventory = c.inventory;
  b.vocab = c.vocab;
  const auto p = c.inventory.size();
  b.pretrain = trainer::make_dataset(c.pretrain, p, config.noise, config.acoustic_seed);
  b.finetune = trainer::make_dataset(c.finetune, p, domain_noise(config), config.acoustic_seed);
  b.test = trainer::make_dataset(c.test, p, domain_noise(config), config.acoustic_seed);
  return b;
}

std::vector<AblationRow> run_ablation(const RunConfig& config, const CorpusBundle& data, MetricsLog* log,
                                      std::ostream* progress) {
  struct Regime {
    std::string name;
    std::vector<Task> tasks;
    bool dapt;
  };
  const std::vector<Regime> regimes = {
      {"full", {Task::kCmMlm, Task::kClmS2T, Task::kClmT2S}, false},
      {"-CM-CLM", {Task::kCmMlm}, false},
      {"-text-data", {Task::kSpeechMlm}, false},
      {"+DAPT", {Task::kCmMlm, Task::kClmS2T, Task::kClmT2S}, true},
  };
  std::vector<AblationRow> rows;
  std::vector<std::vector<std::vector<double>>> pooled(regimes.size(),
                                                       std::vector<std::vector<double>>(std::size(kAblationFractions)));
  std::vector<std::string> stages(regimes.size());
  for (std::size_t s = 0; s < config.ablate_seeds; ++s) {
    std::unique_ptr<Checkpoint> base;
    if (config.base.total_steps > 0) {
      auto bc = config.base;
      bc.seed += s;
      base = std::make_unique<Checkpoint>(trainer::pretrain(data.pretrain, config.model, bc, nullptr, {log, nullptr}));
    }
    std::unique_ptr<Checkpoint> full;
    for (std::size_t r = 0; r < regimes.size(); ++r) {
      auto pc = config.pretrain;
      pc.seed += s;
      pc.tasks = regimes[r].tasks;
      Checkpoint ckpt;
      if (regimes[r].dapt && full) {
        auto dc = config.dapt;
        dc.seed += s;
        ckpt = trainer::dapt(*full, data.finetune, dc, {log, nullptr});
      } else {
        ckpt = trainer::pretrain(data.pretrain, config.model, pc, base.get(), {log, nullptr});
        if (r == 0) full = std::make_unique<Checkpoint>(ckpt);
      }
      stages[r] = join_lineage(ckpt.lineage);
      for (std::size_t fi = 0; fi < std::size(kAblationFractions); ++fi) {
        const double f = kAblationFractions[fi];
        const auto n = config.shortage_subsets ? config.shortage_subsets : corpus::default_subset_count(f);
        auto fc = config.finetune;
        fc.seed += s * 1000;
        const auto res = trainer::shortage_eval(&ckpt, config.model, data.finetune, data.test, f, n, fc, log);
        auto& acc = pooled[r][fi];
        acc.insert(acc.end(), res.accuracies.begin(), res.accuracies.end());
        if (progress) {
          *progress << "seed " << s << " " << regimes[r].name << " fraction " << f << ": " << fmt(res.mean) << "\n";
        }
      }
    }
  }
  for (std::size_t r = 0; r < regimes.size(); ++r) {
    for (std::size_t fi = 0; fi < std::size(kAblationFractions); ++fi) {
      const auto& acc = pooled[r][fi];
      double mean = 0.0;
      for (double a : acc) mean += a;
      mean /= static_cast<double>(acc.size());
      double ss = 0.0;
      for (double a : acc) ss += (a - mean) * (a - mean);
      const double sd = acc.size() > 1 ? std::sqrt(ss / static_cast<double>(acc.size() - 1)) : 0.0;
      rows.push_back({stages[r], regimes[r].name, kAblationFractions[fi], mean, sd});
    }
  }
  return rows;
}

void write_summary(const std::vector<AblationRow>& rows, std::ostream& out) {
  out << "stage\tregime\tlabel_fraction\tmean_accuracy\tstd\n";
  for (const auto& r : rows) {
    out << r.stage << '\t' << r.regime << '\t' << format_double(r.fraction) << '\t' << fmt(r.mean) << '\t'
        << fmt(r.stddev) << '\n';
  }
}

int run_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cross-modal speech/text pre-training on synthetic data", "stbert"};
  app.require_subcommand(1);
  std::string config_file;
  std::vector<std::string> overrides;
  struct Command {
    const char* name;
    const char* help;
    int (*run)(Context&);
  };
  const Command commands[] = {
      {"gen", "Generate the synthetic corpus", cmd_gen},
      {"pretrain", "Cross-modal pre-training (optionally after a text-only base stage)", cmd_pretrain},
      {"dapt", "Domain-adaptive pre-training on the fine-tuning transcripts", cmd_dapt},
      {"finetune", "Intent fine-tuning and test evaluation", cmd_finetune},
      {"eval", "Evaluate a fine-tuned checkpoint on the test set", cmd_eval},
      {"shortage", "Label-shortage protocol at shortage.fraction", cmd_shortage},
      {"ablate", "Four-regime ablation grid, written as TSV", cmd_ablate},
      {"gradcheck", "Finite-difference gradient checks", cmd_gradcheck},
  };
  std::vector<CLI::App*> subs;
  for (const auto& c : commands) {
    auto* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("-c,--config", config_file, "key = value configuration file");
    sub->add_option("-s,--set", overrides, "Override a key (key=value); repeatable");
    subs.push_back(sub);
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    if (args.empty()) {
      err << app.help();
      return 1;
    }
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return 1;
  }

  for (std::size_t i = 0; i < subs.size(); ++i) {
    if (!subs[i]->parsed()) continue;
    try {
      Context ctx{RunConfig{}, commands[i].name, out};
      if (!config_file.empty()) apply_config_file(ctx.config, config_file);
      for (const auto& o : overrides) apply_override(ctx.config, o);
      ctx.config.finalize();
      return commands[i].run(ctx);
    } catch (const DataError& e) {
      err << "error: " << e.what() << "\n";
      return 2;
    } catch (const fs::filesystem_error& e) {
      err << "error: " << e.what() << "\n";
      return 2;
    }
  }
  err << app.help();
  return 1;
}

}  // namespace stbert::cli
