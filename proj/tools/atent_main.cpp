// Copyright 2026 The ATENT Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// atent: train, attack and evaluate models, run smoothed evaluation and
// the numerical self-checks.
//
// Exit codes: 0 success, 1 usage or config error, 2 runtime failure,
// 3 verification failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "atent/checkpoint.hpp"
#include "atent/config.hpp"
#include "atent/experiment.hpp"
#include "atent/io.hpp"
#include "atent/report.hpp"
#include "atent/smoothing.hpp"
#include "atent/verify.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitVerify = 3;

// Config problems are usage errors; everything after loading is runtime.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

atent::ExperimentConfig load_config(const std::string& path) {
  try {
    return atent::parse_config(path);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
}

std::optional<fs::path> opt_path(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return fs::path(s);
}

fs::path run_dir(const atent::ExperimentConfig& cfg, const std::string& out) {
  return out.empty() ? fs::path(cfg.output_dir) : fs::path(out);
}

void write_or_print(const std::string& text, const std::string& out) {
  if (out.empty()) {
    std::cout << text;
  } else {
    atent::atomic_write(out, text);
  }
}

struct Common {
  std::string config;
  std::string data_dir;
  std::string output_dir;
  std::string checkpoint;
  std::string out;
};

int cmd_train(const Common& c, bool no_resume, std::size_t budget,
              bool quiet) {
  const atent::ExperimentConfig cfg = load_config(c.config);
  atent::RunOptions opts;
  opts.data_dir = opt_path(c.data_dir);
  opts.output_dir = opt_path(c.output_dir);
  opts.resume = !no_resume;
  opts.epoch_budget = budget;
  if (!quiet) {
    opts.on_epoch = [](const atent::EpochMetrics& m) {
      std::fprintf(stderr,
                   "epoch %zu  loss %.4f  nat %.4f  rob %.4f  lr %g  %.0f ms\n",
                   m.epoch, m.train_loss, m.nat_acc, m.rob_acc, m.lr,
                   m.wall_ms);
    };
  }
  const atent::RunResult r = atent::run_experiment(cfg, opts);
  if (!r.completed) {
    std::cout << "paused after epoch " << r.state.epoch << "; state in "
              << r.output_dir.string() << "\n";
    return kExitOk;
  }
  std::cout << atent::report_markdown(r.report);
  return kExitOk;
}

fs::path checkpoint_path(const atent::ExperimentConfig& cfg, const Common& c) {
  if (!c.checkpoint.empty()) return c.checkpoint;
  return run_dir(cfg, c.output_dir) / "checkpoint.atnt";
}

int cmd_attack(const Common& c) {
  const atent::ExperimentConfig cfg = load_config(c.config);
  if (cfg.attacks.empty()) throw UsageError("config has no attacks");
  const atent::ModelParams params =
      atent::load_checkpoint(checkpoint_path(cfg, c));
  const auto data = atent::load_experiment_data(cfg, opt_path(c.data_dir));
  write_or_print(atent::report_csv(atent::evaluate_attacks(cfg, params,
                                                           data.test)),
                 c.out);
  return kExitOk;
}

int cmd_evaluate(const Common& c) {
  const atent::ExperimentConfig cfg = load_config(c.config);
  const atent::ModelParams params =
      atent::load_checkpoint(checkpoint_path(cfg, c));
  const auto data = atent::load_experiment_data(cfg, opt_path(c.data_dir));
  const atent::EvalReport report =
      atent::evaluate_attacks(cfg, params, data.test);
  atent::emit_report(report, run_dir(cfg, c.output_dir), &params, &data.test);
  std::cout << "natural accuracy "
            << atent::format_double(
                   atent::accuracy(params, data.test.inputs, data.test.labels))
            << "\n"
            << atent::report_markdown(report);
  return kExitOk;
}

int cmd_smooth_eval(const Common& c, std::optional<double> sigma,
                    std::optional<std::size_t> n,
                    std::optional<double> margin, bool skip_abstain) {
  const atent::ExperimentConfig cfg = load_config(c.config);
  atent::SmoothingConfig sc = cfg.smoothing.value_or(atent::SmoothingConfig{});
  if (sigma) sc.sigma = *sigma;
  if (n) sc.n_samples = *n;
  if (margin) sc.abstain_margin = *margin;
  try {
    atent::validate(sc);
  } catch (const atent::ConfigError& e) {
    throw UsageError(e.what());
  }
  const atent::ModelParams params =
      atent::load_checkpoint(checkpoint_path(cfg, c));
  const auto data = atent::load_experiment_data(cfg, opt_path(c.data_dir));
  const double acc = atent::smooth_accuracy(params, data.test.inputs,
                                            data.test.labels, sc,
                                            !skip_abstain);
  nlohmann::json j = {{"sigma", sc.sigma},
                      {"n_samples", sc.n_samples},
                      {"abstain_margin", sc.abstain_margin},
                      {"seed", sc.seed},
                      {"samples", data.test.size()},
                      {"smoothed_acc", acc}};
  write_or_print(j.dump(2) + "\n", c.out);
  return kExitOk;
}

int cmd_verify(const std::string& suite_name, std::uint64_t seed,
               bool as_json) {
  const auto suite = atent::parse_suite(suite_name);
  if (!suite) throw UsageError("unknown suite '" + suite_name + "'");
  const auto results = atent::run_verify(*suite, seed);
  bool ok = true;
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : results) {
    ok = ok && r.passed;
    if (as_json) {
      j.push_back({{"suite", r.suite},
                   {"name", r.name},
                   {"passed", r.passed},
                   {"detail", r.detail},
                   {"seconds", r.seconds}});
    } else {
      std::printf("%s  %s/%s  %s  (%.2fs)\n", r.passed ? "PASS" : "FAIL",
                  r.suite.c_str(), r.name.c_str(), r.detail.c_str(),
                  r.seconds);
    }
  }
  if (as_json) {
    std::cout << nlohmann::json{{"passed", ok}, {"checks", j}}.dump(2) << "\n";
  } else {
    std::printf("%s: %zu checks\n", ok ? "all passed" : "FAILED",
                results.size());
  }
  return ok ? kExitOk : kExitVerify;
}

int cmd_report(const std::vector<std::string>& files, const std::string& fmt,
               const std::string& out) {
  if (fmt != "markdown" && fmt != "csv") {
    throw UsageError("--format must be markdown or csv");
  }
  atent::EvalReport merged;
  for (const std::string& f : files) {
    const auto part = atent::parse_report_csv(atent::read_file(f));
    merged.rows.insert(merged.rows.end(), part.rows.begin(), part.rows.end());
  }
  write_or_print(fmt == "csv" ? atent::report_csv(merged)
                              : atent::report_markdown(merged),
                 out);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adversarial training via entropic regularization"};
  app.require_subcommand(1);
  Common c;

  auto add_common = [&](CLI::App* sub, bool config_required = true) {
    sub->add_option("config", c.config, "Experiment config (JSON)")
        ->required(config_required)
        ->check(CLI::ExistingFile);
    sub->add_option("--data-dir", c.data_dir,
                    "MNIST IDX directory (overrides config and "
                    "ATENT_DATA_DIR)");
    sub->add_option("--output-dir", c.output_dir,
                    "Run directory (overrides config)");
  };

  auto* train = app.add_subcommand("train", "Train and evaluate a model");
  add_common(train);
  bool no_resume = false, quiet = false;
  std::size_t budget = 0;
  train->add_flag("--no-resume", no_resume,
                  "Ignore a trainer state in the run directory");
  train->add_option("--epoch-budget", budget,
                    "Stop after this many epochs (resume later)");
  train->add_flag("-q,--quiet", quiet, "No per-epoch progress on stderr");

  auto* attack = app.add_subcommand("attack", "Attack a saved checkpoint");
  add_common(attack);
  attack->add_option("--checkpoint", c.checkpoint, "Checkpoint (.atnt)")
      ->required()
      ->check(CLI::ExistingFile);
  attack->add_option("--out", c.out, "CSV output file (default stdout)");

  auto* evaluate = app.add_subcommand(
      "evaluate", "Evaluate a run's checkpoint and rewrite its report");
  add_common(evaluate);
  evaluate->add_option("--checkpoint", c.checkpoint,
                       "Checkpoint (default <run dir>/checkpoint.atnt)");

  auto* smooth = app.add_subcommand("smooth-eval",
                                    "Randomized-smoothing accuracy");
  add_common(smooth);
  smooth->add_option("--checkpoint", c.checkpoint,
                     "Checkpoint (default <run dir>/checkpoint.atnt)");
  std::optional<double> sigma, margin;
  std::optional<std::size_t> n_samples;
  bool skip_abstain = false;
  smooth->add_option("--sigma", sigma, "Noise std");
  smooth->add_option("--n-samples", n_samples, "Votes per input");
  smooth->add_option("--abstain-margin", margin, "Abstain margin");
  smooth->add_flag("--skip-abstain", skip_abstain,
                   "Drop abstentions from the denominator");
  smooth->add_option("--out", c.out, "JSON output file (default stdout)");

  auto* verify = app.add_subcommand("verify", "Run numerical self-checks");
  std::string suite = "all";
  std::uint64_t seed = 0;
  bool as_json = false;
  verify->add_option("--suite", suite, "sampler|lemma1|gradients|all")
      ->check(CLI::IsMember({"sampler", "lemma1", "gradients", "all"}));
  verify->add_option("--seed", seed, "Seed for random probes");
  verify->add_flag("--json", as_json, "Structured output");

  auto* report = app.add_subcommand("report", "Merge and render report CSVs");
  std::vector<std::string> files;
  std::string fmt = "markdown";
  report->add_option("files", files, "report.csv files")
      ->required()
      ->check(CLI::ExistingFile);
  report->add_option("--format", fmt, "markdown|csv");
  report->add_option("--out", c.out, "Output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*train) return cmd_train(c, no_resume, budget, quiet);
    if (*attack) return cmd_attack(c);
    if (*evaluate) return cmd_evaluate(c);
    if (*smooth) {
      return cmd_smooth_eval(c, sigma, n_samples, margin, skip_abstain);
    }
    if (*verify) return cmd_verify(suite, seed, as_json);
    if (*report) return cmd_report(files, fmt, c.out);
  } catch (const UsageError& e) {
    std::cerr << "atent: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "atent: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
