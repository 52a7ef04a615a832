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

// Acceptance run: one PASS/FAIL line per criterion.
//
//   atent_acceptance [--strict] [--work-dir DIR]
//
// Exits 0 once every criterion has been evaluated; with --strict any FAIL
// gives exit status 1.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "atent/attacks.hpp"
#include "atent/checkpoint.hpp"
#include "atent/config.hpp"
#include "atent/defenses.hpp"
#include "atent/experiment.hpp"
#include "atent/io.hpp"
#include "atent/report.hpp"
#include "atent/smoothing.hpp"
#include "atent/verify.hpp"

namespace fs = std::filesystem;
using namespace atent;

namespace {

const fs::path kSource = ATENT_SOURCE_DIR;
fs::path g_work;
int g_failed = 0;

void report(int id, const std::string& title, bool pass,
            const std::string& detail) {
  std::printf("criterion %d %s: %s (%s)\n", id, title.c_str(),
              pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failed;
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double wall_seconds(const std::function<void()>& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  fn();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

double cpu_seconds() {
  return static_cast<double>(std::clock()) / CLOCKS_PER_SEC;
}

bool suite_ok(const std::vector<CheckResult>& checks, std::string& detail) {
  bool ok = !checks.empty();
  for (const CheckResult& c : checks) {
    if (!c.passed) {
      ok = false;
      detail += c.name + " failed: " + c.detail + "; ";
    }
  }
  return ok;
}

void verify_suite(int id, const std::string& title,
                  std::vector<CheckResult> (*fn)(std::uint64_t),
                  double limit_s) {
  std::vector<CheckResult> checks;
  const double s = wall_seconds([&] { checks = fn(0); });
  std::string detail;
  const bool ok = suite_ok(checks, detail);
  detail += std::to_string(checks.size()) + " checks, " + fmt("%.1f s", s) +
            fmt(" (limit %.0f s)", limit_s);
  report(id, title, ok && s < limit_s, detail);
}

ExperimentData mnist_subset(std::size_t n) {
  ExperimentConfig cfg;
  cfg.dataset.test_samples = 10;
  ExperimentData d = load_experiment_data(cfg, kSource / "data" / "mnist58");
  std::vector<std::size_t> idx(std::min(n, d.train.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  d.train = take(d.train, idx);
  return d;
}

double distance(const ModelParams& a, const ModelParams& b) {
  double s = 0.0;
  const auto fa = flatten_weights(a), fb = flatten_weights(b);
  for (std::size_t i = 0; i < fa.size(); ++i) s += (fa[i] - fb[i]) * (fa[i] - fb[i]);
  return std::sqrt(s);
}

bool bitwise(const ModelParams& a, const ModelParams& b) {
  return encode_atnt(a.weights) == encode_atnt(b.weights);
}

void criterion3() {
  const ExperimentData d = mnist_subset(500);
  const ModelParams p0 = build_mlp({784, 64, 64, 2}, 1);
  const Batch b{slice_rows(d.train.inputs, 0, 64),
                slice_rows(d.train.labels, 0, 64)};

  // (a) noiseless single-step l2 chain against one regularized ascent step.
  GibbsSamplerConfig s;
  s.norm = NormKind::kL2;
  s.gamma = 3.0;
  s.step = 0.05;
  s.steps = 1;
  s.ema = 1.0;
  s.noise_scale = 0.0;
  s.init_radius = 0.0;
  Rng rng(7);
  const ChainResult chain = run_chain(p0, b, s, rng);
  AttackConfig ascent;
  ascent.norm = NormKind::kL2;
  ascent.radius = std::numeric_limits<double>::infinity();
  ascent.steps = 1;
  ascent.step_size = s.step;
  ascent.step_rule = StepRule::kRegularized;
  ascent.reg_gamma = s.gamma;
  ascent.random_start = false;
  ascent.clip_range.reset();
  const bool inner = chain.final_x == pgd_attack(p0, b, ascent);

  TrainerConfig at;
  at.defense = DefenseKind::kAtentL2;
  at.sampler = s;
  TrainerConfig pg = at;
  pg.defense = DefenseKind::kPgdAt;
  pg.pgd = ascent;
  const bool outer = defense_batch_step(at, p0, b, 0, 0).grad ==
                     defense_batch_step(pg, p0, b, 0, 0).grad;

  // (b) PGD-AT with a zero radius against SGD, one epoch.
  TrainerConfig sgd;
  sgd.defense = DefenseKind::kSgd;
  sgd.lr = 0.1;
  sgd.epochs = 1;
  sgd.batch_size = 50;
  sgd.seed = 3;
  sgd.record_timing = false;
  sgd.early_stop.eval_samples = 20;
  TrainerConfig zero = sgd;
  zero.defense = DefenseKind::kPgdAt;
  zero.pgd.radius = 0.0;
  zero.early_stop.eval_attack = sgd.pgd;
  TrainerState s_sgd = initial_state(p0), s_zero = initial_state(p0);
  train(sgd, s_sgd, d.train, d.test);
  train(zero, s_zero, d.train, d.test);
  const bool pgd_zero = bitwise(s_sgd.params, s_zero.params);

  // (c) gamma -> 1e6 ATENT against SGD after one epoch.
  TrainerConfig big = sgd;
  big.defense = DefenseKind::kAtentL2;
  big.sampler.gamma = 1e6;
  big.sampler.step = 1e-6;
  big.sampler.steps = 10;
  big.sampler.ema = 0.9;
  big.sampler.noise_scale = 0.001;
  TrainerState s_big = initial_state(p0);
  train(big, s_big, d.train, d.test);
  const double dw = distance(s_big.params, s_sgd.params);
  const double moved = distance(s_sgd.params, p0);

  const bool ok = inner && outer && pgd_zero && dw <= 1e-3;
  report(3, "equivalence suite", ok,
         std::string("inner step bitwise ") + (inner ? "yes" : "no") +
             ", outer gradient bitwise " + (outer ? "yes" : "no") +
             ", pgd-at eps=0 vs sgd bitwise " + (pgd_zero ? "yes" : "no") +
             fmt(", gamma=1e6 |dw| %.2e", dw) + fmt(" (sgd moved %.2f)", moved));
}

struct DeskRun {
  RunResult result;
  ReportRow pgd03;
};

std::map<std::string, DeskRun> g_desk;

const ReportRow* find_row(const EvalReport& r, AttackKind kind, double eps) {
  for (const ReportRow& row : r.rows) {
    if (row.attack == to_string(kind) && row.norm == "linf" &&
        std::abs(row.epsilon - eps) < 1e-12) {
      return &row;
    }
  }
  return nullptr;
}

void criterion5and6() {
  const std::vector<std::string> names = {"sgd", "entropy_sgd", "pgd_at",
                                          "atent_l2", "atent_linf"};
  const double cpu0 = cpu_seconds();
  const double wall = wall_seconds([&] {
    for (const std::string& n : names) {
      const ExperimentConfig cfg =
          parse_config(kSource / "configs" / ("mnist58_" + n + ".json"));
      RunOptions o;
      o.data_dir = kSource / "data" / "mnist58";
      o.output_dir = g_work / ("mnist58_" + n);
      o.resume = false;
      DeskRun run;
      const double t = wall_seconds([&] { run.result = run_experiment(cfg, o); });
      const ReportRow* row = find_row(run.result.report, AttackKind::kPgd, 0.3);
      if (row == nullptr) throw Error(n + ": config lacks a pgd eps=0.3 attack");
      run.pgd03 = *row;
      std::printf("  %-11s natural %.4f  pgd-20 eps=0.3 robust %.4f  (%.0f s)\n",
                  n.c_str(), row->natural_acc, row->robust_acc, t);
      std::fflush(stdout);
      g_desk[n] = run;
    }
  });
  const double cpu = cpu_seconds() - cpu0;

  bool nat_ok = true;
  double nat_min = 1.0;
  for (const auto& [n, r] : g_desk) {
    nat_min = std::min(nat_min, r.pgd03.natural_acc);
    nat_ok = nat_ok && r.pgd03.natural_acc >= 0.95;
  }
  const double sgd = g_desk["sgd"].pgd03.robust_acc;
  const double atent = g_desk["atent_linf"].pgd03.robust_acc;
  const double pgd_at = g_desk["pgd_at"].pgd03.robust_acc;
  const double esgd = g_desk["entropy_sgd"].pgd03.robust_acc;
  const bool gap_ok = atent - sgd >= 0.40;
  const bool close_ok = std::abs(atent - pgd_at) <= 0.10;
  const bool budget_ok = cpu <= 30 * 60;
  report(5, "desk-scale robustness ordering",
         nat_ok && gap_ok && close_ok && budget_ok,
         fmt("min natural %.4f (>= 0.95)", nat_min) +
             fmt(", atent_linf - sgd robust %+.4f (>= 0.40)", atent - sgd) +
             fmt(", |atent_linf - pgd_at| %.4f (<= 0.10)", std::abs(atent - pgd_at)) +
             fmt(", cpu %.0f s", cpu) + fmt(" wall %.0f s (<= 1800 s)", wall));
  report(6, "entropy-sgd non-robustness", std::abs(esgd - sgd) <= 0.10,
         fmt("|entropy_sgd - sgd| robust %.4f (<= 0.10)", std::abs(esgd - sgd)));
}

void criterion7() {
  const ModelParams& p = g_desk.at("sgd").result.state.best_params;
  ExperimentConfig cfg = parse_config(kSource / "configs" / "mnist58_sgd.json");
  cfg.dataset.test_samples = 500;
  const ExperimentData d = load_experiment_data(cfg, kSource / "data" / "mnist58");
  const Batch b = d.test.as_batch();

  // Ball containment for every attack family at the desk-scale budget.
  double worst = 0.0;
  auto contain = [&](const AttackConfig& a) {
    const Tensor adv = run_attack(p, b, a);
    worst = std::max(worst, max_perturbation(adv, b.inputs, a.norm) - a.radius);
  };
  AttackConfig pgd;
  pgd.radius = 0.3;
  pgd.steps = 20;
  pgd.step_size = 0.025;
  pgd.seed = 11;
  AttackConfig fgsm_cfg = pgd;
  fgsm_cfg.kind = AttackKind::kFgsm;
  AttackConfig l2 = pgd;
  l2.norm = NormKind::kL2;
  l2.radius = 2.0;
  l2.step_size = 0.25;
  AttackConfig at = pgd;
  at.kind = AttackKind::kAtent;
  at.sampler.norm = NormKind::kLinf;
  at.sampler.gamma = 1.0 / 0.3;
  at.sampler.steps = 20;
  at.sampler.step = 0.1;
  for (const AttackConfig& a : {fgsm_cfg, pgd, l2, at}) contain(a);

  AttackConfig one = pgd;
  one.steps = 1;
  one.step_size = pgd.radius;
  one.random_start = false;
  const bool fgsm_eq = fgsm(p, b, fgsm_cfg) == pgd_attack(p, b, one);

  // Paired strength at a radius where PGD leaves non-trivial accuracy:
  // same radius, 20 gradient evaluations, gamma = 1/eps; the chain step is
  // the strongest of a fixed grid.
  const double eps = 0.1;
  AttackConfig pgd01 = pgd;
  pgd01.radius = eps;
  pgd01.step_size = eps / 4;
  const double r_pgd = robust_accuracy(p, b.inputs, b.labels, pgd01);
  double r_atent = 1.0, best_step = 0.0;
  for (double step : {0.01, 0.03, 0.1, 0.3, 1.0}) {
    AttackConfig a = pgd01;
    a.kind = AttackKind::kAtent;
    a.sampler = at.sampler;
    a.sampler.gamma = 1.0 / eps;
    a.sampler.step = step;
    const double r = robust_accuracy(p, b.inputs, b.labels, a);
    if (r < r_atent) {
      r_atent = r;
      best_step = step;
    }
  }
  AttackConfig at03 = at;
  const double r_pgd03 = robust_accuracy(p, b.inputs, b.labels, pgd);
  const double r_at03 = robust_accuracy(p, b.inputs, b.labels, at03);

  const bool ok = worst <= 1e-9 && fgsm_eq && std::abs(r_atent - r_pgd) <= 0.05;
  report(7, "attack suite", ok,
         fmt("max overshoot %.1e (<= 1e-9)", std::max(worst, 0.0)) +
             ", fgsm == 1-step pgd " + (fgsm_eq ? "yes" : "no") +
             fmt(", eps=0.1 pgd-20 %.4f", r_pgd) +
             fmt(" atent-20 %.4f", r_atent) + fmt(" (step %g)", best_step) +
             fmt(", |diff| %.4f (<= 0.05)", std::abs(r_atent - r_pgd)) +
             fmt("; eps=0.3 pgd %.4f", r_pgd03) + fmt(" atent %.4f", r_at03));
}

// P(401 <= K <= 599) for K ~ Binomial(1000, 1/2): the abstain probability
// of a fair-coin base classifier with margin 0.1.
double abstain_probability(std::size_t n, double margin) {
  double p = 0.0;
  for (std::size_t k = 0; k <= n; ++k) {
    const double share = static_cast<double>(std::max(k, n - k)) / n;
    if (share >= 0.5 + margin) continue;
    p += std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) -
                  std::lgamma(n - k + 1.0) - n * std::log(2.0));
  }
  return p;
}

void criterion8() {
  const ModelParams& p = g_desk.at("sgd").result.state.best_params;
  ExperimentConfig cfg = parse_config(kSource / "configs" / "mnist58_sgd.json");
  cfg.dataset.test_samples = 1000;
  const ExperimentData d = load_experiment_data(cfg, kSource / "data" / "mnist58");
  const auto plain = predict(p, d.test.inputs);
  SmoothingConfig zero;
  zero.sigma = 0.0;
  zero.n_samples = 5;
  std::size_t same = 0;
  for (std::size_t i = 0; i < d.test.size(); ++i) {
    same += smooth_predict(p, slice_rows(d.test.inputs, i, 1).reshaped({28, 28}),
                           zero, i) == plain[i];
  }

  Classifier coin = [](const Tensor& x) {
    std::vector<std::size_t> out(x.dim(0));
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] > 0.0;
    return out;
  };
  SmoothingConfig c;
  c.sigma = 1.0;
  c.n_samples = 1000;
  c.abstain_margin = 0.1;
  const std::size_t trials = 1000;
  std::size_t abstained = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    abstained += smooth_vote(coin, 2, Tensor({1}), c, t).prediction == kAbstain;
  }
  const double empirical = static_cast<double>(abstained) / trials;
  const double exact = abstain_probability(1000, 0.1);
  const bool ok = same == d.test.size() && empirical >= 0.99 && exact >= 0.99;
  report(8, "smoothing", ok,
         std::to_string(same) + "/" + std::to_string(d.test.size()) +
             " sigma=0 predictions equal" +
             fmt(", abstain rate %.4f", empirical) +
             fmt(" (binomial %.6f, >= 0.99)", exact));
}

void criterion9() {
  ExperimentConfig cfg =
      parse_config(kSource / "configs" / "two_gaussians_atent_linf.json");
  cfg.trainer.record_timing = false;
  auto run = [&](const std::string& dir, std::size_t budget) {
    RunOptions o;
    o.output_dir = g_work / dir;
    o.epoch_budget = budget;
    return run_experiment(cfg, o);
  };
  fs::remove_all(g_work / "det_a");
  fs::remove_all(g_work / "det_b");
  fs::remove_all(g_work / "det_resume");
  const RunResult a = run("det_a", 0);
  run("det_b", 0);
  const bool same_csv = read_file(g_work / "det_a" / "report.csv") ==
                        read_file(g_work / "det_b" / "report.csv");

  const fs::path ckpt = g_work / "det_a" / "checkpoint.atnt";
  const ModelParams loaded = load_checkpoint(ckpt);
  save_checkpoint(loaded, g_work / "det_a" / "copy.atnt");
  const bool roundtrip = bitwise(loaded, a.state.best_params) &&
                         read_file(ckpt) == read_file(g_work / "det_a" / "copy.atnt");

  RunResult r;
  std::size_t pieces = 0;
  do {
    r = run("det_resume", 7);
    ++pieces;
  } while (!r.completed);
  const bool resume = bitwise(r.state.params, a.state.params) &&
                      r.state.history == a.state.history &&
                      read_file(g_work / "det_resume" / "report.csv") ==
                          read_file(g_work / "det_a" / "report.csv");
  report(9, "determinism and persistence", same_csv && roundtrip && resume,
         std::string("report csv identical ") + (same_csv ? "yes" : "no") +
             ", checkpoint round-trip bitwise " + (roundtrip ? "yes" : "no") +
             ", resume in " + std::to_string(pieces) +
             " pieces matches straight run " + (resume ? "yes" : "no"));
}

void guarded(int id, const std::string& title, const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    report(id, title, false, std::string("error: ") + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  bool strict = false;
  g_work = fs::temp_directory_path() / "atent_acceptance";
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--strict") {
      strict = true;
    } else if (a == "--work-dir" && i + 1 < argc) {
      g_work = argv[++i];
    } else {
      std::fprintf(stderr, "usage: atent_acceptance [--strict] [--work-dir DIR]\n");
      return 2;
    }
  }
  fs::create_directories(g_work);

  guarded(1, "gradient suite",
          [] { verify_suite(1, "gradient suite", verify_gradients, 60); });
  guarded(2, "sampler stationarity",
          [] { verify_suite(2, "sampler stationarity", verify_sampler, 120); });
  guarded(3, "equivalence suite", criterion3);
  guarded(4, "lemma suite",
          [] { verify_suite(4, "lemma suite", verify_lemma1, 30); });
  guarded(5, "desk-scale robustness ordering", criterion5and6);
  if (g_desk.size() < 5) {
    report(6, "entropy-sgd non-robustness", false, "desk-scale runs missing");
  }
  if (g_desk.count("sgd")) {
    guarded(7, "attack suite", criterion7);
    guarded(8, "smoothing", criterion8);
  } else {
    report(7, "attack suite", false, "desk-scale sgd model missing");
    report(8, "smoothing", false, "desk-scale sgd model missing");
  }
  guarded(9, "determinism and persistence", criterion9);

  std::printf("%d of 9 criteria failed\n", g_failed);
  return strict && g_failed > 0 ? 1 : 0;
}
