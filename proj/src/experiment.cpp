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

#include "atent/experiment.hpp"

#include <chrono>
#include <cmath>

#include "atent/checkpoint.hpp"
#include "atent/io.hpp"
#include "atent/rng.hpp"

namespace atent {

namespace fs = std::filesystem;

namespace {

fs::path find_idx(const fs::path& dir, const std::string& stem) {
  for (const char* suffix : {"", ".gz"}) {
    fs::path p = dir / (stem + suffix);
    if (fs::exists(p)) return p;
  }
  throw Error("missing " + stem + "[.gz] in " + dir.string());
}

Dataset add_channel_axis(Dataset ds) {
  Shape s = ds.inputs.shape();
  if (s.size() == 3) {
    s.insert(s.begin() + 1, 1);
    ds.inputs = ds.inputs.reshaped(s);
  }
  return ds;
}

Dataset head(const Dataset& ds, std::size_t n) {
  if (n == 0 || n >= ds.size()) return ds;
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  return take(ds, idx);
}

}  // namespace

ExperimentData load_experiment_data(const ExperimentConfig& cfg,
                                    const std::optional<fs::path>& data_dir) {
  const DatasetSpec& spec = cfg.dataset;
  const std::uint64_t data_seed = Rng::stream(cfg.seed, {kDataStream}).next_u64();
  Dataset train_all, test;
  if (spec.kind == DatasetKind::kTwoGaussians) {
    train_all = synth_two_gaussians(spec.train_n, spec.separation, data_seed);
    test = synth_two_gaussians(spec.test_n, spec.separation, data_seed + 1);
  } else {
    fs::path dir = data_dir ? *data_dir
                   : spec.dir ? fs::path(*spec.dir)
                              : data_dir_from_env("data/mnist58");
    train_all = load_mnist_idx(find_idx(dir, "train-images-idx3-ubyte"),
                               find_idx(dir, "train-labels-idx1-ubyte"));
    test = load_mnist_idx(find_idx(dir, "t10k-images-idx3-ubyte"),
                          find_idx(dir, "t10k-labels-idx1-ubyte"));
    if (spec.classes.size() == 2) {
      train_all = subset_binary(train_all, spec.classes[0], spec.classes[1],
                                spec.cap_per_class, data_seed);
      test = subset_binary(test, spec.classes[0], spec.classes[1], 0,
                           data_seed + 1);
    }
    test = head(test, spec.test_samples);
    if (cfg.model.kind == ModelKind::kCnn) {
      train_all = add_channel_axis(std::move(train_all));
      test = add_channel_axis(std::move(test));
    }
  }
  auto [train, val] =
      train_val_split(train_all, spec.val_fraction,
                      Rng::stream(cfg.seed, {kSplitStream}).next_u64());
  return {std::move(train), std::move(val), std::move(test)};
}

ModelParams build_model(const ExperimentConfig& cfg, const Dataset& train) {
  const Shape sample = train.sample_shape();
  const std::uint64_t seed = Rng::stream(cfg.seed, {kInitStream}).next_u64();
  if (cfg.model.kind == ModelKind::kMlp) {
    std::vector<std::size_t> widths = {shape_size(sample)};
    widths.insert(widths.end(), cfg.model.hidden.begin(),
                  cfg.model.hidden.end());
    widths.push_back(train.classes());
    return build_mlp(widths, seed);
  }
  if (sample.size() != 3) {
    throw ConfigError("model.kind cnn needs image data [c x h x w]");
  }
  std::vector<std::size_t> fc = cfg.model.hidden;
  fc.push_back(train.classes());
  return build_small_cnn(sample, cfg.model.conv_channels, fc, seed);
}

EvalReport evaluate_attacks(const ExperimentConfig& cfg,
                            const ModelParams& params, const Dataset& test) {
  using Clock = std::chrono::steady_clock;
  const bool timing = cfg.trainer.record_timing;
  const double natural = accuracy(params, test.inputs, test.labels);
  EvalReport report;
  for (const AttackConfig& a : cfg.attacks) {
    const auto t0 = Clock::now();
    ReportRow row;
    row.defense = std::string(to_string(cfg.trainer.defense));
    row.attack = std::string(to_string(a.kind));
    row.norm = std::string(to_string(a.norm));
    row.epsilon = a.radius;
    row.natural_acc = natural;
    row.robust_acc = robust_accuracy(params, test.inputs, test.labels, a);
    row.seed = a.seed;
    if (timing) {
      row.wall_ms =
          std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

RunResult run_experiment(const ExperimentConfig& cfg,
                         const RunOptions& options) {
  validate(cfg.trainer);
  RunResult result;
  result.output_dir = options.output_dir.value_or(fs::path(cfg.output_dir));
  const fs::path& out = result.output_dir;
  DirLock lock(out);

  const ExperimentData data = load_experiment_data(cfg, options.data_dir);
  atomic_write(out / "config.json", to_json(cfg).dump(2) + "\n");

  const fs::path state_file = out / "state.atnt";
  TrainerState state = options.resume && fs::exists(state_file)
                           ? load_trainer_state(state_file)
                           : initial_state(build_model(cfg, data.train));

  const std::size_t target =
      options.epoch_budget == 0
          ? cfg.trainer.epochs
          : std::min(cfg.trainer.epochs, state.epoch + options.epoch_budget);
  auto on_epoch = [&](const EpochMetrics& m, const TrainerState& s) {
    save_trainer_state(s, state_file);
    atomic_write(out / "metrics.jsonl", metrics_jsonl(s.history));
    if (options.on_epoch) options.on_epoch(m);
  };
  // The trainer stops at tc.epochs; the schedule still sees the real total.
  TrainerConfig tc = cfg.trainer;
  if (target < cfg.trainer.epochs) {
    if (!tc.lr_schedule) {
      const auto decay = static_cast<std::size_t>(
          std::ceil(0.75 * static_cast<double>(cfg.trainer.epochs)));
      tc.lr_schedule = std::vector<LrDecay>{{decay, 0.1}};
    }
    tc.epochs = target;
  }
  train(tc, state, data.train, data.val, on_epoch);

  result.completed = state.epoch >= cfg.trainer.epochs || state.stopped;
  if (!result.completed) {
    result.state = std::move(state);
    return result;
  }
  save_checkpoint(state.best_params, out / "checkpoint.atnt");
  result.report = evaluate_attacks(cfg, state.best_params, data.test);
  emit_report(result.report, out, &state.best_params, &data.test);
  result.state = std::move(state);
  return result;
}

}  // namespace atent
