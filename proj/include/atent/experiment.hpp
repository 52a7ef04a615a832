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

// End-to-end runs: load data, train (resuming from the output directory
// when a trainer state is present), evaluate the configured attacks on
// the early-stopped snapshot, and write artifacts.
//
// Output directory layout:
//   config.json          resolved config with all defaults
//   metrics.jsonl        one record per finished epoch
//   state.atnt(.json)    trainer state after the last finished epoch
//   checkpoint.atnt(.json)  early-stopped params, written after training
//   report.csv           one row per configured attack
//   decision.svg         decision regions, 2D datasets only

#ifndef ATENT_EXPERIMENT_HPP_
#define ATENT_EXPERIMENT_HPP_

#include <filesystem>
#include <functional>
#include <optional>

#include "atent/config.hpp"
#include "atent/report.hpp"

namespace atent {

struct ExperimentData {
  Dataset train;
  Dataset val;
  Dataset test;
};

// `data_dir` overrides the config and $ATENT_DATA_DIR.
ExperimentData load_experiment_data(
    const ExperimentConfig& cfg,
    const std::optional<std::filesystem::path>& data_dir = std::nullopt);

ModelParams build_model(const ExperimentConfig& cfg, const Dataset& train);

// Natural accuracy on `test` plus one row per attack.
EvalReport evaluate_attacks(const ExperimentConfig& cfg,
                            const ModelParams& params, const Dataset& test);

struct RunOptions {
  std::optional<std::filesystem::path> data_dir;
  std::optional<std::filesystem::path> output_dir;  // overrides the config
  bool resume = true;
  // Stop after this many epochs in this invocation (0 = run to the end).
  // Used to exercise resume.
  std::size_t epoch_budget = 0;
  std::function<void(const EpochMetrics&)> on_epoch;
};

struct RunResult {
  bool completed = false;  // false when epoch_budget cut the run short
  TrainerState state;
  EvalReport report;
  std::filesystem::path output_dir;
};

RunResult run_experiment(const ExperimentConfig& cfg,
                         const RunOptions& options = {});

}  // namespace atent

#endif  // ATENT_EXPERIMENT_HPP_
