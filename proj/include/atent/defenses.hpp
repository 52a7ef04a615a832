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

// Trainers: SGD, Entropy-SGD, PGD adversarial training and ATENT (l2 and
// linf), sharing one loop, one config and one metrics schema.

#ifndef ATENT_DEFENSES_HPP_
#define ATENT_DEFENSES_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "atent/attacks.hpp"
#include "atent/data.hpp"
#include "atent/gibbs_sampler.hpp"
#include "atent/models.hpp"

namespace atent {

enum class DefenseKind { kSgd, kEntropySgd, kPgdAt, kAtentL2, kAtentLinf };

std::string_view to_string(DefenseKind kind);
// Parses "sgd", "entropy_sgd", "pgd_at", "atent_l2", "atent_linf".
std::optional<DefenseKind> parse_defense(std::string_view name);

bool uses_sampler(DefenseKind kind);

struct LrDecay {
  std::size_t epoch = 0;  // first epoch (0-based) at the decayed rate
  double factor = 0.1;
};

enum class StopMetric { kRobust, kNatural };

struct EarlyStopConfig {
  StopMetric metric = StopMetric::kRobust;
  // Stop after this many epochs without improvement; 0 never stops.
  std::size_t patience = 0;
  // Validation attack; unset means the trainer's pgd settings.
  std::optional<AttackConfig> eval_attack;
  // Validation samples used per epoch; 0 means all.
  std::size_t eval_samples = 0;
};

struct TrainerConfig {
  DefenseKind defense = DefenseKind::kSgd;
  double lr = 0.1;
  std::size_t epochs = 10;
  std::size_t batch_size = 64;
  // Unset: one x0.1 decay starting at epoch ceil(0.75 * epochs).
  std::optional<std::vector<LrDecay>> lr_schedule;
  double weight_decay = 0.0;
  GibbsSamplerConfig sampler;
  AttackConfig pgd;  // inner attack for PGD-AT
  EarlyStopConfig early_stop;
  std::uint64_t seed = 0;
  // When false wall_ms is written as 0 so metrics are reproducible bytes.
  bool record_timing = true;
};

void validate(const TrainerConfig& cfg);

double lr_at(const TrainerConfig& cfg, std::size_t epoch);

struct EpochMetrics {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double nat_acc = 0.0;
  double rob_acc = 0.0;
  double lr = 0.0;
  double wall_ms = 0.0;

  bool operator==(const EpochMetrics&) const = default;
};

struct TrainerState {
  ModelParams params;
  std::size_t epoch = 0;  // epochs completed
  double best_metric = -1.0;
  double best_tiebreak = -1.0;  // the other accuracy at the best epoch
  std::size_t best_epoch = 0;
  std::size_t epochs_since_best = 0;
  bool stopped = false;
  ModelParams best_params;
  std::vector<EpochMetrics> history;
};

TrainerState initial_state(ModelParams params);

// Snapshots params when `metric` improves, or ties with a better
// `tiebreak`; counts stale epochs.
void early_stop_update(TrainerState& state, double metric,
                       std::size_t patience, double tiebreak = -1.0);

using EpochCallback =
    std::function<void(const EpochMetrics&, const TrainerState&)>;

// Runs epochs state.epoch .. cfg.epochs-1 (so a restored state resumes).
// Validation metrics use `val`, or `train` when `val` is empty.
void train(const TrainerConfig& cfg, TrainerState& state, const Dataset& train,
           const Dataset& val, const EpochCallback& on_epoch = {});

// Convenience wrappers that start from `params`.
TrainerState train_sgd(const TrainerConfig& cfg, const ModelParams& params,
                       const Dataset& train, const Dataset& val);
TrainerState train_entropy_sgd(const TrainerConfig& cfg,
                               const ModelParams& params, const Dataset& train,
                               const Dataset& val);
TrainerState train_pgd_at(const TrainerConfig& cfg, const ModelParams& params,
                          const Dataset& train, const Dataset& val);
TrainerState train_atent(const TrainerConfig& cfg, const ModelParams& params,
                         const Dataset& train, const Dataset& val);

// Loss and gradient of a flat weight vector.
using FlatLossFn =
    std::function<double(std::span<const double> w, std::vector<double>& grad)>;

struct EntropyStep {
  std::vector<double> mu;      // EMA of the chain w'
  std::vector<double> w_next;  // w - lr * gamma * (w - mu)
  double loss_at_w = 0.0;
};

// One Entropy-SGD outer step: K Langevin steps of w' from w, gradient taken
// at w', EMA started at w.
EntropyStep entropy_sgd_step(std::span<const double> w, const FlatLossFn& loss,
                             const GibbsSamplerConfig& cfg, double lr,
                             Rng& rng);

// Per-batch weight gradient of each defense, mean-loss scale. Exposed so
// tests can compare defenses step by step.
struct BatchStep {
  double loss = 0.0;  // loss the defense optimises on this batch
  std::vector<Tensor> grad;
};

BatchStep defense_batch_step(const TrainerConfig& cfg,
                             const ModelParams& params, const Batch& batch,
                             std::uint64_t epoch, std::uint64_t batch_index);

}  // namespace atent

#endif  // ATENT_DEFENSES_HPP_
