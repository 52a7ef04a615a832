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

#include "atent/defenses.hpp"

#include <chrono>
#include <cmath>
#include <string>

namespace atent {

namespace {

std::vector<double> flatten(const std::vector<Tensor>& parts) {
  std::vector<double> out;
  for (const Tensor& t : parts) {
    out.insert(out.end(), t.values().begin(), t.values().end());
  }
  return out;
}

GibbsSamplerConfig sampler_for(const TrainerConfig& cfg) {
  GibbsSamplerConfig s = cfg.sampler;
  if (cfg.defense == DefenseKind::kAtentL2) s.norm = NormKind::kL2;
  if (cfg.defense == DefenseKind::kAtentLinf) s.norm = NormKind::kLinf;
  return s;
}

AttackConfig eval_attack_for(const TrainerConfig& cfg) {
  AttackConfig a = cfg.early_stop.eval_attack.value_or(cfg.pgd);
  a.seed = Rng::stream(cfg.seed, {kEvalStream}).next_u64();
  return a;
}

}  // namespace

std::string_view to_string(DefenseKind kind) {
  switch (kind) {
    case DefenseKind::kSgd:
      return "sgd";
    case DefenseKind::kEntropySgd:
      return "entropy_sgd";
    case DefenseKind::kPgdAt:
      return "pgd_at";
    case DefenseKind::kAtentL2:
      return "atent_l2";
    case DefenseKind::kAtentLinf:
      return "atent_linf";
  }
  return "?";
}

std::optional<DefenseKind> parse_defense(std::string_view name) {
  for (DefenseKind k :
       {DefenseKind::kSgd, DefenseKind::kEntropySgd, DefenseKind::kPgdAt,
        DefenseKind::kAtentL2, DefenseKind::kAtentLinf}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

bool uses_sampler(DefenseKind kind) {
  return kind == DefenseKind::kEntropySgd || kind == DefenseKind::kAtentL2 ||
         kind == DefenseKind::kAtentLinf;
}

void validate(const TrainerConfig& cfg) {
  if (!(cfg.lr >= 0.0) || !std::isfinite(cfg.lr)) {
    throw ConfigError("trainer.lr must be a finite number >= 0");
  }
  if (cfg.epochs < 1) throw ConfigError("trainer.epochs must be >= 1");
  if (cfg.batch_size < 1) throw ConfigError("trainer.batch_size must be >= 1");
  if (!(cfg.weight_decay >= 0.0)) {
    throw ConfigError("trainer.weight_decay must be >= 0");
  }
  if (cfg.lr_schedule) {
    for (const LrDecay& d : *cfg.lr_schedule) {
      if (!(d.factor > 0.0)) {
        throw ConfigError("trainer.lr_schedule factors must be > 0");
      }
    }
  }
  if (uses_sampler(cfg.defense)) validate(cfg.sampler);
  validate(cfg.pgd);
  if (cfg.early_stop.eval_attack) validate(*cfg.early_stop.eval_attack);
}

double lr_at(const TrainerConfig& cfg, std::size_t epoch) {
  double lr = cfg.lr;
  if (!cfg.lr_schedule) {
    const auto decay_epoch = static_cast<std::size_t>(
        std::ceil(0.75 * static_cast<double>(cfg.epochs)));
    return epoch >= decay_epoch ? lr * 0.1 : lr;
  }
  for (const LrDecay& d : *cfg.lr_schedule) {
    if (epoch >= d.epoch) lr *= d.factor;
  }
  return lr;
}

TrainerState initial_state(ModelParams params) {
  TrainerState s;
  s.best_params = params;
  s.params = std::move(params);
  return s;
}

void early_stop_update(TrainerState& state, double metric,
                       std::size_t patience, double tiebreak) {
  if (metric > state.best_metric ||
      (metric == state.best_metric && tiebreak > state.best_tiebreak)) {
    state.best_metric = metric;
    state.best_tiebreak = tiebreak;
    state.best_epoch = state.epoch;
    state.best_params = state.params;
    state.epochs_since_best = 0;
  } else {
    ++state.epochs_since_best;
  }
  if (patience > 0 && state.epochs_since_best >= patience) {
    state.stopped = true;
  }
}

EntropyStep entropy_sgd_step(std::span<const double> w, const FlatLossFn& loss,
                             const GibbsSamplerConfig& cfg, double lr,
                             Rng& rng) {
  validate(cfg);
  const std::size_t d = w.size();
  std::vector<double> wp(w.begin(), w.end());
  EntropyStep out;
  out.mu.assign(w.begin(), w.end());
  std::vector<double> grad(d);
  const double noise = std::sqrt(2.0 * cfg.step) * cfg.noise_scale;
  for (std::size_t k = 0; k < cfg.steps; ++k) {
    const double l = loss(wp, grad);
    if (!std::isfinite(l)) throw NonFiniteError("entropy-sgd chain diverged");
    if (k == 0) out.loss_at_w = l;
    for (std::size_t i = 0; i < d; ++i) {
      wp[i] += cfg.step * (-grad[i] + cfg.gamma * (w[i] - wp[i]));
      if (noise != 0.0) wp[i] += noise * rng.normal();
    }
    for (std::size_t i = 0; i < d; ++i) {
      out.mu[i] = ema_update(out.mu[i], wp[i], cfg.ema);
    }
  }
  if (!all_finite(out.mu)) throw NonFiniteError("entropy-sgd chain diverged");
  out.w_next.resize(d);
  for (std::size_t i = 0; i < d; ++i) {
    out.w_next[i] = w[i] - lr * cfg.gamma * (w[i] - out.mu[i]);
  }
  return out;
}

BatchStep defense_batch_step(const TrainerConfig& cfg,
                             const ModelParams& params, const Batch& batch,
                             std::uint64_t epoch, std::uint64_t batch_index) {
  BatchStep out;
  switch (cfg.defense) {
    case DefenseKind::kSgd: {
      LossAndGrads lg = loss_and_grads(params, batch, GradTarget::kWeights);
      out.loss = lg.loss;
      out.grad = std::move(lg.weight_grads);
      return out;
    }
    case DefenseKind::kPgdAt: {
      AttackConfig a = cfg.pgd;
      a.seed = Rng::stream(cfg.seed, {kAttackStream, epoch}).next_u64();
      Tensor adv = pgd_attack(params, batch, a, batch_index);
      LossAndGrads lg =
          loss_and_grads(params, {adv, batch.labels}, GradTarget::kWeights);
      out.loss = lg.loss;
      out.grad = std::move(lg.weight_grads);
      return out;
    }
    case DefenseKind::kAtentL2:
    case DefenseKind::kAtentLinf: {
      Rng rng = Rng::stream(cfg.seed, {kSamplerStream, epoch, batch_index});
      ChainResult chain =
          run_chain(params, batch, sampler_for(cfg), rng,
                    {.keep_samples = false, .accumulate_weight_grad = true});
      out.loss = chain.ema_loss;
      out.grad = std::move(chain.weight_grad);
      return out;
    }
    case DefenseKind::kEntropySgd: {
      Rng rng = Rng::stream(cfg.seed, {kSamplerStream, epoch, batch_index});
      ModelParams scratch = params;
      FlatLossFn fn = [&](std::span<const double> w, std::vector<double>& g) {
        assign_weights(scratch, w);
        LossAndGrads lg = loss_and_grads(scratch, batch, GradTarget::kWeights);
        g = flatten(lg.weight_grads);
        return lg.loss;
      };
      const std::vector<double> w = flatten_weights(params);
      // lr = 0: only mu is needed, the trainer applies the step.
      EntropyStep step = entropy_sgd_step(w, fn, cfg.sampler, 0.0, rng);
      out.loss = step.loss_at_w;
      for (const NamedTensor& t : params.weights) {
        out.grad.push_back(Tensor::zeros(t.value.shape()));
      }
      std::size_t off = 0;
      for (Tensor& g : out.grad) {
        for (double& v : g.data()) {
          v = cfg.sampler.gamma * (w[off] - step.mu[off]);
          ++off;
        }
      }
      return out;
    }
  }
  throw Error("unknown defense");
}

void train(const TrainerConfig& cfg, TrainerState& state, const Dataset& train,
           const Dataset& val, const EpochCallback& on_epoch) {
  validate(cfg);
  validate(train);
  validate(state.params);
  const Dataset& eval = val.size() > 0 ? val : train;
  const std::size_t n_rob = cfg.early_stop.eval_samples == 0
                                ? eval.size()
                                : std::min(cfg.early_stop.eval_samples,
                                           eval.size());
  const Tensor rob_x = slice_rows(eval.inputs, 0, n_rob);
  const Tensor rob_y = slice_rows(eval.labels, 0, n_rob);
  const AttackConfig eval_attack = eval_attack_for(cfg);

  using Clock = std::chrono::steady_clock;
  while (state.epoch < cfg.epochs && !state.stopped) {
    const auto t0 = Clock::now();
    const std::size_t epoch = state.epoch;
    const double lr = lr_at(cfg, epoch);
    const auto batches =
        batch_indices(train.size(), cfg.batch_size, cfg.seed, epoch);
    double loss_sum = 0.0;
    for (std::size_t j = 0; j < batches.size(); ++j) {
      Batch b{take_rows(train.inputs, batches[j]),
              take_rows(train.labels, batches[j])};
      BatchStep step = defense_batch_step(cfg, state.params, b, epoch, j);
      if (!std::isfinite(step.loss)) {
        throw NonFiniteError("training diverged at epoch " +
                             std::to_string(epoch));
      }
      loss_sum += step.loss * static_cast<double>(batches[j].size());
      for (std::size_t p = 0; p < step.grad.size(); ++p) {
        auto w = state.params.weights[p].value.data();
        const auto g = step.grad[p].data();
        for (std::size_t i = 0; i < w.size(); ++i) {
          w[i] -= lr * (g[i] + cfg.weight_decay * w[i]);
        }
      }
      for (const NamedTensor& t : state.params.weights) {
        require_finite(t.value, "weights after update");
      }
    }

    EpochMetrics m;
    m.epoch = epoch;
    m.train_loss = loss_sum / static_cast<double>(train.size());
    m.lr = lr;
    const Tensor logits = forward_logits(state.params, eval.inputs);
    double eval_loss = 0.0;
    for (double l : cross_entropy_rows(logits, eval.labels)) eval_loss += l;
    if (!std::isfinite(eval_loss)) {
      throw NonFiniteError("evaluation loss diverged at epoch " +
                           std::to_string(epoch));
    }
    const auto pred = argmax_rows(logits);
    const auto truth = label_indices(eval.labels);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == truth[i];
    m.nat_acc = static_cast<double>(hits) / static_cast<double>(pred.size());
    m.rob_acc = robust_accuracy(state.params, rob_x, rob_y, eval_attack);

    state.epoch = epoch + 1;
    const bool robust = cfg.early_stop.metric == StopMetric::kRobust;
    early_stop_update(state, robust ? m.rob_acc : m.nat_acc,
                      cfg.early_stop.patience, robust ? m.nat_acc : m.rob_acc);
    if (cfg.record_timing) {
      m.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0)
                      .count();
    }
    state.history.push_back(m);
    if (on_epoch) on_epoch(m, state);
  }
}

namespace {

TrainerState run_as(DefenseKind kind, TrainerConfig cfg,
                    const ModelParams& params, const Dataset& train_set,
                    const Dataset& val) {
  cfg.defense = kind;
  TrainerState state = initial_state(params);
  train(cfg, state, train_set, val);
  return state;
}

}  // namespace

TrainerState train_sgd(const TrainerConfig& cfg, const ModelParams& params,
                       const Dataset& train, const Dataset& val) {
  return run_as(DefenseKind::kSgd, cfg, params, train, val);
}

TrainerState train_entropy_sgd(const TrainerConfig& cfg,
                               const ModelParams& params, const Dataset& train,
                               const Dataset& val) {
  return run_as(DefenseKind::kEntropySgd, cfg, params, train, val);
}

TrainerState train_pgd_at(const TrainerConfig& cfg, const ModelParams& params,
                          const Dataset& train, const Dataset& val) {
  return run_as(DefenseKind::kPgdAt, cfg, params, train, val);
}

TrainerState train_atent(const TrainerConfig& cfg, const ModelParams& params,
                         const Dataset& train, const Dataset& val) {
  DefenseKind kind = cfg.defense == DefenseKind::kAtentL2
                         ? DefenseKind::kAtentL2
                         : DefenseKind::kAtentLinf;
  return run_as(kind, cfg, params, train, val);
}

}  // namespace atent
