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

#include "atent/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "atent/parallel.hpp"
#include "atent/rng.hpp"

namespace atent {

namespace {

constexpr std::uint64_t kAtentAttackTag = 0xa7e47;

double signum(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

std::size_t rows_of(const Tensor& t) { return t.rank() >= 2 ? t.dim(0) : 1; }
std::size_t width_of(const Tensor& t) {
  return t.rank() >= 2 ? t.row_size() : t.size();
}

void clip(Tensor& t, const std::optional<std::pair<double, double>>& range) {
  if (!range) return;
  for (double& v : t.data()) v = std::clamp(v, range->first, range->second);
}

void random_start(Tensor& x_adv, const AttackConfig& cfg, Rng& rng) {
  if (!(cfg.radius > 0.0) || !std::isfinite(cfg.radius)) return;
  const std::size_t n = rows_of(x_adv), d = width_of(x_adv);
  auto a = x_adv.data();
  if (cfg.norm == NormKind::kLinf) {
    for (double& v : a) v += cfg.radius * (2.0 * rng.uniform() - 1.0);
    return;
  }
  std::vector<double> dir(d);
  for (std::size_t i = 0; i < n; ++i) {
    for (double& v : dir) v = rng.normal();
    const double norm = l2_norm(dir);
    const double r =
        cfg.radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(d));
    if (norm == 0.0) continue;
    for (std::size_t j = 0; j < d; ++j) a[i * d + j] += r * dir[j] / norm;
  }
}

void ascent_step(Tensor& x_adv, const Tensor& x, const Tensor& grad,
                 const AttackConfig& cfg) {
  const std::size_t n = rows_of(x_adv), d = width_of(x_adv);
  auto a = x_adv.data();
  const auto g = grad.data();
  const auto x0 = x.data();
  switch (cfg.step_rule) {
    case StepRule::kRaw:
      for (std::size_t i = 0; i < a.size(); ++i) a[i] += cfg.step_size * g[i];
      return;
    case StepRule::kRegularized:
      // Same arithmetic as langevin_step_l2 with zero noise.
      for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] += cfg.step_size * (g[i] + cfg.reg_gamma * (x0[i] - a[i]));
      }
      return;
    case StepRule::kStandard:
      break;
  }
  if (cfg.norm == NormKind::kLinf) {
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] += cfg.step_size * signum(g[i]);
    }
    return;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double norm = l2_norm(g.subspan(i * d, d));
    if (norm == 0.0) continue;
    for (std::size_t j = i * d; j < (i + 1) * d; ++j) {
      a[j] += cfg.step_size * g[j] / norm;
    }
  }
}

}  // namespace

std::string_view to_string(AttackKind kind) {
  switch (kind) {
    case AttackKind::kFgsm:
      return "fgsm";
    case AttackKind::kPgd:
      return "pgd";
    case AttackKind::kAtent:
      return "atent";
  }
  return "?";
}

void validate(const AttackConfig& cfg) {
  if (std::isnan(cfg.radius) || cfg.radius < 0.0) {
    throw ConfigError("attack.radius must be >= 0");
  }
  if (cfg.steps >= 1 && !(cfg.step_size > 0.0)) {
    throw ConfigError("attack.step_size must be > 0 when steps >= 1");
  }
  if (cfg.restarts < 1) throw ConfigError("attack.restarts must be >= 1");
  if (cfg.kind == AttackKind::kFgsm && cfg.norm != NormKind::kLinf) {
    throw ConfigError("fgsm is defined for the linf norm only");
  }
  if (cfg.step_rule == StepRule::kRegularized && !(cfg.reg_gamma >= 0.0)) {
    throw ConfigError("attack.reg_gamma must be >= 0");
  }
  if (cfg.kind == AttackKind::kAtent) validate(cfg.sampler);
}

Tensor project_ball(const Tensor& x_adv, const Tensor& x, NormKind norm,
                    double radius) {
  if (x_adv.shape() != x.shape()) throw ShapeError("project_ball: shapes");
  if (std::isinf(radius)) return x_adv;
  Tensor out = x_adv;
  auto o = out.data();
  const auto x0 = x.data();
  if (norm == NormKind::kLinf) {
    for (std::size_t i = 0; i < o.size(); ++i) {
      o[i] = x0[i] + std::clamp(o[i] - x0[i], -radius, radius);
    }
    return out;
  }
  const std::size_t n = rows_of(x), d = width_of(x);
  std::vector<double> delta(d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) delta[j] = o[i * d + j] - x0[i * d + j];
    const double len = l2_norm(delta);
    if (len <= radius) continue;
    const double s = radius / len;
    for (std::size_t j = 0; j < d; ++j) {
      o[i * d + j] = x0[i * d + j] + s * delta[j];
    }
  }
  return out;
}

double max_perturbation(const Tensor& x_adv, const Tensor& x, NormKind norm) {
  if (x_adv.shape() != x.shape()) throw ShapeError("max_perturbation: shapes");
  const std::size_t n = rows_of(x), d = width_of(x);
  std::vector<double> delta(d);
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      delta[j] = x_adv[i * d + j] - x[i * d + j];
    }
    worst = std::max(worst, norm == NormKind::kLinf ? linf_norm(delta)
                                                    : l2_norm(delta));
  }
  return worst;
}

Tensor fgsm(const ModelParams& params, const Batch& batch,
            const AttackConfig& cfg) {
  if (cfg.norm != NormKind::kLinf) throw ConfigError("fgsm needs linf");
  LossAndGrads lg = loss_and_grads(params, batch, GradTarget::kInputs);
  Tensor out = batch.inputs;
  auto o = out.data();
  const auto g = lg.input_grads.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += cfg.radius * signum(g[i]);
  clip(out, cfg.clip_range);
  return out;
}

Tensor pgd_attack(const ModelParams& params, const Batch& batch,
                  const AttackConfig& cfg, std::uint64_t stream) {
  validate(cfg);
  const std::size_t n = batch.inputs.dim(0);
  const std::size_t d = batch.inputs.row_size();
  Tensor best;
  std::vector<double> best_loss;
  for (std::size_t r = 0; r < cfg.restarts; ++r) {
    Rng rng = Rng::stream(cfg.seed, {kAttackStream, stream, r});
    Tensor x_adv = batch.inputs;
    if (cfg.random_start) {
      random_start(x_adv, cfg, rng);
      x_adv = project_ball(x_adv, batch.inputs, cfg.norm, cfg.radius);
      clip(x_adv, cfg.clip_range);
    }
    for (std::size_t s = 0; s < cfg.steps; ++s) {
      LossAndGrads lg =
          loss_and_grads(params, {x_adv, batch.labels}, GradTarget::kInputs);
      ascent_step(x_adv, batch.inputs, lg.input_grads, cfg);
      x_adv = project_ball(x_adv, batch.inputs, cfg.norm, cfg.radius);
      clip(x_adv, cfg.clip_range);
    }
    if (cfg.restarts == 1) return x_adv;
    const std::vector<double> losses =
        sample_losses(params, {x_adv, batch.labels});
    if (r == 0) {
      best = std::move(x_adv);
      best_loss = losses;
      continue;
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (losses[i] > best_loss[i]) {
        best_loss[i] = losses[i];
        std::copy_n(x_adv.data().begin() + i * d, d,
                    best.data().begin() + i * d);
      }
    }
  }
  return best;
}

Tensor atent_attack(const ModelParams& params, const Batch& batch,
                    const GibbsSamplerConfig& sampler, double radius,
                    std::uint64_t seed, std::uint64_t stream,
                    std::optional<std::pair<double, double>> clip_range) {
  Rng rng = Rng::stream(seed, {kAttackStream, stream, kAtentAttackTag});
  ChainResult chain =
      run_chain(params, batch, sampler, rng, {.keep_samples = false});
  Tensor out =
      project_ball(chain.final_x, batch.inputs, NormKind::kLinf, radius);
  clip(out, clip_range);
  return out;
}

Tensor run_attack(const ModelParams& params, const Batch& batch,
                  const AttackConfig& cfg, std::uint64_t stream) {
  switch (cfg.kind) {
    case AttackKind::kFgsm:
      return fgsm(params, batch, cfg);
    case AttackKind::kPgd:
      return pgd_attack(params, batch, cfg, stream);
    case AttackKind::kAtent:
      return atent_attack(params, batch, cfg.sampler, cfg.radius, cfg.seed,
                          stream, cfg.clip_range);
  }
  throw Error("unknown attack kind");
}

double robust_accuracy(const ModelParams& params, const Tensor& inputs,
                       const Tensor& labels, const AttackConfig& cfg,
                       std::size_t chunk, std::size_t threads) {
  validate(cfg);
  if (inputs.empty()) return 0.0;
  if (chunk == 0) throw Error("robust_accuracy: chunk must be positive");
  const std::size_t n = inputs.dim(0);
  const std::size_t n_chunks = (n + chunk - 1) / chunk;
  std::vector<std::size_t> correct(n_chunks, 0);
  parallel_for(n_chunks, threads, [&](std::size_t c) {
    const std::size_t begin = c * chunk;
    const std::size_t count = std::min(chunk, n - begin);
    Batch b{slice_rows(inputs, begin, count), slice_rows(labels, begin, count)};
    const Tensor adv = run_attack(params, b, cfg, c);
    const auto pred = predict(params, adv);
    const auto truth = label_indices(b.labels);
    for (std::size_t i = 0; i < count; ++i) correct[c] += pred[i] == truth[i];
  });
  std::size_t total = 0;
  for (std::size_t c : correct) total += c;
  return static_cast<double>(total) / static_cast<double>(n);
}

}  // namespace atent
