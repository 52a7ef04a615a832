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

#include "atent/gibbs_sampler.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace atent {

namespace {

void check_pair(const ChainState& state, const Tensor& grad_x) {
  if (state.x_prime.shape() != state.x_anchor.shape() ||
      grad_x.shape() != state.x_prime.shape()) {
    throw ShapeError("langevin step: x', x and grad shapes differ");
  }
}

// One sample per row for rank >= 2, a single sample for rank 1.
std::size_t sample_width(const Tensor& t) {
  return t.rank() >= 2 ? t.row_size() : t.size();
}

double signum(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

void add_noise(std::span<double> inc, const GibbsSamplerConfig& cfg,
               Rng& rng) {
  if (cfg.noise_scale == 0.0) return;
  const double s = std::sqrt(2.0 * cfg.step) * cfg.noise_scale;
  for (double& v : inc) v += s * rng.normal();
}

void finish_step(ChainState& state, const std::vector<double>& inc) {
  auto xp = state.x_prime.data();
  for (std::size_t i = 0; i < xp.size(); ++i) xp[i] += inc[i];
  require_finite(state.x_prime, "langevin step");
  ++state.step_index;
}

}  // namespace

std::string_view to_string(NormKind norm) {
  return norm == NormKind::kL2 ? "l2" : "linf";
}

std::string_view to_string(LinfMode mode) {
  switch (mode) {
    case LinfMode::kFinalProjection:
      return "final_projection";
    case LinfMode::kPerStepProjection:
      return "per_step_projection";
    case LinfMode::kCoordinateSign:
      return "coordinate_sign";
  }
  return "?";
}

void validate(const GibbsSamplerConfig& cfg) {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (!(cfg.gamma > 0.0) || !std::isfinite(cfg.gamma)) {
    fail("sampler.gamma must be a positive finite number");
  }
  if (!(cfg.step > 0.0) || !std::isfinite(cfg.step)) {
    fail("sampler.step must be a positive finite number");
  }
  if (cfg.steps < 1) fail("sampler.steps must be >= 1");
  if (!(cfg.noise_scale >= 0.0) || !std::isfinite(cfg.noise_scale)) {
    fail("sampler.noise_scale must be >= 0");
  }
  if (!(cfg.ema > 0.0 && cfg.ema <= 1.0)) fail("sampler.ema must be in (0, 1]");
  if (cfg.init_radius &&
      (!(*cfg.init_radius >= 0.0) || !std::isfinite(*cfg.init_radius))) {
    fail("sampler.init_radius must be >= 0");
  }
  if (std::isnan(cfg.loss_cap) || cfg.loss_cap < 0.0) {
    fail("sampler.loss_cap must be >= 0");
  }
  if (cfg.clip_range && !(cfg.clip_range->first < cfg.clip_range->second)) {
    fail("sampler.clip_range must satisfy min < max");
  }
}

Tensor init_perturbation(const Tensor& x, const GibbsSamplerConfig& cfg,
                         Rng& rng) {
  Tensor out = x;
  const double r = cfg.effective_init_radius();
  if (r == 0.0) return out;
  for (double& v : out.data()) v += r * rng.normal();
  return out;
}

Tensor project_linf_increment(const Tensor& z, double gamma) {
  if (!(gamma > 0.0)) throw Error("project_linf_increment needs gamma > 0");
  const double bound = 1.0 / gamma;
  Tensor out = z;
  for (double& v : out.data()) v = std::clamp(v, -bound, bound);
  return out;
}

void langevin_step_l2(ChainState& state, const Tensor& grad_x,
                      const GibbsSamplerConfig& cfg, Rng& rng) {
  check_pair(state, grad_x);
  const auto xp = state.x_prime.data();
  const auto x = state.x_anchor.data();
  const auto g = grad_x.data();
  std::vector<double> inc(xp.size());
  for (std::size_t i = 0; i < inc.size(); ++i) {
    inc[i] = cfg.step * (g[i] + cfg.gamma * (x[i] - xp[i]));
  }
  add_noise(inc, cfg, rng);
  finish_step(state, inc);
}

void langevin_step_linf(ChainState& state, const Tensor& grad_x,
                        const GibbsSamplerConfig& cfg, Rng& rng) {
  check_pair(state, grad_x);
  const auto xp = state.x_prime.data();
  const auto x = state.x_anchor.data();
  const auto g = grad_x.data();
  std::vector<double> inc(xp.size());

  if (cfg.linf_mode == LinfMode::kCoordinateSign) {
    const std::size_t width = sample_width(state.x_prime);
    for (std::size_t row = 0; row < inc.size(); row += width) {
      std::size_t best = row;
      for (std::size_t j = row + 1; j < row + width; ++j) {
        if (std::abs(x[j] - xp[j]) > std::abs(x[best] - xp[best])) best = j;
      }
      for (std::size_t j = row; j < row + width; ++j) {
        double pull = j == best ? cfg.gamma * signum(x[j] - xp[j]) : 0.0;
        inc[j] = cfg.step * (g[j] + pull);
      }
    }
    add_noise(inc, cfg, rng);
    finish_step(state, inc);
    return;
  }

  for (std::size_t i = 0; i < inc.size(); ++i) inc[i] = cfg.step * g[i];
  add_noise(inc, cfg, rng);
  const bool last = state.step_index + 1 == cfg.steps;
  if (cfg.linf_mode == LinfMode::kPerStepProjection || last) {
    const double bound = 1.0 / cfg.gamma;
    for (double& v : inc) v = std::clamp(v, -bound, bound);
  }
  finish_step(state, inc);
}

void langevin_step(ChainState& state, const Tensor& grad_x,
                   const GibbsSamplerConfig& cfg, Rng& rng) {
  if (cfg.norm == NormKind::kL2) {
    langevin_step_l2(state, grad_x, cfg, rng);
  } else {
    langevin_step_linf(state, grad_x, cfg, rng);
  }
  if (cfg.clip_range) {
    for (double& v : state.x_prime.data()) {
      v = std::clamp(v, cfg.clip_range->first, cfg.clip_range->second);
    }
  }
}

double ema_coefficient(std::size_t k, std::size_t steps, double alpha) {
  if (k < 1 || k > steps) throw Error("ema_coefficient: k out of range");
  return alpha * std::pow(1.0 - alpha, static_cast<double>(steps - k));
}

ChainResult run_chain(const ModelParams& params, const Batch& batch,
                      const GibbsSamplerConfig& cfg, Rng& rng,
                      ChainOptions options) {
  validate(cfg);
  validate(batch);
  ChainState state{init_perturbation(batch.inputs, cfg, rng), batch.inputs};
  if (cfg.clip_range) {
    for (double& v : state.x_prime.data()) {
      v = std::clamp(v, cfg.clip_range->first, cfg.clip_range->second);
    }
  }
  ChainResult out;
  const GradTarget both = options.accumulate_weight_grad ? GradTarget::kBoth
                                                         : GradTarget::kInputs;
  for (std::size_t k = 0; k <= cfg.steps; ++k) {
    // Pass k reads X'^k: its loss feeds mu (k >= 1) and its input gradient
    // drives the next step (k < K).
    GradTarget target = GradTarget::kInputs;
    if (k == cfg.steps) {
      target = options.accumulate_weight_grad ? GradTarget::kWeights
                                              : GradTarget::kInputs;
    } else if (k > 0) {
      target = both;
    }
    LossAndGrads lg =
        loss_and_grads(params, {state.x_prime, batch.labels}, target);
    if (k > 0) {
      out.sample_losses.push_back(lg.loss);
      state.ema_loss = ema_update(state.ema_loss, lg.loss, cfg.ema);
      if (lg.loss > cfg.loss_cap) ++out.loss_cap_hits;
      if (options.accumulate_weight_grad) {
        const double c = ema_coefficient(k, cfg.steps, cfg.ema);
        if (out.weight_grad.empty()) {
          for (const Tensor& g : lg.weight_grads) {
            out.weight_grad.push_back(Tensor::zeros(g.shape()));
          }
        }
        for (std::size_t p = 0; p < lg.weight_grads.size(); ++p) {
          auto acc = out.weight_grad[p].data();
          const auto g = lg.weight_grads[p].data();
          for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += c * g[i];
        }
      }
    }
    if (k == cfg.steps) break;
    langevin_step(state, lg.input_grads, cfg, rng);
    if (options.keep_samples) out.samples.push_back(state.x_prime);
  }
  out.ema_loss = state.ema_loss;
  out.final_x = std::move(state.x_prime);
  return out;
}

ChainResult run_chain(const Tensor& x, const InputLossFn& loss_fn,
                      const GibbsSamplerConfig& cfg, Rng& rng,
                      ChainOptions options) {
  validate(cfg);
  ChainState state{init_perturbation(x, cfg, rng), x};
  ChainResult out;
  Tensor grad(x.shape());
  for (std::size_t k = 0; k <= cfg.steps; ++k) {
    const double loss = loss_fn(state.x_prime, grad);
    if (!std::isfinite(loss)) throw NonFiniteError("chain loss is not finite");
    if (k > 0) {
      out.sample_losses.push_back(loss);
      state.ema_loss = ema_update(state.ema_loss, loss, cfg.ema);
      if (loss > cfg.loss_cap) ++out.loss_cap_hits;
    }
    if (k == cfg.steps) break;
    langevin_step(state, grad, cfg, rng);
    if (options.keep_samples) out.samples.push_back(state.x_prime);
  }
  out.ema_loss = state.ema_loss;
  out.final_x = std::move(state.x_prime);
  return out;
}

}  // namespace atent
