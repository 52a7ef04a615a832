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

// Langevin sampling of perturbed inputs X' from the Gibbs measure
//   p(X') ~ exp(L(X') - (gamma/2) ||X' - X||^2)
// around a clean batch X, plus the l-infinity variants.

#ifndef ATENT_GIBBS_SAMPLER_HPP_
#define ATENT_GIBBS_SAMPLER_HPP_

#include <functional>
#include <limits>
#include <optional>
#include <string_view>
#include <vector>

#include "atent/models.hpp"
#include "atent/rng.hpp"
#include "atent/tensor.hpp"

namespace atent {

enum class NormKind { kL2, kLinf };

enum class LinfMode {
  kFinalProjection,    // clamp only the K-th increment
  kPerStepProjection,  // clamp every increment
  kCoordinateSign,     // sign pull on the largest-deviation coordinate
};

std::string_view to_string(NormKind norm);
std::string_view to_string(LinfMode mode);

struct GibbsSamplerConfig {
  double gamma = 1.0;
  double step = 0.01;  // eta'
  std::size_t steps = 10;  // K
  double noise_scale = 0.001;
  double ema = 0.75;  // alpha
  NormKind norm = NormKind::kL2;
  // Std of the initial Gaussian perturbation; unset means 1/gamma.
  std::optional<double> init_radius;
  // Batch losses above this are counted, not rejected.
  double loss_cap = std::numeric_limits<double>::infinity();
  LinfMode linf_mode = LinfMode::kFinalProjection;
  // When set, every chain point is clipped to [first, second]. Off by default.
  std::optional<std::pair<double, double>> clip_range;

  double effective_init_radius() const {
    return init_radius.value_or(1.0 / gamma);
  }
};

// Throws ConfigError naming the offending field.
void validate(const GibbsSamplerConfig& cfg);

struct ChainState {
  Tensor x_prime;
  Tensor x_anchor;
  double ema_loss = 0.0;
  std::size_t step_index = 0;
};

// x + init_radius * N(0, I).
Tensor init_perturbation(const Tensor& x, const GibbsSamplerConfig& cfg,
                         Rng& rng);

// Sign-preserving elementwise clamp to [-1/gamma, 1/gamma].
Tensor project_linf_increment(const Tensor& z, double gamma);

// X' += eta' (g + gamma (X - X')) + sqrt(2 eta') eps N(0, I).
void langevin_step_l2(ChainState& state, const Tensor& grad_x,
                      const GibbsSamplerConfig& cfg, Rng& rng);

// Uses cfg.linf_mode. For kCoordinateSign the pull acts per sample (row) on
// argmax_j |x_j - x'_j|, ties to the lowest index.
void langevin_step_linf(ChainState& state, const Tensor& grad_x,
                        const GibbsSamplerConfig& cfg, Rng& rng);

// Dispatches on cfg.norm, then applies cfg.clip_range.
void langevin_step(ChainState& state, const Tensor& grad_x,
                   const GibbsSamplerConfig& cfg, Rng& rng);

// mu <- (1 - alpha) mu + alpha * loss.
inline double ema_update(double mu, double loss, double alpha) {
  return (1.0 - alpha) * mu + alpha * loss;
}

// Weight on the k-th sample (1-based) in mu after K updates from mu = 0.
double ema_coefficient(std::size_t k, std::size_t steps, double alpha);

struct ChainResult {
  std::vector<Tensor> samples;        // X'^1 .. X'^K
  std::vector<double> sample_losses;  // mean batch loss at each sample
  double ema_loss = 0.0;              // mu after K updates
  Tensor final_x;
  std::size_t loss_cap_hits = 0;
  // Sum_k c_k dL(X'^k)/dw in params order; filled only on request.
  std::vector<Tensor> weight_grad;
};

struct ChainOptions {
  bool keep_samples = true;
  bool accumulate_weight_grad = false;
};

// Initial perturbation, then K Langevin steps with fresh per-sample input
// gradients each step. Costs K+1 forward/backward passes.
ChainResult run_chain(const ModelParams& params, const Batch& batch,
                      const GibbsSamplerConfig& cfg, Rng& rng,
                      ChainOptions options = {});

// Loss and input gradient at x'. Used for toy losses in the oracles.
using InputLossFn = std::function<double(const Tensor& x_prime, Tensor& grad)>;

ChainResult run_chain(const Tensor& x, const InputLossFn& loss_fn,
                      const GibbsSamplerConfig& cfg, Rng& rng,
                      ChainOptions options = {});

}  // namespace atent

#endif  // ATENT_GIBBS_SAMPLER_HPP_
