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

#ifndef ATENT_ATTACKS_HPP_
#define ATENT_ATTACKS_HPP_

#include <cstdint>
#include <optional>
#include <string_view>
#include <utility>

#include "atent/gibbs_sampler.hpp"
#include "atent/models.hpp"
#include "atent/tensor.hpp"

namespace atent {

enum class AttackKind { kFgsm, kPgd, kAtent };

// How a PGD iterate moves before projection.
enum class StepRule {
  kStandard,     // sign(g) for linf, g / ||g||_2 per sample for l2
  kRaw,          // g
  kRegularized,  // g + reg_gamma (x - x'), the inner step of the l2 chain
};

std::string_view to_string(AttackKind kind);

struct AttackConfig {
  AttackKind kind = AttackKind::kPgd;
  NormKind norm = NormKind::kLinf;
  double radius = 0.3;  // may be +inf for an unconstrained ascent
  std::size_t steps = 20;
  double step_size = 0.01;
  std::size_t restarts = 1;
  bool random_start = true;
  std::uint64_t seed = 0;
  StepRule step_rule = StepRule::kStandard;
  double reg_gamma = 0.0;
  // Valid input range; adversarial points are clipped into it.
  std::optional<std::pair<double, double>> clip_range =
      std::pair<double, double>{0.0, 1.0};
  // Chain settings for kAtent. Its noise, step and K are used as given.
  GibbsSamplerConfig sampler;
};

void validate(const AttackConfig& cfg);

// Per-sample projection of x_adv onto {x + d : ||d||_p <= radius}.
Tensor project_ball(const Tensor& x_adv, const Tensor& x, NormKind norm,
                    double radius);

// Per-sample ||x_adv - x||_p, largest over the batch.
double max_perturbation(const Tensor& x_adv, const Tensor& x, NormKind norm);

// x + radius * sign(grad), clipped to cfg.clip_range. Requires linf.
Tensor fgsm(const ModelParams& params, const Batch& batch,
            const AttackConfig& cfg);

// Projected ascent with restarts; each sample keeps its highest-loss
// restart. `stream` separates RNG streams of different batches.
Tensor pgd_attack(const ModelParams& params, const Batch& batch,
                  const AttackConfig& cfg, std::uint64_t stream = 0);

// Final point of a Langevin chain, projected into the linf ball.
Tensor atent_attack(const ModelParams& params, const Batch& batch,
                    const GibbsSamplerConfig& sampler, double radius,
                    std::uint64_t seed, std::uint64_t stream = 0,
                    std::optional<std::pair<double, double>> clip_range =
                        std::pair<double, double>{0.0, 1.0});

// Dispatches on cfg.kind.
Tensor run_attack(const ModelParams& params, const Batch& batch,
                  const AttackConfig& cfg, std::uint64_t stream = 0);

// Fraction still classified correctly after the attack. Work is split into
// fixed chunks of `chunk` samples run on up to `threads` threads; results
// do not depend on the thread count.
double robust_accuracy(const ModelParams& params, const Tensor& inputs,
                       const Tensor& labels, const AttackConfig& cfg,
                       std::size_t chunk = 250, std::size_t threads = 0);

}  // namespace atent

#endif  // ATENT_ATTACKS_HPP_
