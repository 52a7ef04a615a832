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

#include <cmath>

#include "atent/attacks.hpp"
#include "atent/oracle.hpp"
#include "test_util.hpp"

namespace atent {
namespace {

GibbsSamplerConfig quiet(double gamma, double step, std::size_t steps) {
  GibbsSamplerConfig c;
  c.gamma = gamma;
  c.step = step;
  c.steps = steps;
  c.noise_scale = 0.0;
  return c;
}

ChainState scalar_state(double x, double xp) {
  return {Tensor({1}, {xp}), Tensor({1}, {x})};
}

TEST(GibbsSamplerTest, ValidateRejectsBadFields) {
  GibbsSamplerConfig c;
  c.gamma = 0.0;
  EXPECT_THROW(validate(c), ConfigError);
  c = {};
  c.ema = 0.0;
  EXPECT_THROW(validate(c), ConfigError);
  c = {};
  c.steps = 0;
  EXPECT_THROW(validate(c), ConfigError);
  c = {};
  c.noise_scale = -1.0;
  EXPECT_THROW(validate(c), ConfigError);
}

TEST(GibbsSamplerTest, L2StepArithmetic) {
  Rng rng(0);
  ChainState s = scalar_state(0.0, 0.0);
  langevin_step_l2(s, Tensor({1}, {2.0}), quiet(1.0, 0.1, 1), rng);
  EXPECT_DOUBLE_EQ(s.x_prime[0], 0.2);
  EXPECT_EQ(s.step_index, 1u);

  ChainState t = scalar_state(1.0, 1.5);
  langevin_step_l2(t, Tensor({1}, {0.0}), quiet(2.0, 0.25, 1), rng);
  EXPECT_DOUBLE_EQ(t.x_prime[0], 1.25);
}

TEST(GibbsSamplerTest, FinalProjectionClampsLastIncrement) {
  Rng rng(0);
  ChainState s{Tensor({1, 2}), Tensor({1, 2})};
  GibbsSamplerConfig c = quiet(10.0, 1.0, 1);
  c.norm = NormKind::kLinf;
  langevin_step_linf(s, Tensor({1, 2}, {0.05, -0.5}), c, rng);
  EXPECT_DOUBLE_EQ(s.x_prime[0], 0.05);
  EXPECT_DOUBLE_EQ(s.x_prime[1], -0.1);
}

TEST(GibbsSamplerTest, FinalProjectionLeavesEarlierStepsRaw) {
  Rng rng(0);
  ChainState s{Tensor({1, 1}), Tensor({1, 1})};
  GibbsSamplerConfig c = quiet(10.0, 1.0, 2);
  c.norm = NormKind::kLinf;
  langevin_step_linf(s, Tensor({1, 1}, {0.5}), c, rng);
  EXPECT_DOUBLE_EQ(s.x_prime[0], 0.5);
  langevin_step_linf(s, Tensor({1, 1}, {0.5}), c, rng);
  EXPECT_DOUBLE_EQ(s.x_prime[0], 0.6);
}

TEST(GibbsSamplerTest, CoordinateSignPicksLargestDeviation) {
  Rng rng(0);
  ChainState s{Tensor({1, 2}, {0.0, 0.0}), Tensor({1, 2}, {0.3, -0.7})};
  GibbsSamplerConfig c = quiet(2.0, 1.0, 1);
  c.norm = NormKind::kLinf;
  c.linf_mode = LinfMode::kCoordinateSign;
  langevin_step_linf(s, Tensor({1, 2}), c, rng);
  EXPECT_DOUBLE_EQ(s.x_prime[0], 0.0);
  EXPECT_DOUBLE_EQ(s.x_prime[1], -2.0);
}

TEST(GibbsSamplerTest, CoordinateSignTiesGoToLowestIndex) {
  Rng rng(0);
  ChainState s{Tensor({1, 3}), Tensor({1, 3}, {0.5, -0.5, 0.5})};
  GibbsSamplerConfig c = quiet(1.0, 1.0, 1);
  c.norm = NormKind::kLinf;
  c.linf_mode = LinfMode::kCoordinateSign;
  langevin_step_linf(s, Tensor({1, 3}), c, rng);
  EXPECT_EQ(s.x_prime.values(), (std::vector<double>{1.0, 0.0, 0.0}));
}

TEST(GibbsSamplerTest, PerStepProjectionIsIdentityInsideTheBox) {
  Rng r1(0), r2(0);
  GibbsSamplerConfig per = quiet(1e6, 1e-3, 3);
  per.norm = NormKind::kLinf;
  per.linf_mode = LinfMode::kPerStepProjection;
  GibbsSamplerConfig raw = per;
  raw.gamma = 1e-9;
  const Tensor g = testing::random_tensor({2, 3}, 1, 1e-4);
  ChainState a{Tensor({2, 3}), Tensor({2, 3})}, b = a;
  for (int k = 0; k < 3; ++k) {
    langevin_step_linf(a, g, per, r1);
    langevin_step_linf(b, g, raw, r2);
  }
  EXPECT_EQ(a.x_prime, b.x_prime);
}

TEST(GibbsSamplerTest, ProjectLinfIncrementExamples) {
  const Tensor out = project_linf_increment(Tensor({3}, {0.05, 0.5, -0.5}), 10);
  EXPECT_DOUBLE_EQ(out[0], 0.05);
  EXPECT_DOUBLE_EQ(out[1], 0.1);
  EXPECT_DOUBLE_EQ(out[2], -0.1);
}

TEST(GibbsSamplerTest, ProjectLinfIncrementProperties) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    const double gamma = 0.5 + 20.0 * rng.uniform();
    const Tensor z = testing::random_tensor({40}, seed, 0.3);
    const Tensor p = project_linf_increment(z, gamma);
    EXPECT_LE(linf_norm(p.data()), 1.0 / gamma + 1e-12);
    // Agrees with the exact projection onto the box around zero.
    EXPECT_EQ(p, project_ball(z, Tensor(z.shape()), NormKind::kLinf,
                              1.0 / gamma));
    if (linf_norm(z.data()) <= 1.0 / gamma) EXPECT_EQ(p, z);
  }
}

TEST(GibbsSamplerTest, InitPerturbationRadius) {
  GibbsSamplerConfig c;
  c.init_radius = 0.0;
  Rng rng(1);
  const Tensor x = testing::random_tensor({10}, 2);
  EXPECT_EQ(init_perturbation(x, c, rng), x);

  c.init_radius = 0.25;
  Rng a(3), b(3);
  EXPECT_EQ(init_perturbation(x, c, a), init_perturbation(x, c, b));

  const Tensor zero({100000});
  Rng big(4);
  const Tensor d = init_perturbation(zero, c, big);
  double mean_abs = 0.0;
  for (double v : d.data()) mean_abs += std::abs(v);
  mean_abs /= 1e5;
  const double target = 0.25 * std::sqrt(2.0 / M_PI);
  EXPECT_NEAR(mean_abs, target, 0.05 * target);
}

TEST(GibbsSamplerTest, DefaultInitRadiusIsInverseGamma) {
  GibbsSamplerConfig c;
  c.gamma = 4.0;
  EXPECT_DOUBLE_EQ(c.effective_init_radius(), 0.25);
}

TEST(GibbsSamplerTest, EmaCoefficientsSumToGeometricSeries) {
  for (double alpha : {0.1, 0.5, 0.9, 1.0}) {
    double s = 0.0;
    for (std::size_t k = 1; k <= 7; ++k) s += ema_coefficient(k, 7, alpha);
    EXPECT_NEAR(s, 1.0 - std::pow(1.0 - alpha, 7.0), 1e-14);
  }
  EXPECT_THROW(ema_coefficient(0, 7, 0.5), Error);
}

InputLossFn constant_loss(double c) {
  return [c](const Tensor& x, Tensor& g) {
    g = Tensor(x.shape());
    return c;
  };
}

TEST(GibbsSamplerTest, EmaOfConstantLoss) {
  for (double alpha : {0.3, 0.75, 1.0}) {
    GibbsSamplerConfig c;
    c.ema = alpha;
    c.steps = 6;
    Rng rng(0);
    const auto r = run_chain(Tensor({3}), constant_loss(2.5), c, rng);
    EXPECT_NEAR(r.ema_loss, 2.5 * (1.0 - std::pow(1.0 - alpha, 6.0)), 1e-13);
    EXPECT_EQ(r.samples.size(), 6u);
    EXPECT_GE(r.ema_loss, 0.0);
  }
}

TEST(GibbsSamplerTest, AlphaOneKeepsLastLoss) {
  GibbsSamplerConfig c;
  c.ema = 1.0;
  c.steps = 4;
  Rng rng(0);
  InputLossFn f = [](const Tensor& x, Tensor& g) {
    g = Tensor(x.shape(), std::vector<double>(x.size(), 1.0));
    return x[0] * x[0];
  };
  const auto r = run_chain(Tensor({1}), f, c, rng);
  EXPECT_DOUBLE_EQ(r.ema_loss, r.sample_losses.back());
}

TEST(GibbsSamplerTest, LossCapIsCountedNotEnforced) {
  GibbsSamplerConfig c;
  c.loss_cap = 1.0;
  c.steps = 3;
  Rng rng(0);
  const auto r = run_chain(Tensor({2}), constant_loss(2.0), c, rng);
  EXPECT_EQ(r.loss_cap_hits, 3u);
  EXPECT_EQ(r.sample_losses.size(), 3u);
}

// K = 1, noise off: a hand-computed chain on a linear toy loss.
TEST(GibbsSamplerTest, SingleStepToyChainByHand) {
  GibbsSamplerConfig c = quiet(2.0, 0.1, 1);
  c.init_radius = 0.0;
  c.ema = 0.5;
  Rng rng(0);
  InputLossFn f = [](const Tensor& x, Tensor& g) {
    g = Tensor({1}, {3.0});
    return 3.0 * x[0];
  };
  const auto r = run_chain(Tensor({1}, {1.0}), f, c, rng);
  // x' = 1 + 0.1 * (3 + 2 * (1 - 1)) = 1.3; mu = 0.5 * 3.9.
  EXPECT_DOUBLE_EQ(r.final_x[0], 1.3);
  EXPECT_DOUBLE_EQ(r.ema_loss, 0.5 * 3.0 * 1.3);
}

TEST(GibbsSamplerTest, NoiselessStepIsRegularizedAscentBitwise) {
  const ModelParams p = build_mlp({6, 8, 3}, 2);
  const Batch b = testing::random_batch(5, 6, 3, 3);
  GibbsSamplerConfig c = quiet(1.7, 0.05, 1);
  c.ema = 1.0;
  Rng rng(9);
  const Tensor start = init_perturbation(b.inputs, c, rng);
  Rng rng2(9);
  const auto r = run_chain(p, b, c, rng2);

  const Tensor g =
      loss_and_grads(p, {start, b.labels}, GradTarget::kInputs).input_grads;
  Tensor expect = start;
  for (std::size_t i = 0; i < expect.size(); ++i) {
    expect[i] += c.step * (g[i] + c.gamma * (b.inputs[i] - start[i]));
  }
  EXPECT_EQ(r.final_x, expect);
}

TEST(GibbsSamplerTest, ChainIsSeeded) {
  const ModelParams p = build_mlp({4, 5, 2}, 2);
  const Batch b = testing::random_batch(3, 4, 2, 3);
  GibbsSamplerConfig c;
  c.noise_scale = 0.5;
  Rng a(11), bb(11), d(12);
  const auto r1 = run_chain(p, b, c, a), r2 = run_chain(p, b, c, bb);
  const auto r3 = run_chain(p, b, c, d);
  EXPECT_EQ(r1.samples, r2.samples);
  EXPECT_EQ(r1.ema_loss, r2.ema_loss);
  EXPECT_NE(r1.final_x, r3.final_x);
}

double chain_variance(double noise, std::uint64_t seed) {
  GibbsSamplerConfig c;
  c.gamma = 4.0;
  c.step = 0.01;
  c.noise_scale = noise;
  c.steps = 60000;
  c.init_radius = 0.0;
  c.ema = 1.0;
  Rng rng(seed);
  const auto r = run_chain(Tensor({1}), constant_loss(0.0), c, rng);
  double m = 0.0, m2 = 0.0;
  std::size_t n = 0;
  for (std::size_t k = 12000; k < r.samples.size(); k += 10) {
    const double v = r.samples[k][0];
    m += v;
    m2 += v * v;
    ++n;
  }
  m /= static_cast<double>(n);
  return m2 / static_cast<double>(n) - m * m;
}

TEST(GibbsSamplerTest, TemperingScalesVariance) {
  const double base = chain_variance(1.0, 5);
  EXPECT_NEAR(base, 0.25, 0.025);
  const double tempered = chain_variance(0.5, 5);
  EXPECT_NEAR(tempered, 0.25 * 0.25, 0.1 * 0.0625);
  const double cold = chain_variance(0.001, 5);
  // Near-deterministic: variance at most 1e-4 of the unit-noise variance.
  EXPECT_LE(cold, 1e-4 * base);
}

TEST(GibbsSamplerTest, OuterGradientMatchesFiniteDifferences) {
  const ModelParams p = build_mlp({4, 6, 3}, 12);
  const Batch b = testing::random_batch(5, 4, 3, 13);
  GibbsSamplerConfig c;
  c.steps = 4;
  c.ema = 0.6;
  c.noise_scale = 0.1;
  Rng rng(14);
  const auto r = run_chain(p, b, c, rng, {.keep_samples = true,
                                          .accumulate_weight_grad = true});
  for (std::size_t w = 0; w < p.weights.size(); ++w) {
    ModelParams q = p;
    TensorFn f = [&](const Tensor& v) {
      q.weights[w].value = v;
      double s = 0.0;
      for (std::size_t k = 1; k <= c.steps; ++k) {
        s += ema_coefficient(k, c.steps, c.ema) *
             loss_and_grads(q, {r.samples[k - 1], b.labels},
                            GradTarget::kWeights)
                 .loss;
      }
      return s;
    };
    EXPECT_LE(relative_error(r.weight_grad[w].data(),
                             finite_difference_grad(f, p.weights[w].value)
                                 .data()),
              1e-4);
  }
}

}  // namespace
}  // namespace atent
