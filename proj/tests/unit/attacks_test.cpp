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

#include <cmath>
#include <limits>

#include "test_util.hpp"

namespace atent {
namespace {

// z0 = a x, z1 = -a x: for label 0 the loss grows as x shrinks.
ModelParams logistic(double a) {
  ModelParams p = build_mlp({1, 2}, 0);
  p.weights[0].value = Tensor({1, 2}, {a, -a});
  p.weights[1].value = Tensor({2}, {0.0, 0.0});
  return p;
}

AttackConfig linf(double radius, std::size_t steps, double step_size) {
  AttackConfig c;
  c.radius = radius;
  c.steps = steps;
  c.step_size = step_size;
  c.seed = 3;
  return c;
}

TEST(AttacksTest, FgsmOnLogisticModel) {
  const Batch b{Tensor({2, 1}, {0.5, 0.5}), testing::one_hot({0, 1}, 2)};
  AttackConfig c = linf(0.1, 1, 0.1);
  c.kind = AttackKind::kFgsm;
  const Tensor adv = fgsm(logistic(2.0), b, c);
  EXPECT_DOUBLE_EQ(adv[0], 0.4);
  EXPECT_DOUBLE_EQ(adv[1], 0.6);
}

TEST(AttacksTest, FgsmIsOneStepPgdWithoutRandomStart) {
  const ModelParams p = build_mlp({10, 16, 3}, 1);
  const Batch b = testing::random_batch(20, 10, 3, 2);
  Batch in01 = b;
  for (double& v : in01.inputs.data()) v = 0.5 + 0.25 * std::tanh(v);
  AttackConfig c = linf(0.05, 1, 0.05);
  c.random_start = false;
  EXPECT_EQ(fgsm(p, in01, c), pgd_attack(p, in01, c));
}

TEST(AttacksTest, AllAttacksStayInTheBallAndRange) {
  const ModelParams p = build_mlp({12, 16, 2}, 4);
  Batch b = testing::random_batch(30, 12, 2, 5);
  for (double& v : b.inputs.data()) v = 0.5 + 0.4 * std::tanh(v);
  for (AttackKind kind :
       {AttackKind::kFgsm, AttackKind::kPgd, AttackKind::kAtent}) {
    AttackConfig c = linf(0.1, 10, 0.05);
    c.kind = kind;
    c.sampler.gamma = 10.0;
    c.sampler.step = 0.5;
    c.sampler.norm = NormKind::kLinf;
    c.restarts = 2;
    const Tensor adv = run_attack(p, b, c);
    EXPECT_LE(max_perturbation(adv, b.inputs, NormKind::kLinf), 0.1 + 1e-9)
        << to_string(kind);
    for (double v : adv.data()) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
  AttackConfig l2 = linf(0.5, 10, 0.2);
  l2.norm = NormKind::kL2;
  const Tensor adv = pgd_attack(p, b, l2);
  EXPECT_LE(max_perturbation(adv, b.inputs, NormKind::kL2), 0.5 + 1e-9);
}

TEST(AttacksTest, ZeroRadiusIsIdentity) {
  const ModelParams p = build_mlp({6, 8, 2}, 6);
  Batch b = testing::random_batch(10, 6, 2, 7);
  for (double& v : b.inputs.data()) v = 0.5 + 0.4 * std::tanh(v);
  EXPECT_EQ(pgd_attack(p, b, linf(0.0, 5, 0.1)), b.inputs);
}

TEST(AttacksTest, ZeroRadiusRobustAccuracyIsNaturalAccuracy) {
  const ModelParams p = build_mlp({6, 8, 2}, 6);
  Batch b = testing::random_batch(60, 6, 2, 8);
  for (double& v : b.inputs.data()) v = 0.5 + 0.4 * std::tanh(v);
  for (AttackKind k : {AttackKind::kFgsm, AttackKind::kPgd}) {
    AttackConfig c = linf(0.0, 5, 0.1);
    c.kind = k;
    EXPECT_EQ(robust_accuracy(p, b.inputs, b.labels, c),
              accuracy(p, b.inputs, b.labels));
  }
}

TEST(AttacksTest, WorstRestartIsKeptPerSample) {
  const ModelParams p = build_mlp({6, 8, 2}, 8);
  Batch b = testing::random_batch(40, 6, 2, 9);
  for (double& v : b.inputs.data()) v = 0.5 + 0.4 * std::tanh(v);
  AttackConfig one = linf(0.2, 2, 0.02);
  AttackConfig many = one;
  many.restarts = 4;
  const auto l1 = sample_losses(p, {pgd_attack(p, b, one), b.labels});
  const auto l4 = sample_losses(p, {pgd_attack(p, b, many), b.labels});
  for (std::size_t i = 0; i < l1.size(); ++i) EXPECT_GE(l4[i], l1[i]);
  EXPECT_EQ(pgd_attack(p, b, many), pgd_attack(p, b, many));
}

TEST(AttacksTest, RobustAccuracyFallsWithRadiusOnALinearModel) {
  const ModelParams p = build_mlp({8, 2}, 10);
  Batch b = testing::random_batch(200, 8, 2, 11);
  for (double& v : b.inputs.data()) v = 0.5 + 0.2 * std::tanh(v);
  const auto pred = predict(p, b.inputs);
  b.labels = testing::one_hot(pred, 2);  // natural accuracy 1
  double last = 1.0;
  for (double r : {0.0, 0.02, 0.05, 0.1, 0.2, 0.5}) {
    const double acc = robust_accuracy(p, b.inputs, b.labels, linf(r, 10, r / 4 + 1e-3));
    EXPECT_LE(acc, last + 1e-12) << "radius " << r;
    last = acc;
  }
  EXPECT_LT(last, 0.5);
}

TEST(AttacksTest, RegularizedAscentIncreasesThePenalizedLoss) {
  const ModelParams p = build_mlp({5, 16, 2}, 12);
  const Batch b = testing::random_batch(8, 5, 2, 13);
  const double gamma = 2.0;
  auto objective = [&](const Tensor& xp) {
    double s = 0.0;
    for (double l : sample_losses(p, {xp, b.labels})) s += l;
    double d2 = 0.0;
    for (std::size_t i = 0; i < xp.size(); ++i) {
      d2 += (xp[i] - b.inputs[i]) * (xp[i] - b.inputs[i]);
    }
    return s - 0.5 * gamma * d2;
  };
  AttackConfig c;
  c.norm = NormKind::kL2;
  c.radius = std::numeric_limits<double>::infinity();
  c.step_rule = StepRule::kRegularized;
  c.reg_gamma = gamma;
  c.random_start = false;
  c.clip_range.reset();
  c.step_size = 0.01;
  double prev = objective(b.inputs);
  for (std::size_t s = 1; s <= 10; ++s) {
    c.steps = s;
    const double cur = objective(pgd_attack(p, b, c));
    EXPECT_GE(cur, prev - 1e-12) << "step " << s;
    prev = cur;
  }
}

TEST(AttacksTest, ValidationRejectsBadConfigs) {
  AttackConfig c;
  c.radius = -1.0;
  EXPECT_THROW(validate(c), ConfigError);
  c = AttackConfig{};
  c.restarts = 0;
  EXPECT_THROW(validate(c), ConfigError);
  c = AttackConfig{};
  c.kind = AttackKind::kFgsm;
  c.norm = NormKind::kL2;
  EXPECT_THROW(validate(c), ConfigError);
}

}  // namespace
}  // namespace atent
