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

#include "atent/models.hpp"

#include <cmath>

#include "atent/oracle.hpp"
#include "test_util.hpp"

namespace atent {
namespace {

TEST(RngTest, SameSeedSameStream) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
  Rng s1 = Rng::stream(7, {kAttackStream, 1}), s2 = Rng::stream(7, {kAttackStream, 1});
  Rng s3 = Rng::stream(7, {kAttackStream, 2});
  const auto v1 = s1.next_u64();
  EXPECT_EQ(v1, s2.next_u64());
  EXPECT_NE(v1, s3.next_u64());
}

TEST(RngTest, NormalMoments) {
  Rng rng(3);
  double s = 0.0, s2 = 0.0, abs = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double v = rng.normal();
    s += v;
    s2 += v * v;
    abs += std::abs(v);
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.01);
  EXPECT_NEAR(abs / n, std::sqrt(2.0 / M_PI), 0.01);
}

TEST(RngTest, BelowIsInRangeAndCoversIt) {
  Rng rng(5);
  std::vector<int> seen(7, 0);
  for (int i = 0; i < 7000; ++i) {
    const auto v = rng.below(7);
    ASSERT_LT(v, 7u);
    ++seen[v];
  }
  for (int c : seen) EXPECT_GT(c, 800);
}

TEST(ModelsTest, MlpIsDeterministicUnderSeed) {
  EXPECT_TRUE(testing::bitwise_equal(build_mlp({2, 16, 16, 2}, 9),
                                     build_mlp({2, 16, 16, 2}, 9)));
  EXPECT_FALSE(testing::bitwise_equal(build_mlp({2, 16, 16, 2}, 9),
                                      build_mlp({2, 16, 16, 2}, 10)));
}

TEST(ModelsTest, ParameterCountFromDescriptor) {
  const ModelParams p = build_mlp({784, 64, 64, 2}, 0);
  EXPECT_EQ(p.parameter_count(), 54530u);
  EXPECT_EQ(parameter_count(p.arch), 54530u);
  for (std::size_t i = 0; i < p.weights.size(); ++i) {
    EXPECT_EQ(p.weights[i].value.shape(), expected_weights(p.arch)[i].second);
  }
}

TEST(ModelsTest, RejectsBadWidths) {
  EXPECT_THROW(build_mlp({784}, 0), Error);
  EXPECT_THROW(build_mlp({784, 0, 2}, 0), Error);
}

TEST(ModelsTest, InitialLossNearLn2OnBalancedData) {
  double total = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    ModelParams p = build_mlp({20, 32, 32, 2}, seed);
    Batch b = testing::random_batch(200, 20, 2, 100 + seed);
    const double l = loss_and_grads(p, b, GradTarget::kWeights).loss;
    EXPECT_NEAR(l, std::log(2.0), 0.6) << "seed " << seed;
    total += l;
  }
  EXPECT_NEAR(total / 20.0, std::log(2.0), 0.2);
}

TEST(ModelsTest, ZeroImageGivesBiasPathLogits) {
  ModelParams p = build_mlp({4, 3, 2}, 1);
  for (auto& w : p.weights) {
    if (w.value.rank() == 1) {
      for (std::size_t i = 0; i < w.value.size(); ++i) w.value[i] = 0.1 * (i + 1);
    }
  }
  const Tensor logits = forward_logits(p, Tensor({1, 4}));
  // h = relu(b1) = [0.1, 0.2, 0.3]; logits = h W2 + b2.
  const Tensor& w2 = p.weights[2].value;
  for (std::size_t k = 0; k < 2; ++k) {
    const double expect = 0.1 * w2[0 * 2 + k] + 0.2 * w2[1 * 2 + k] +
                          0.3 * w2[2 * 2 + k] + 0.1 * (k + 1);
    EXPECT_NEAR(logits[k], expect, 1e-15);
  }
}

TEST(ModelsTest, MnistShapedOutputs) {
  ModelParams mlp = build_mlp({784, 16, 10}, 2);
  EXPECT_EQ(forward_logits(mlp, Tensor({3, 28, 28})).shape(), (Shape{3, 10}));
  ModelParams cnn = build_small_cnn({1, 28, 28}, {4, 8}, {16, 10}, 2);
  EXPECT_EQ(forward_logits(cnn, Tensor({3, 1, 28, 28})).shape(),
            (Shape{3, 10}));
  EXPECT_TRUE(testing::bitwise_equal(
      cnn, build_small_cnn({1, 28, 28}, {4, 8}, {16, 10}, 2)));
}

TEST(ModelsTest, HugeMarginGivesZeroLossAndGrads) {
  ModelParams p = build_mlp({1, 2}, 0);
  p.weights[0].value = Tensor({1, 2}, {0.0, 0.0});
  p.weights[1].value = Tensor({2}, {800.0, -800.0});
  Batch b{Tensor({2, 1}, {0.3, 0.7}), testing::one_hot({0, 0}, 2)};
  const auto lg = loss_and_grads(p, b, GradTarget::kBoth);
  EXPECT_LT(lg.loss, 1e-300);
  for (const auto& g : lg.weight_grads) {
    for (double v : g.data()) EXPECT_EQ(v, 0.0);
  }
}

TEST(ModelsTest, WeightAndInputGradsMatchFiniteDifferences) {
  const ModelParams p = build_mlp({5, 7, 3}, 4);
  const Batch b = testing::random_batch(6, 5, 3, 5);
  const auto lg = loss_and_grads(p, b, GradTarget::kBoth);
  for (std::size_t i = 0; i < p.weights.size(); ++i) {
    ModelParams q = p;
    TensorFn f = [&](const Tensor& w) {
      q.weights[i].value = w;
      return loss_and_grads(q, b, GradTarget::kWeights).loss;
    };
    EXPECT_LE(relative_error(lg.weight_grads[i].data(),
                             finite_difference_grad(f, p.weights[i].value)
                                 .data()),
              1e-4);
  }
  TensorFn fx = [&](const Tensor& x) {
    double s = 0.0;
    for (double l : sample_losses(p, {x, b.labels})) s += l;
    return s;
  };
  EXPECT_LE(relative_error(lg.input_grads.data(),
                           finite_difference_grad(fx, b.inputs).data()),
            1e-4);
}

TEST(ModelsTest, LossIsTheSameForEveryGradTarget) {
  const ModelParams p = build_mlp({5, 7, 3}, 6);
  const Batch b = testing::random_batch(6, 5, 3, 7);
  const double w = loss_and_grads(p, b, GradTarget::kWeights).loss;
  EXPECT_NEAR(loss_and_grads(p, b, GradTarget::kBoth).loss, w, 1e-12);
  EXPECT_NEAR(loss_and_grads(p, b, GradTarget::kInputs).loss, w, 1e-12);
}

TEST(ModelsTest, AccuracyComplementsOnBinaryTasks) {
  const ModelParams p = build_mlp({3, 8, 2}, 8);
  const Batch b = testing::random_batch(50, 3, 2, 9);
  Tensor flipped = b.labels;
  for (std::size_t i = 0; i < 50; ++i) {
    std::swap(flipped[2 * i], flipped[2 * i + 1]);
  }
  EXPECT_DOUBLE_EQ(accuracy(p, b.inputs, b.labels) +
                       accuracy(p, b.inputs, flipped),
                   1.0);
}

TEST(ModelsTest, ArgmaxTiesGoToLowestIndex) {
  EXPECT_EQ(argmax_rows(Tensor({2, 3}, {1, 1, 0, 0, 2, 2})),
            (std::vector<std::size_t>{0, 1}));
}

TEST(ModelsTest, FlatWeightsRoundTrip) {
  ModelParams p = build_mlp({3, 4, 2}, 1);
  const ModelParams orig = p;
  auto flat = flatten_weights(p);
  EXPECT_EQ(flat.size(), p.parameter_count());
  for (double& v : flat) v += 1.0;
  assign_weights(p, flat);
  EXPECT_NEAR(testing::weight_distance(p, orig),
              std::sqrt(static_cast<double>(flat.size())), 1e-12);
}

}  // namespace
}  // namespace atent
