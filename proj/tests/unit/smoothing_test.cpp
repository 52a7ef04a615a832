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

#include "atent/smoothing.hpp"

#include <cmath>

#include "test_util.hpp"

namespace atent {
namespace {

TEST(SmoothingTest, ZeroSigmaMatchesPlainPrediction) {
  const ModelParams p = build_mlp({4, 8, 3}, 1);
  const Tensor x = testing::random_tensor({50, 4}, 2);
  const auto plain = predict(p, x);
  SmoothingConfig c;
  c.sigma = 0.0;
  c.n_samples = 7;
  for (std::size_t i = 0; i < 50; ++i) {
    EXPECT_EQ(smooth_predict(p, slice_rows(x, i, 1).reshaped({4}), c, i),
              plain[i]);
  }
}

// Base classifier: class 1 iff x > 0. At x = 0 each noisy vote is a fair
// coin, so a margin of 0.1 abstains unless the top share reaches 0.6.
TEST(SmoothingTest, AbstainsAtTheThresholdPoint) {
  Classifier f = [](const Tensor& b) {
    std::vector<std::size_t> out(b.dim(0));
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = b[i] > 0.0;
    return out;
  };
  SmoothingConfig c;
  c.sigma = 1.0;
  c.n_samples = 1000;
  c.abstain_margin = 0.1;
  std::size_t abstained = 0;
  for (std::uint64_t s = 0; s < 200; ++s) {
    const Vote v = smooth_vote(f, 2, Tensor({1}, {0.0}), c, s);
    EXPECT_EQ(v.counts[0] + v.counts[1], 1000u);
    abstained += v.prediction == kAbstain;
  }
  EXPECT_GE(abstained, 198u);
}

TEST(SmoothingTest, TiesGoToTheLowestClass) {
  Classifier f = [](const Tensor& b) {
    std::vector<std::size_t> out(b.dim(0));
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = 2 - i % 2;
    return out;
  };
  SmoothingConfig c;
  c.sigma = 0.0;
  c.n_samples = 10;
  const Vote v = smooth_vote(f, 3, Tensor({1}), c);
  EXPECT_EQ(v.counts, (std::vector<std::size_t>{0, 5, 5}));
  EXPECT_EQ(v.prediction, 1u);
}

TEST(SmoothingTest, SeededAndValidated) {
  const ModelParams p = build_mlp({4, 8, 2}, 3);
  const Dataset ds{testing::random_tensor({30, 4}, 4),
                   testing::one_hot(std::vector<std::size_t>(30, 0), 2)};
  SmoothingConfig c;
  c.sigma = 0.5;
  c.n_samples = 50;
  c.seed = 9;
  EXPECT_EQ(smooth_accuracy(p, ds.inputs, ds.labels, c),
            smooth_accuracy(p, ds.inputs, ds.labels, c));
  c.sigma = -1.0;
  EXPECT_THROW(validate(c), ConfigError);
  c.sigma = 0.1;
  c.abstain_margin = 0.5;
  EXPECT_THROW(validate(c), ConfigError);
}

}  // namespace
}  // namespace atent
