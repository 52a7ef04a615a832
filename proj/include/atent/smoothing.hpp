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

// Gaussian randomized smoothing: majority vote of f(x + noise).

#ifndef ATENT_SMOOTHING_HPP_
#define ATENT_SMOOTHING_HPP_

#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "atent/models.hpp"
#include "atent/tensor.hpp"

namespace atent {

inline constexpr std::size_t kAbstain = std::numeric_limits<std::size_t>::max();

struct SmoothingConfig {
  double sigma = 0.12;
  std::size_t n_samples = 100;
  double abstain_margin = 0.0;
  std::uint64_t seed = 0;
};

void validate(const SmoothingConfig& cfg);

struct Vote {
  std::size_t prediction = kAbstain;
  std::vector<std::size_t> counts;  // sums to n_samples
};

// Base classifier over a batch of inputs [n x ...] -> class per row.
using Classifier = std::function<std::vector<std::size_t>(const Tensor&)>;

// Votes for one input x (one sample, any shape). `stream` separates RNG
// streams of different points.
Vote smooth_vote(const Classifier& f, std::size_t classes, const Tensor& x,
                 const SmoothingConfig& cfg, std::uint64_t stream = 0);

std::size_t smooth_predict(const ModelParams& params, const Tensor& x,
                           const SmoothingConfig& cfg,
                           std::uint64_t stream = 0);

// Point i uses stream i. An abstention counts as wrong when
// count_abstain_as_error is set and is skipped (left out of the
// denominator) otherwise; all-abstain then yields 0.
double smooth_accuracy(const ModelParams& params, const Tensor& inputs,
                       const Tensor& labels, const SmoothingConfig& cfg,
                       bool count_abstain_as_error = true,
                       std::size_t threads = 0);

}  // namespace atent

#endif  // ATENT_SMOOTHING_HPP_
