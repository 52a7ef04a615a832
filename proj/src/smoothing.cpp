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

#include <algorithm>
#include <cmath>

#include "atent/parallel.hpp"
#include "atent/rng.hpp"

namespace atent {

namespace {

constexpr std::size_t kVoteChunk = 500;

}  // namespace

void validate(const SmoothingConfig& cfg) {
  if (!(cfg.sigma >= 0.0) || !std::isfinite(cfg.sigma)) {
    throw ConfigError("smoothing.sigma must be >= 0");
  }
  if (cfg.n_samples < 1) throw ConfigError("smoothing.n_samples must be >= 1");
  if (!(cfg.abstain_margin >= 0.0 && cfg.abstain_margin < 0.5)) {
    throw ConfigError("smoothing.abstain_margin must be in [0, 0.5)");
  }
}

Vote smooth_vote(const Classifier& f, std::size_t classes, const Tensor& x,
                 const SmoothingConfig& cfg, std::uint64_t stream) {
  validate(cfg);
  Vote vote;
  vote.counts.assign(classes, 0);
  Rng rng = Rng::stream(cfg.seed, {kSmoothingStream, stream});
  const std::size_t d = x.size();
  Shape batch_shape = x.shape();
  batch_shape.insert(batch_shape.begin(), 0);
  for (std::size_t done = 0; done < cfg.n_samples;) {
    const std::size_t m = std::min(kVoteChunk, cfg.n_samples - done);
    std::vector<double> noisy(m * d);
    for (std::size_t s = 0; s < m; ++s) {
      for (std::size_t j = 0; j < d; ++j) {
        noisy[s * d + j] =
            cfg.sigma == 0.0 ? x[j] : x[j] + cfg.sigma * rng.normal();
      }
    }
    batch_shape[0] = m;
    for (std::size_t c : f(Tensor(batch_shape, std::move(noisy)))) {
      if (c >= classes) throw Error("classifier returned an invalid class");
      ++vote.counts[c];
    }
    done += m;
  }
  // max_element returns the first maximum: ties go to the lowest class.
  const auto top = std::max_element(vote.counts.begin(), vote.counts.end());
  const double share =
      static_cast<double>(*top) / static_cast<double>(cfg.n_samples);
  if (share >= 0.5 + cfg.abstain_margin) {
    vote.prediction = static_cast<std::size_t>(top - vote.counts.begin());
  }
  return vote;
}

std::size_t smooth_predict(const ModelParams& params, const Tensor& x,
                           const SmoothingConfig& cfg, std::uint64_t stream) {
  Classifier f = [&](const Tensor& batch) { return predict(params, batch); };
  return smooth_vote(f, params.arch.classes, x, cfg, stream).prediction;
}

double smooth_accuracy(const ModelParams& params, const Tensor& inputs,
                       const Tensor& labels, const SmoothingConfig& cfg,
                       bool count_abstain_as_error, std::size_t threads) {
  validate(cfg);
  if (inputs.empty()) return 0.0;
  const std::size_t n = inputs.dim(0);
  const Shape sample(inputs.shape().begin() + 1, inputs.shape().end());
  const auto truth = label_indices(labels);
  std::vector<std::size_t> pred(n);
  parallel_for(n, threads, [&](std::size_t i) {
    Tensor x = slice_rows(inputs, i, 1).reshaped(sample);
    pred[i] = smooth_predict(params, x, cfg, i);
  });
  std::size_t correct = 0, counted = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (pred[i] == kAbstain && !count_abstain_as_error) continue;
    ++counted;
    correct += pred[i] == truth[i];
  }
  return counted == 0 ? 0.0
                      : static_cast<double>(correct) /
                            static_cast<double>(counted);
}

}  // namespace atent
