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

// Independent numerical checks: finite differences, Gibbs densities on a
// grid, chain moments against those densities, and the smoothness and
// dissipativity bounds of the effective sampling objective
//   F(x') = (gamma/2) ||x - x'||^2 - L(x').

#ifndef ATENT_ORACLE_HPP_
#define ATENT_ORACLE_HPP_

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "atent/tensor.hpp"

namespace atent {

using TensorFn = std::function<double(const Tensor&)>;

// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h.
Tensor finite_difference_grad(const TensorFn& f, const Tensor& x,
                              double h = 1e-5);

// ||a - b|| / max(||a||, ||b||), or 0 when both are zero.
double relative_error(std::span<const double> a, std::span<const double> b);

using PointFn = std::function<double(std::span<const double>)>;

// exp(L(x') - (gamma/2)||x' - x||^2) on a regular grid of cell centres,
// normalised by its sum.
struct GridDensity {
  std::vector<double> lo;
  std::vector<double> hi;
  std::size_t resolution = 0;  // cells per axis
  std::vector<double> log_density;  // unnormalised, row-major over axes
  std::vector<double> probs;

  std::size_t dims() const { return lo.size(); }
  std::vector<double> point(std::size_t cell) const;
  std::vector<double> mean() const;
  std::vector<double> variance() const;
};

// 1D or 2D only. Throws on other dimensions or an empty box.
GridDensity grid_gibbs_density(const PointFn& loss,
                               std::span<const double> anchor, double gamma,
                               std::span<const double> lo,
                               std::span<const double> hi,
                               std::size_t resolution);

using PointGradFn =
    std::function<double(std::span<const double> x, std::span<double> grad)>;

struct ChainMomentConfig {
  double gamma = 1.0;  // used by the chain; may differ from the reference
  double step = 0.01;
  double noise_scale = 1.0;
  std::size_t kept = 50000;
  std::size_t thin = 10;
  double burn_in_fraction = 0.2;
  double tolerance = 0.1;
  std::uint64_t seed = 0;
};

struct MomentCheckReport {
  std::vector<double> chain_mean;
  std::vector<double> chain_var;
  std::vector<double> ref_mean;
  std::vector<double> ref_var;
  // Mean errors are scaled by max(|ref mean|, ref std).
  double mean_error = 0.0;
  double var_error = 0.0;
  bool passed = false;
};

// Runs an l2 Langevin chain from the anchor and compares post-burn-in
// moments with `ref`. The burn-in is a fraction of the whole chain.
MomentCheckReport chain_moment_check(const PointGradFn& loss,
                                     std::span<const double> anchor,
                                     const GridDensity& ref,
                                     const ChainMomentConfig& cfg);

struct LemmaProblem {
  PointGradFn loss;  // L(x') and its gradient
  double beta = 0.0;       // smoothness constant of L
  double lipschitz = 0.0;  // bound on ||grad L|| over the box
  std::vector<double> lo;
  std::vector<double> hi;
};

struct LemmaCheckReport {
  std::size_t points = 0;
  double gamma = 0.0;
  double smoothness_bound = 0.0;  // beta + gamma
  double smoothness_ratio = 0.0;  // max ||dF(a) - dF(b)|| / ||a - b||
  double m = 0.0;                 // gamma / 4
  double b = 0.0;                 // L^2 / gamma + (gamma / 2) ||x||^2
  double dissipativity_margin = 0.0;  // min <dF(x'), x'> - (m||x'||^2 - b)
  bool smooth_ok = false;
  bool dissipative_ok = false;
  bool passed() const { return smooth_ok && dissipative_ok; }
};

// Samples n_points pairs and points uniformly in the box.
LemmaCheckReport lemma1_check(const LemmaProblem& problem,
                              std::span<const double> anchor, double gamma,
                              std::size_t n_points, std::uint64_t seed);

}  // namespace atent

#endif  // ATENT_ORACLE_HPP_
