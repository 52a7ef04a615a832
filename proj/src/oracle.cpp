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

#include "atent/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "atent/gibbs_sampler.hpp"
#include "atent/rng.hpp"

namespace atent {

Tensor finite_difference_grad(const TensorFn& f, const Tensor& x, double h) {
  if (!(h > 0.0)) throw Error("finite_difference_grad needs h > 0");
  Tensor probe = x;
  Tensor grad(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double up = f(probe);
    probe[i] = x[i] - h;
    const double down = f(probe);
    probe[i] = x[i];
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NonFiniteError("finite_difference_grad: f is not finite");
    }
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

double relative_error(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("relative_error: sizes differ");
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double scale = std::sqrt(std::max(na, nb));
  return scale == 0.0 ? 0.0 : std::sqrt(diff) / scale;
}

std::vector<double> GridDensity::point(std::size_t cell) const {
  std::vector<double> p(dims());
  for (std::size_t a = dims(); a-- > 0;) {
    const std::size_t idx = cell % resolution;
    cell /= resolution;
    const double width = (hi[a] - lo[a]) / static_cast<double>(resolution);
    p[a] = lo[a] + (static_cast<double>(idx) + 0.5) * width;
  }
  return p;
}

std::vector<double> GridDensity::mean() const {
  std::vector<double> m(dims(), 0.0);
  for (std::size_t c = 0; c < probs.size(); ++c) {
    const auto p = point(c);
    for (std::size_t a = 0; a < dims(); ++a) m[a] += probs[c] * p[a];
  }
  return m;
}

std::vector<double> GridDensity::variance() const {
  const auto m = mean();
  std::vector<double> v(dims(), 0.0);
  for (std::size_t c = 0; c < probs.size(); ++c) {
    const auto p = point(c);
    for (std::size_t a = 0; a < dims(); ++a) {
      v[a] += probs[c] * (p[a] - m[a]) * (p[a] - m[a]);
    }
  }
  return v;
}

GridDensity grid_gibbs_density(const PointFn& loss,
                               std::span<const double> anchor, double gamma,
                               std::span<const double> lo,
                               std::span<const double> hi,
                               std::size_t resolution) {
  const std::size_t dims = anchor.size();
  if (dims < 1 || dims > 2) throw Error("grid density supports 1D or 2D");
  if (lo.size() != dims || hi.size() != dims) {
    throw ShapeError("grid bounds do not match the anchor");
  }
  if (resolution < 2) throw Error("grid resolution must be >= 2");
  for (std::size_t a = 0; a < dims; ++a) {
    if (!(lo[a] < hi[a])) throw Error("grid box is empty");
  }
  GridDensity g;
  g.lo.assign(lo.begin(), lo.end());
  g.hi.assign(hi.begin(), hi.end());
  g.resolution = resolution;
  const std::size_t cells = dims == 1 ? resolution : resolution * resolution;
  g.log_density.resize(cells);
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < cells; ++c) {
    const auto p = g.point(c);
    double dist2 = 0.0;
    for (std::size_t a = 0; a < dims; ++a) {
      dist2 += (p[a] - anchor[a]) * (p[a] - anchor[a]);
    }
    const double v = loss(p) - 0.5 * gamma * dist2;
    if (std::isnan(v)) throw NonFiniteError("grid log-density is NaN");
    g.log_density[c] = v;
    peak = std::max(peak, v);
  }
  // Max-shift before exponentiating keeps the largest term at exp(0).
  g.probs.resize(cells);
  double total = 0.0;
  for (std::size_t c = 0; c < cells; ++c) {
    g.probs[c] = std::exp(g.log_density[c] - peak);
    total += g.probs[c];
  }
  for (double& p : g.probs) p /= total;
  return g;
}

MomentCheckReport chain_moment_check(const PointGradFn& loss,
                                     std::span<const double> anchor,
                                     const GridDensity& ref,
                                     const ChainMomentConfig& cfg) {
  const std::size_t d = anchor.size();
  if (d != ref.dims()) throw ShapeError("chain and grid dimensions differ");
  if (cfg.kept < 2 || cfg.thin < 1) throw Error("chain needs kept >= 2");
  if (!(cfg.burn_in_fraction >= 0.0 && cfg.burn_in_fraction < 1.0)) {
    throw Error("burn_in_fraction must be in [0, 1)");
  }
  GibbsSamplerConfig sc;
  sc.gamma = cfg.gamma;
  sc.step = cfg.step;
  sc.noise_scale = cfg.noise_scale;
  sc.steps = std::numeric_limits<std::size_t>::max();
  validate(sc);

  const std::size_t after = cfg.kept * cfg.thin;
  const auto burn = static_cast<std::size_t>(std::ceil(
      static_cast<double>(after) * cfg.burn_in_fraction /
      (1.0 - cfg.burn_in_fraction)));
  Rng rng = Rng::stream(cfg.seed, {kSamplerStream});
  Tensor x({d}, std::vector<double>(anchor.begin(), anchor.end()));
  ChainState state{x, x};
  Tensor grad({d});
  std::vector<double> sum(d, 0.0), sum2(d, 0.0);
  for (std::size_t t = 0; t < burn + after; ++t) {
    loss(state.x_prime.data(), grad.data());
    langevin_step_l2(state, grad, sc, rng);
    if (t >= burn && (t - burn) % cfg.thin == 0) {
      for (std::size_t a = 0; a < d; ++a) {
        sum[a] += state.x_prime[a];
        sum2[a] += state.x_prime[a] * state.x_prime[a];
      }
    }
  }
  MomentCheckReport r;
  r.ref_mean = ref.mean();
  r.ref_var = ref.variance();
  const double n = static_cast<double>(cfg.kept);
  for (std::size_t a = 0; a < d; ++a) {
    const double m = sum[a] / n;
    r.chain_mean.push_back(m);
    r.chain_var.push_back((sum2[a] - n * m * m) / (n - 1.0));
    const double scale =
        std::max(std::abs(r.ref_mean[a]), std::sqrt(r.ref_var[a]));
    r.mean_error = std::max(r.mean_error,
                            std::abs(m - r.ref_mean[a]) / scale);
    r.var_error = std::max(
        r.var_error, std::abs(r.chain_var[a] - r.ref_var[a]) / r.ref_var[a]);
  }
  r.passed = r.mean_error <= cfg.tolerance && r.var_error <= cfg.tolerance;
  return r;
}

LemmaCheckReport lemma1_check(const LemmaProblem& problem,
                              std::span<const double> anchor, double gamma,
                              std::size_t n_points, std::uint64_t seed) {
  const std::size_t d = anchor.size();
  if (problem.lo.size() != d || problem.hi.size() != d) {
    throw ShapeError("lemma box does not match the anchor");
  }
  if (!(gamma > 0.0)) throw Error("lemma1_check needs gamma > 0");
  Rng rng = Rng::stream(seed, {kEvalStream});
  auto sample = [&](std::vector<double>& p) {
    for (std::size_t a = 0; a < d; ++a) {
      p[a] = problem.lo[a] + (problem.hi[a] - problem.lo[a]) * rng.uniform();
    }
  };
  std::vector<double> g(d);
  // grad F(x') = -grad L(x') + gamma (x' - x).
  auto grad_f = [&](const std::vector<double>& p, std::vector<double>& out) {
    problem.loss(p, g);
    out.resize(d);
    for (std::size_t a = 0; a < d; ++a) {
      out[a] = -g[a] + gamma * (p[a] - anchor[a]);
    }
  };

  LemmaCheckReport r;
  r.points = n_points;
  r.gamma = gamma;
  r.smoothness_bound = problem.beta + gamma;
  r.m = gamma / 4.0;
  double anchor2 = 0.0;
  for (double v : anchor) anchor2 += v * v;
  r.b = problem.lipschitz * problem.lipschitz / gamma + 0.5 * gamma * anchor2;
  r.dissipativity_margin = std::numeric_limits<double>::infinity();

  std::vector<double> p1(d), p2(d), g1, g2;
  for (std::size_t i = 0; i < n_points; ++i) {
    sample(p1);
    sample(p2);
    grad_f(p1, g1);
    grad_f(p2, g2);
    double num = 0.0, den = 0.0;
    for (std::size_t a = 0; a < d; ++a) {
      num += (g1[a] - g2[a]) * (g1[a] - g2[a]);
      den += (p1[a] - p2[a]) * (p1[a] - p2[a]);
    }
    if (den > 0.0) {
      r.smoothness_ratio = std::max(r.smoothness_ratio, std::sqrt(num / den));
    }
    double inner = 0.0, norm2 = 0.0;
    for (std::size_t a = 0; a < d; ++a) {
      inner += g1[a] * p1[a];
      norm2 += p1[a] * p1[a];
    }
    r.dissipativity_margin =
        std::min(r.dissipativity_margin, inner - (r.m * norm2 - r.b));
  }
  r.smooth_ok = r.smoothness_ratio <= r.smoothness_bound + 1e-8;
  r.dissipative_ok = r.dissipativity_margin >= 0.0;
  return r;
}

}  // namespace atent
