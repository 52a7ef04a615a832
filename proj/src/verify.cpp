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

#include "atent/verify.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <sstream>

#include "atent/autodiff.hpp"
#include "atent/models.hpp"
#include "atent/oracle.hpp"
#include "atent/rng.hpp"

namespace atent {

namespace {

constexpr double kAffineTol = 1e-6;
constexpr double kSmoothTol = 1e-4;

using Clock = std::chrono::steady_clock;

template <typename Fn>
CheckResult timed(std::string suite, std::string name, Fn fn) {
  const auto t0 = Clock::now();
  CheckResult r;
  r.suite = std::move(suite);
  r.name = std::move(name);
  try {
    fn(r);
  } catch (const std::exception& e) {
    r.passed = false;
    r.detail = std::string("exception: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return r;
}

Tensor random_tensor(Shape shape, Rng& rng, double away_from_zero = 0.0) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) {
    v = rng.normal();
    if (std::abs(v) < away_from_zero) v += v < 0 ? -away_from_zero : away_from_zero;
  }
  return t;
}

Tensor one_hot_rows(std::size_t n, std::size_t m, Rng& rng) {
  Tensor t({n, m});
  for (std::size_t i = 0; i < n; ++i) t[i * m + rng.below(m)] = 1.0;
  return t;
}

using Builder = std::function<Var(std::span<const Var>)>;

// Compares the tape gradient of <op(inputs), r> against central
// differences for every input; returns the largest relative error.
double op_grad_error(const std::vector<Tensor>& inputs, const Builder& build,
                     Rng& rng) {
  Tensor probe;
  {
    Tape tape;
    std::vector<Var> leaves;
    for (const Tensor& t : inputs) leaves.push_back(tape.leaf(t));
    probe = random_tensor({build(leaves).value().size(), 1}, rng);
  }
  auto evaluate = [&](const std::vector<Tensor>& xs, bool grads,
                      std::vector<Tensor>* out) {
    Tape tape;
    std::vector<Var> leaves;
    for (const Tensor& t : xs) leaves.push_back(tape.leaf(t, grads));
    Var y = build(leaves);
    Var root = sum(matmul(reshape(y, {1, y.value().size()}), tape.leaf(probe)));
    const double v = root.value().item();
    if (grads) {
      tape.backward(root);
      for (Var l : leaves) out->push_back(tape.grad(l));
    }
    return v;
  };
  std::vector<Tensor> analytic;
  evaluate(inputs, true, &analytic);
  double worst = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    std::vector<Tensor> xs = inputs;
    TensorFn f = [&](const Tensor& x) {
      xs[i] = x;
      return evaluate(xs, false, nullptr);
    };
    const Tensor numeric = finite_difference_grad(f, inputs[i]);
    worst = std::max(worst, relative_error(analytic[i].data(), numeric.data()));
  }
  return worst;
}

CheckResult op_check(const std::string& name, double tol,
                     const std::vector<Tensor>& inputs, const Builder& build,
                     Rng& rng) {
  return timed("gradients", name, [&](CheckResult& r) {
    const double err = op_grad_error(inputs, build, rng);
    r.passed = err <= tol;
    std::ostringstream s;
    s << "max rel err " << err << " (tol " << tol << ")";
    r.detail = s.str();
  });
}

// Relative error of the model's weight and input gradients.
std::pair<double, double> model_grad_errors(const ModelParams& params,
                                            const Batch& batch) {
  const LossAndGrads lg = loss_and_grads(params, batch, GradTarget::kBoth);
  double w_err = 0.0;
  for (std::size_t p = 0; p < params.weights.size(); ++p) {
    ModelParams probe = params;
    TensorFn f = [&](const Tensor& w) {
      probe.weights[p].value = w;
      return loss_and_grads(probe, batch, GradTarget::kWeights).loss;
    };
    const Tensor numeric = finite_difference_grad(f, params.weights[p].value);
    w_err = std::max(w_err, relative_error(lg.weight_grads[p].data(),
                                           numeric.data()));
  }
  // Input gradient rows belong to the summed loss.
  TensorFn fx = [&](const Tensor& x) {
    double total = 0.0;
    for (double l : sample_losses(params, {x, batch.labels})) total += l;
    return total;
  };
  const Tensor numeric_x = finite_difference_grad(fx, batch.inputs);
  const double x_err =
      relative_error(lg.input_grads.data(), numeric_x.data());
  return {w_err, x_err};
}

CheckResult model_check(const std::string& name, const ModelParams& params,
                        const Batch& batch) {
  return timed("gradients", name, [&](CheckResult& r) {
    const auto [w_err, x_err] = model_grad_errors(params, batch);
    r.passed = w_err <= kSmoothTol && x_err <= kSmoothTol;
    std::ostringstream s;
    s << "weights rel err " << w_err << ", inputs rel err " << x_err
      << " (tol " << kSmoothTol << ")";
    r.detail = s.str();
  });
}

std::string moments(const MomentCheckReport& m) {
  std::ostringstream s;
  s << "chain mean " << m.chain_mean[0] << " var " << m.chain_var[0]
    << " | grid mean " << m.ref_mean[0] << " var " << m.ref_var[0]
    << " | err mean " << m.mean_error << " var " << m.var_error;
  return s.str();
}

// Loss a * x'^2 in 1D with its gradient.
PointGradFn quadratic(double a) {
  return [a](std::span<const double> x, std::span<double> g) {
    double v = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      v += a * x[i] * x[i];
      g[i] = 2.0 * a * x[i];
    }
    return v;
  };
}

PointFn value_only(const PointGradFn& fn) {
  return [fn](std::span<const double> x) {
    std::vector<double> g(x.size());
    return fn(x, g);
  };
}

}  // namespace

std::optional<VerifySuite> parse_suite(std::string_view name) {
  if (name == "gradients") return VerifySuite::kGradients;
  if (name == "sampler") return VerifySuite::kSampler;
  if (name == "lemma1") return VerifySuite::kLemma1;
  if (name == "all") return VerifySuite::kAll;
  return std::nullopt;
}

std::vector<CheckResult> verify_gradients(std::uint64_t seed) {
  Rng rng = Rng::stream(seed, {kEvalStream, 1});
  std::vector<CheckResult> out;
  out.push_back(op_check(
      "matmul", kAffineTol, {random_tensor({3, 4}, rng), random_tensor({4, 2}, rng)},
      [](std::span<const Var> v) { return matmul(v[0], v[1]); }, rng));
  out.push_back(op_check(
      "add_bias_2d", kAffineTol,
      {random_tensor({3, 4}, rng), random_tensor({4}, rng)},
      [](std::span<const Var> v) { return add_bias(v[0], v[1]); }, rng));
  out.push_back(op_check(
      "add_bias_4d", kAffineTol,
      {random_tensor({2, 3, 2, 2}, rng), random_tensor({3}, rng)},
      [](std::span<const Var> v) { return add_bias(v[0], v[1]); }, rng));
  out.push_back(op_check(
      "add_scale_sum", kAffineTol,
      {random_tensor({2, 3}, rng), random_tensor({2, 3}, rng)},
      [](std::span<const Var> v) {
        Var s = sum(add(scale(v[0], -1.5), v[1]));
        return reshape(s, {1});
      },
      rng));
  out.push_back(op_check(
      "reshape_flatten", kAffineTol, {random_tensor({2, 3, 2}, rng)},
      [](std::span<const Var> v) { return reshape(flatten(v[0]), {3, 4}); },
      rng));
  out.push_back(op_check(
      "relu", kSmoothTol, {random_tensor({4, 5}, rng, 1e-2)},
      [](std::span<const Var> v) { return relu(v[0]); }, rng));
  out.push_back(op_check(
      "conv2d_pad1", kAffineTol,
      {random_tensor({2, 2, 5, 5}, rng), random_tensor({3, 2, 3, 3}, rng)},
      [](std::span<const Var> v) {
        return conv2d(v[0], v[1], {.stride = 1, .padding = 1});
      },
      rng));
  out.push_back(op_check(
      "conv2d_stride2", kAffineTol,
      {random_tensor({1, 6, 6}, rng), random_tensor({2, 1, 2, 2}, rng)},
      [](std::span<const Var> v) {
        return conv2d(v[0], v[1], {.stride = 2, .padding = 0});
      },
      rng));
  out.push_back(op_check(
      "max_pool2d", kSmoothTol, {random_tensor({2, 2, 4, 5}, rng)},
      [](std::span<const Var> v) { return max_pool2d(v[0], 2); }, rng));
  const Tensor labels = one_hot_rows(4, 3, rng);
  out.push_back(op_check(
      "softmax_cross_entropy_mean", kSmoothTol, {random_tensor({4, 3}, rng)},
      [&](std::span<const Var> v) {
        return reshape(softmax_cross_entropy(v[0], labels, Reduction::kMean),
                       {1});
      },
      rng));
  out.push_back(op_check(
      "softmax_cross_entropy_sum", kSmoothTol, {random_tensor({4, 3}, rng)},
      [&](std::span<const Var> v) {
        return reshape(softmax_cross_entropy(v[0], labels, Reduction::kSum),
                       {1});
      },
      rng));

  {
    ModelParams mlp = build_mlp({6, 8, 7, 3}, seed + 11);
    Batch b{random_tensor({5, 6}, rng), one_hot_rows(5, 3, rng)};
    out.push_back(model_check("mlp_loss", mlp, b));
  }
  {
    ModelParams mlp = build_mlp({2, 16, 16, 2}, seed + 12);
    Batch b{random_tensor({8, 2}, rng), one_hot_rows(8, 2, rng)};
    out.push_back(model_check("mlp_2d_loss", mlp, b));
  }
  {
    ModelParams cnn = build_small_cnn({1, 8, 8}, {2, 3}, {5, 3}, seed + 13);
    Batch b{random_tensor({3, 1, 8, 8}, rng), one_hot_rows(3, 3, rng)};
    out.push_back(model_check("cnn_loss", cnn, b));
  }
  return out;
}

std::vector<CheckResult> verify_sampler(std::uint64_t seed) {
  std::vector<CheckResult> out;
  const std::vector<double> lo = {-6.0}, hi = {6.0};

  out.push_back(timed("sampler", "constant_loss_variance", [&](CheckResult& r) {
    const double gamma = 4.0;
    const std::vector<double> x = {0.0};
    PointGradFn loss = [](std::span<const double>, std::span<double> g) {
      g[0] = 0.0;
      return 0.0;
    };
    const GridDensity ref =
        grid_gibbs_density(value_only(loss), x, gamma, lo, hi, 4001);
    ChainMomentConfig c;
    c.gamma = gamma;
    c.seed = seed;
    const auto m = chain_moment_check(loss, x, ref, c);
    r.passed = m.passed && std::abs(m.chain_var[0] - 0.25) <= 0.025;
    r.detail = moments(m) + " | target var 0.25";
  }));

  auto quad_case = [&](double chain_gamma, MomentCheckReport& m) {
    const double a = 0.5, gamma = 4.0;
    const std::vector<double> x = {1.0};
    const GridDensity ref =
        grid_gibbs_density(value_only(quadratic(a)), x, gamma, lo, hi, 4001);
    ChainMomentConfig c;
    c.gamma = chain_gamma;
    c.seed = seed + 1;
    m = chain_moment_check(quadratic(a), x, ref, c);
  };

  out.push_back(timed("sampler", "quadratic_loss_moments", [&](CheckResult& r) {
    MomentCheckReport m;
    quad_case(4.0, m);
    // gamma x / (gamma - 2a) = 4/3, 1 / (gamma - 2a) = 1/3.
    const double mean = 4.0 / 3.0, var = 1.0 / 3.0;
    r.passed = m.passed && std::abs(m.chain_mean[0] - mean) <= 0.1 * mean &&
               std::abs(m.chain_var[0] - var) <= 0.1 * var;
    r.detail = moments(m) + " | target mean 1.3333 var 0.3333";
  }));

  out.push_back(timed("sampler", "negative_control_wrong_gamma",
                      [&](CheckResult& r) {
                        MomentCheckReport m;
                        quad_case(2.5, m);
                        r.passed = !m.passed;
                        r.detail = moments(m) + " | chain gamma 2.5 vs 4";
                      }));
  return out;
}

std::vector<CheckResult> verify_lemma1(std::uint64_t seed) {
  std::vector<CheckResult> out;
  auto describe = [](const LemmaCheckReport& l) {
    std::ostringstream s;
    s << "ratio " << l.smoothness_ratio << " <= " << l.smoothness_bound
      << ", min margin " << l.dissipativity_margin << " (m " << l.m << ", b "
      << l.b << ")";
    return s.str();
  };
  // a x^2 on [-5, 5]: beta = 2a, sup |grad| = 10a.
  auto quad_problem = [](std::size_t dims) {
    LemmaProblem p;
    p.loss = quadratic(1.0);
    p.beta = 2.0;
    p.lipschitz = 10.0 * std::sqrt(static_cast<double>(dims));
    p.lo.assign(dims, -5.0);
    p.hi.assign(dims, 5.0);
    return p;
  };

  out.push_back(timed("lemma1", "quadratic_1d", [&](CheckResult& r) {
    const std::vector<double> x = {1.5};
    const auto l = lemma1_check(quad_problem(1), x, 3.0, 10000, seed);
    r.passed = l.passed() && l.smoothness_ratio <= 5.0 + 1e-8;
    r.detail = describe(l);
  }));
  out.push_back(timed("lemma1", "quadratic_2d", [&](CheckResult& r) {
    const std::vector<double> x = {-2.0, 0.5};
    const auto l = lemma1_check(quad_problem(2), x, 3.0, 10000, seed + 1);
    r.passed = l.passed();
    r.detail = describe(l);
  }));
  out.push_back(timed("lemma1", "m_scales_with_gamma", [&](CheckResult& r) {
    const std::vector<double> x = {1.5};
    const auto a = lemma1_check(quad_problem(1), x, 3.0, 100, seed);
    const auto b = lemma1_check(quad_problem(1), x, 6.0, 100, seed);
    r.passed = b.m == 2.0 * a.m && b.passed();
    r.detail = "m(3) " + std::to_string(a.m) + ", m(6) " + std::to_string(b.m);
  }));
  out.push_back(timed("lemma1", "negative_control_understated_beta",
                      [&](CheckResult& r) {
                        // Concave -x^2 has curvature 2 but is declared 0.
                        LemmaProblem p = quad_problem(1);
                        p.loss = quadratic(-1.0);
                        p.beta = 0.0;
                        const std::vector<double> x = {0.0};
                        const auto l = lemma1_check(p, x, 3.0, 1000, seed);
                        r.passed = !l.smooth_ok;
                        r.detail = describe(l);
                      }));
  out.push_back(timed("lemma1", "negative_control_understated_lipschitz",
                      [&](CheckResult& r) {
                        // Slope-10 linear loss declared 0-Lipschitz.
                        LemmaProblem p = quad_problem(1);
                        p.loss = [](std::span<const double> x,
                                    std::span<double> g) {
                          g[0] = 10.0;
                          return 10.0 * x[0];
                        };
                        p.beta = 0.0;
                        p.lipschitz = 0.0;
                        const std::vector<double> x = {0.0};
                        const auto l = lemma1_check(p, x, 3.0, 1000, seed);
                        r.passed = !l.dissipative_ok;
                        r.detail = describe(l);
                      }));
  return out;
}

std::vector<CheckResult> run_verify(VerifySuite suite, std::uint64_t seed) {
  std::vector<CheckResult> out;
  auto append = [&](std::vector<CheckResult> part) {
    out.insert(out.end(), part.begin(), part.end());
  };
  if (suite == VerifySuite::kGradients || suite == VerifySuite::kAll) {
    append(verify_gradients(seed));
  }
  if (suite == VerifySuite::kSampler || suite == VerifySuite::kAll) {
    append(verify_sampler(seed));
  }
  if (suite == VerifySuite::kLemma1 || suite == VerifySuite::kAll) {
    append(verify_lemma1(seed));
  }
  return out;
}

}  // namespace atent
