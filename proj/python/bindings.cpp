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

// Python bindings. Tensors cross the boundary as float64 numpy arrays.

#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "atent/attacks.hpp"
#include "atent/checkpoint.hpp"
#include "atent/config.hpp"
#include "atent/data.hpp"
#include "atent/experiment.hpp"
#include "atent/gibbs_sampler.hpp"
#include "atent/models.hpp"
#include "atent/report.hpp"
#include "atent/smoothing.hpp"
#include "atent/verify.hpp"

namespace py = pybind11;
using namespace atent;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const Array& a) {
  Shape shape(a.shape(), a.shape() + a.ndim());
  return Tensor(std::move(shape),
                std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const Tensor& t) {
  Array out(std::vector<py::ssize_t>(t.shape().begin(), t.shape().end()));
  std::copy(t.data().begin(), t.data().end(), out.mutable_data());
  return out;
}

Tensor labels_tensor(const Array& y, std::size_t classes) {
  if (y.ndim() == 2) return to_tensor(y);
  std::vector<std::size_t> idx(y.data(), y.data() + y.size());
  Tensor t({idx.size(), classes});
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= classes) throw Error("label out of range");
    t[i * classes + idx[i]] = 1.0;
  }
  return t;
}


py::dict row_dict(const ReportRow& r) {
  py::dict d;
  d["defense"] = r.defense;
  d["attack"] = r.attack;
  d["norm"] = r.norm;
  d["epsilon"] = r.epsilon;
  d["natural_acc"] = r.natural_acc;
  d["robust_acc"] = r.robust_acc;
  d["seed"] = r.seed;
  d["wall_ms"] = r.wall_ms;
  return d;
}

}  // namespace

PYBIND11_MODULE(_atent, m) {
  m.doc() = "Adversarial training via entropic regularization";

  // Translators are tried newest first, so the base class goes first.
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);

  py::enum_<NormKind>(m, "NormKind")
      .value("L2", NormKind::kL2)
      .value("LINF", NormKind::kLinf);
  py::enum_<LinfMode>(m, "LinfMode")
      .value("FINAL_PROJECTION", LinfMode::kFinalProjection)
      .value("PER_STEP_PROJECTION", LinfMode::kPerStepProjection)
      .value("COORDINATE_SIGN", LinfMode::kCoordinateSign);
  py::enum_<AttackKind>(m, "AttackKind")
      .value("FGSM", AttackKind::kFgsm)
      .value("PGD", AttackKind::kPgd)
      .value("ATENT", AttackKind::kAtent);

  py::class_<GibbsSamplerConfig>(m, "GibbsSamplerConfig")
      .def(py::init<>())
      .def_readwrite("gamma", &GibbsSamplerConfig::gamma)
      .def_readwrite("step", &GibbsSamplerConfig::step)
      .def_readwrite("steps", &GibbsSamplerConfig::steps)
      .def_readwrite("noise_scale", &GibbsSamplerConfig::noise_scale)
      .def_readwrite("ema", &GibbsSamplerConfig::ema)
      .def_readwrite("norm", &GibbsSamplerConfig::norm)
      .def_readwrite("init_radius", &GibbsSamplerConfig::init_radius)
      .def_readwrite("linf_mode", &GibbsSamplerConfig::linf_mode)
      .def_readwrite("clip_range", &GibbsSamplerConfig::clip_range)
      .def("validate", [](const GibbsSamplerConfig& c) { validate(c); });

  py::class_<AttackConfig>(m, "AttackConfig")
      .def(py::init<>())
      .def_readwrite("kind", &AttackConfig::kind)
      .def_readwrite("norm", &AttackConfig::norm)
      .def_readwrite("epsilon", &AttackConfig::radius)
      .def_readwrite("steps", &AttackConfig::steps)
      .def_readwrite("step_size", &AttackConfig::step_size)
      .def_readwrite("restarts", &AttackConfig::restarts)
      .def_readwrite("random_start", &AttackConfig::random_start)
      .def_readwrite("seed", &AttackConfig::seed)
      .def_readwrite("clip_range", &AttackConfig::clip_range)
      .def_readwrite("sampler", &AttackConfig::sampler);

  py::class_<ModelParams>(m, "Model")
      .def_property_readonly("parameter_count", &ModelParams::parameter_count)
      .def_property_readonly("classes",
                             [](const ModelParams& p) { return p.arch.classes; })
      .def("weights",
           [](const ModelParams& p) {
             py::dict d;
             for (const NamedTensor& t : p.weights) d[py::str(t.name)] = to_array(t.value);
             return d;
           })
      .def("logits", [](const ModelParams& p, const Array& x) {
        return to_array(forward_logits(p, to_tensor(x)));
      })
      .def("predict", [](const ModelParams& p, const Array& x) {
        return predict(p, to_tensor(x));
      })
      .def("accuracy", [](const ModelParams& p, const Array& x, const Array& y) {
        return accuracy(p, to_tensor(x), labels_tensor(y, p.arch.classes));
      })
      .def("save", [](const ModelParams& p, const std::filesystem::path& f) {
        save_checkpoint(p, f);
      })
      .def("__eq__", [](const ModelParams& a, const ModelParams& b) {
        return a == b;
      });

  m.def("build_mlp", &build_mlp, py::arg("layer_widths"), py::arg("seed") = 0);
  m.def("load_checkpoint", &load_checkpoint, py::arg("path"));

  m.def(
      "two_gaussians",
      [](std::size_t n, double separation, std::uint64_t seed) {
        const Dataset ds = synth_two_gaussians(n, separation, seed);
        return py::make_tuple(to_array(ds.inputs),
                              label_indices(ds.labels));
      },
      py::arg("n"), py::arg("separation") = 4.0, py::arg("seed") = 0);

  m.def(
      "project_linf_increment",
      [](const Array& z, double gamma) {
        return to_array(project_linf_increment(to_tensor(z), gamma));
      },
      py::arg("z"), py::arg("gamma"));

  m.def(
      "attack",
      [](const ModelParams& p, const Array& x, const Array& y,
         const AttackConfig& cfg) {
        Batch b{to_tensor(x), labels_tensor(y, p.arch.classes)};
        return to_array(run_attack(p, b, cfg));
      },
      py::arg("model"), py::arg("x"), py::arg("y"), py::arg("config"));
  m.def(
      "robust_accuracy",
      [](const ModelParams& p, const Array& x, const Array& y,
         const AttackConfig& cfg) {
        return robust_accuracy(p, to_tensor(x), labels_tensor(y, p.arch.classes),
                               cfg);
      },
      py::arg("model"), py::arg("x"), py::arg("y"), py::arg("config"));

  m.def(
      "sample_chain",
      [](const ModelParams& p, const Array& x, const Array& y,
         const GibbsSamplerConfig& cfg, std::uint64_t seed) {
        Rng rng(seed);
        ChainResult r = run_chain(p, {to_tensor(x), labels_tensor(y, p.arch.classes)},
                                  cfg, rng);
        py::list samples;
        for (const Tensor& s : r.samples) samples.append(to_array(s));
        py::dict d;
        d["samples"] = samples;
        d["sample_losses"] = r.sample_losses;
        d["ema_loss"] = r.ema_loss;
        d["final_x"] = to_array(r.final_x);
        return d;
      },
      py::arg("model"), py::arg("x"), py::arg("y"), py::arg("config"),
      py::arg("seed") = 0);

  m.def(
      "smooth_predict",
      [](const ModelParams& p, const Array& x, double sigma,
         std::size_t n_samples, double abstain_margin, std::uint64_t seed)
          -> std::optional<std::size_t> {
        SmoothingConfig c{sigma, n_samples, abstain_margin, seed};
        const std::size_t r = smooth_predict(p, to_tensor(x), c);
        if (r == kAbstain) return std::nullopt;
        return r;
      },
      py::arg("model"), py::arg("x"), py::arg("sigma"),
      py::arg("n_samples") = 100, py::arg("abstain_margin") = 0.0,
      py::arg("seed") = 0);

  m.def(
      "run_experiment",
      [](const std::filesystem::path& config,
         std::optional<std::filesystem::path> output_dir,
         std::optional<std::filesystem::path> data_dir, bool resume) {
        RunOptions o;
        o.output_dir = std::move(output_dir);
        o.data_dir = std::move(data_dir);
        o.resume = resume;
        RunResult r;
        {
          py::gil_scoped_release release;
          r = run_experiment(parse_config(config), o);
        }
        py::list rows;
        for (const ReportRow& row : r.report.rows) rows.append(row_dict(row));
        return rows;
      },
      py::arg("config"), py::arg("output_dir") = py::none(),
      py::arg("data_dir") = py::none(), py::arg("resume") = true);

  m.def(
      "verify",
      [](const std::string& suite, std::uint64_t seed) {
        const auto s = parse_suite(suite);
        if (!s) throw ConfigError("unknown suite: " + suite);
        py::list out;
        for (const CheckResult& c : run_verify(*s, seed)) {
          py::dict d;
          d["suite"] = c.suite;
          d["name"] = c.name;
          d["passed"] = c.passed;
          d["detail"] = c.detail;
          out.append(d);
        }
        return out;
      },
      py::arg("suite") = "all", py::arg("seed") = 0);
}
