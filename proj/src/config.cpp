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

#include "atent/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include "atent/rng.hpp"

namespace atent {

using nlohmann::json;

namespace {

// Reads one JSON object, remembering which keys were consumed so that
// leftovers can be reported.
// Documents built in code hold signed integers; parsed text holds unsigned.
bool is_nonneg_int(const json& v) {
  return v.is_number_unsigned() ||
         (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_, "expected an object");
  }

  [[noreturn]] static void fail(const std::string& path,
                                const std::string& msg) {
    throw ConfigError((path.empty() ? std::string("<root>") : path) + ": " +
                      msg);
  }

  std::string key_path(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end() || it->is_null()) return nullptr;
    return &*it;
  }

  double number(const std::string& key, double def) {
    const json* v = find(key);
    if (v == nullptr) return def;
    if (!v->is_number()) fail(key_path(key), "expected a number");
    return v->get<double>();
  }

  std::optional<double> opt_number(const std::string& key) {
    const json* v = find(key);
    if (v == nullptr) return std::nullopt;
    if (!v->is_number()) fail(key_path(key), "expected a number");
    return v->get<double>();
  }

  std::uint64_t uint(const std::string& key, std::uint64_t def) {
    const json* v = find(key);
    if (v == nullptr) return def;
    if (!is_nonneg_int(*v)) {
      fail(key_path(key), "expected a non-negative integer");
    }
    return v->get<std::uint64_t>();
  }

  bool boolean(const std::string& key, bool def) {
    const json* v = find(key);
    if (v == nullptr) return def;
    if (!v->is_boolean()) fail(key_path(key), "expected true or false");
    return v->get<bool>();
  }

  std::string string(const std::string& key, const std::string& def) {
    const json* v = find(key);
    if (v == nullptr) return def;
    if (!v->is_string()) fail(key_path(key), "expected a string");
    return v->get<std::string>();
  }

  std::vector<std::size_t> uint_list(const std::string& key,
                                     const std::vector<std::size_t>& def) {
    const json* v = find(key);
    if (v == nullptr) return def;
    if (!v->is_array()) fail(key_path(key), "expected an array");
    std::vector<std::size_t> out;
    for (const json& e : *v) {
      if (!is_nonneg_int(e)) {
        fail(key_path(key), "expected non-negative integers");
      }
      out.push_back(e.get<std::size_t>());
    }
    return out;
  }

  // Throws on any key that was never asked for.
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.contains(it.key())) {
        fail(key_path(it.key()), "unknown key '" + it.key() + "'");
      }
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <typename Enum>
Enum parse_enum(Reader& r, const std::string& key, Enum def,
                std::initializer_list<std::pair<const char*, Enum>> options) {
  const std::string value = r.string(key, "");
  if (value.empty()) return def;
  std::string allowed;
  for (const auto& [name, e] : options) {
    if (value == name) return e;
    allowed += (allowed.empty() ? "" : ", ") + std::string(name);
  }
  Reader::fail(r.key_path(key),
               "unknown value '" + value + "' (expected one of " + allowed +
                   ")");
}

void require(bool ok, const std::string& path, const std::string& msg) {
  if (!ok) Reader::fail(path, msg);
}

std::optional<std::pair<double, double>> parse_range(Reader& r,
                                                     const std::string& key) {
  const json* v = r.find(key);
  if (v == nullptr) return std::nullopt;
  require(v->is_array() && v->size() == 2 && (*v)[0].is_number() &&
              (*v)[1].is_number(),
          r.key_path(key), "expected [min, max]");
  std::pair<double, double> out{(*v)[0].get<double>(), (*v)[1].get<double>()};
  require(out.first < out.second, r.key_path(key), "min must be < max");
  return out;
}

GibbsSamplerConfig parse_sampler(const json& j, const std::string& path) {
  Reader r(j, path);
  GibbsSamplerConfig c;
  c.gamma = r.number("gamma", c.gamma);
  c.step = r.number("step", c.step);
  c.steps = r.uint("steps", c.steps);
  c.noise_scale = r.number("noise_scale", c.noise_scale);
  c.ema = r.number("ema", c.ema);
  c.norm = parse_enum(r, "norm", c.norm,
                      {{"l2", NormKind::kL2}, {"linf", NormKind::kLinf}});
  c.init_radius = r.opt_number("init_radius");
  c.loss_cap = r.number("loss_cap", c.loss_cap);
  c.linf_mode = parse_enum(
      r, "linf_mode", c.linf_mode,
      {{"final_projection", LinfMode::kFinalProjection},
       {"per_step_projection", LinfMode::kPerStepProjection},
       {"coordinate_sign", LinfMode::kCoordinateSign}});
  c.clip_range = parse_range(r, "clip_range");
  r.finish();
  require(c.gamma > 0.0, r.key_path("gamma"), "must be > 0");
  require(c.step > 0.0, r.key_path("step"), "must be > 0");
  require(c.steps >= 1, r.key_path("steps"), "must be >= 1");
  require(c.noise_scale >= 0.0, r.key_path("noise_scale"), "must be >= 0");
  require(c.ema > 0.0 && c.ema <= 1.0, r.key_path("ema"), "must be in (0, 1]");
  require(!c.init_radius || *c.init_radius >= 0.0, r.key_path("init_radius"),
          "must be >= 0");
  require(c.loss_cap >= 0.0, r.key_path("loss_cap"), "must be >= 0");
  return c;
}

AttackConfig parse_attack(const json& j, const std::string& path,
                          bool allow_seed, std::uint64_t default_seed) {
  Reader r(j, path);
  AttackConfig c;
  c.kind = parse_enum(r, "kind", c.kind,
                      {{"fgsm", AttackKind::kFgsm},
                       {"pgd", AttackKind::kPgd},
                       {"atent", AttackKind::kAtent}});
  c.norm = parse_enum(r, "norm", c.norm,
                      {{"l2", NormKind::kL2}, {"linf", NormKind::kLinf}});
  c.radius = r.number("epsilon", c.radius);
  c.steps = r.uint("steps", c.steps);
  c.step_size = r.number("step_size", c.step_size);
  c.restarts = r.uint("restarts", c.restarts);
  c.random_start = r.boolean("random_start", c.random_start);
  c.step_rule = parse_enum(r, "step_rule", c.step_rule,
                           {{"standard", StepRule::kStandard},
                            {"raw", StepRule::kRaw},
                            {"regularized", StepRule::kRegularized}});
  c.reg_gamma = r.number("reg_gamma", c.reg_gamma);
  // clip_range: [min, max], or false to disable clipping.
  {
    const json* v = r.find("clip_range");
    if (v != nullptr && v->is_boolean()) {
      require(!v->get<bool>(), r.key_path("clip_range"),
              "use [min, max] or false");
      c.clip_range.reset();
    } else if (v != nullptr) {
      c.clip_range = parse_range(r, "clip_range");
    }
  }
  c.seed = default_seed;
  if (allow_seed) c.seed = r.uint("seed", default_seed);
  if (const json* s = r.find("sampler")) {
    require(c.kind == AttackKind::kAtent, r.key_path("sampler"),
            "only valid for kind \"atent\"");
    c.sampler = parse_sampler(*s, r.key_path("sampler"));
  }
  r.finish();
  require(c.radius >= 0.0, r.key_path("epsilon"), "must be >= 0");
  require(c.steps == 0 || c.step_size > 0.0, r.key_path("step_size"),
          "must be > 0");
  require(c.restarts >= 1, r.key_path("restarts"), "must be >= 1");
  require(c.kind != AttackKind::kFgsm || c.norm == NormKind::kLinf,
          r.key_path("norm"), "fgsm requires linf");
  if (c.kind == AttackKind::kAtent) c.sampler.norm = NormKind::kLinf;
  return c;
}

TrainerConfig parse_trainer(const json& j, const std::string& path,
                            std::uint64_t seed) {
  Reader r(j, path);
  TrainerConfig c;
  c.seed = seed;
  const std::string defense = r.string("defense", "sgd");
  auto kind = parse_defense(defense);
  require(kind.has_value(), r.key_path("defense"),
          "unknown value '" + defense +
              "' (expected one of sgd, entropy_sgd, pgd_at, atent_l2, "
              "atent_linf)");
  c.defense = *kind;
  c.lr = r.number("lr", c.lr);
  c.epochs = r.uint("epochs", c.epochs);
  c.batch_size = r.uint("batch_size", c.batch_size);
  c.weight_decay = r.number("weight_decay", c.weight_decay);
  c.record_timing = r.boolean("record_timing", c.record_timing);
  if (const json* s = r.find("lr_schedule")) {
    require(s->is_array(), r.key_path("lr_schedule"), "expected an array");
    std::vector<LrDecay> sched;
    for (std::size_t i = 0; i < s->size(); ++i) {
      Reader e((*s)[i], r.key_path("lr_schedule") + "[" + std::to_string(i) +
                            "]");
      LrDecay d;
      d.epoch = e.uint("epoch", d.epoch);
      d.factor = e.number("factor", d.factor);
      e.finish();
      require(d.factor > 0.0, e.key_path("factor"), "must be > 0");
      sched.push_back(d);
    }
    c.lr_schedule = std::move(sched);
  }
  if (const json* s = r.find("sampler")) {
    require(uses_sampler(c.defense), r.key_path("sampler"),
            "only valid for entropy_sgd, atent_l2 and atent_linf");
    c.sampler = parse_sampler(*s, r.key_path("sampler"));
  }
  if (c.defense == DefenseKind::kAtentL2) c.sampler.norm = NormKind::kL2;
  if (c.defense == DefenseKind::kAtentLinf) c.sampler.norm = NormKind::kLinf;
  if (const json* p = r.find("pgd")) {
    c.pgd = parse_attack(*p, r.key_path("pgd"), false, 0);
  }
  if (const json* e = r.find("early_stop")) {
    Reader er(*e, r.key_path("early_stop"));
    c.early_stop.metric = parse_enum(
        er, "metric", c.early_stop.metric,
        {{"robust", StopMetric::kRobust}, {"natural", StopMetric::kNatural}});
    c.early_stop.patience = er.uint("patience", c.early_stop.patience);
    c.early_stop.eval_samples =
        er.uint("eval_samples", c.early_stop.eval_samples);
    if (const json* a = er.find("eval_attack")) {
      c.early_stop.eval_attack =
          parse_attack(*a, er.key_path("eval_attack"), false, 0);
    }
    er.finish();
  }
  r.finish();
  require(c.lr >= 0.0 && std::isfinite(c.lr), r.key_path("lr"),
          "must be a finite number >= 0");
  require(c.epochs >= 1, r.key_path("epochs"), "must be >= 1");
  require(c.batch_size >= 1, r.key_path("batch_size"), "must be >= 1");
  require(c.weight_decay >= 0.0, r.key_path("weight_decay"), "must be >= 0");
  return c;
}

json range_json(const std::optional<std::pair<double, double>>& r) {
  if (!r) return nullptr;
  return json::array({r->first, r->second});
}

}  // namespace

Architecture architecture_from_json(const json& doc) {
  Reader r(doc, "architecture");
  Architecture a;
  a.kind = parse_enum(r, "kind", a.kind,
                      {{"mlp", ModelKind::kMlp}, {"cnn", ModelKind::kCnn}});
  a.input_shape = r.uint_list("input_shape", {});
  a.hidden = r.uint_list("hidden", {});
  a.conv_channels = r.uint_list("conv_channels", {});
  a.classes = r.uint("classes", a.classes);
  r.finish();
  return a;
}

json to_json(const Architecture& arch) {
  return {{"kind", arch.kind == ModelKind::kMlp ? "mlp" : "cnn"},
          {"input_shape", arch.input_shape},
          {"hidden", arch.hidden},
          {"conv_channels", arch.conv_channels},
          {"classes", arch.classes}};
}

json to_json(const GibbsSamplerConfig& c) {
  json j = {{"gamma", c.gamma},
            {"step", c.step},
            {"steps", c.steps},
            {"noise_scale", c.noise_scale},
            {"ema", c.ema},
            {"norm", std::string(to_string(c.norm))},
            {"linf_mode", std::string(to_string(c.linf_mode))},
            {"clip_range", range_json(c.clip_range)}};
  j["init_radius"] = c.init_radius ? json(*c.init_radius) : json(nullptr);
  // JSON has no infinity; an absent cap means +inf.
  j["loss_cap"] = std::isinf(c.loss_cap) ? json(nullptr) : json(c.loss_cap);
  return j;
}

json to_json(const AttackConfig& c) {
  const char* rule = c.step_rule == StepRule::kStandard ? "standard"
                     : c.step_rule == StepRule::kRaw    ? "raw"
                                                        : "regularized";
  json j = {{"kind", std::string(to_string(c.kind))},
            {"norm", std::string(to_string(c.norm))},
            {"epsilon", c.radius},
            {"steps", c.steps},
            {"step_size", c.step_size},
            {"restarts", c.restarts},
            {"random_start", c.random_start},
            {"step_rule", rule},
            {"reg_gamma", c.reg_gamma},
            {"seed", c.seed}};
  j["clip_range"] = c.clip_range ? range_json(c.clip_range) : json(false);
  if (c.kind == AttackKind::kAtent) j["sampler"] = to_json(c.sampler);
  return j;
}

json to_json(const ExperimentConfig& cfg) {
  const DatasetSpec& d = cfg.dataset;
  json dataset = {
      {"kind", d.kind == DatasetKind::kMnist ? "mnist" : "two_gaussians"},
      {"val_fraction", d.val_fraction}};
  if (d.kind == DatasetKind::kMnist) {
    dataset["dir"] = d.dir ? json(*d.dir) : json(nullptr);
    dataset["classes"] = d.classes;
    dataset["cap_per_class"] = d.cap_per_class;
    dataset["test_samples"] = d.test_samples;
  } else {
    dataset["train_n"] = d.train_n;
    dataset["test_n"] = d.test_n;
    dataset["separation"] = d.separation;
  }
  json model = {{"kind", cfg.model.kind == ModelKind::kMlp ? "mlp" : "cnn"},
                {"hidden", cfg.model.hidden}};
  if (cfg.model.kind == ModelKind::kCnn) {
    model["conv_channels"] = cfg.model.conv_channels;
  }

  const TrainerConfig& t = cfg.trainer;
  json trainer = {{"defense", std::string(to_string(t.defense))},
                  {"lr", t.lr},
                  {"epochs", t.epochs},
                  {"batch_size", t.batch_size},
                  {"weight_decay", t.weight_decay},
                  {"record_timing", t.record_timing}};
  if (t.lr_schedule) {
    json s = json::array();
    for (const LrDecay& l : *t.lr_schedule) {
      s.push_back({{"epoch", l.epoch}, {"factor", l.factor}});
    }
    trainer["lr_schedule"] = s;
  }
  if (uses_sampler(t.defense)) trainer["sampler"] = to_json(t.sampler);
  json pgd = to_json(t.pgd);
  pgd.erase("seed");
  trainer["pgd"] = pgd;
  json es = {{"metric", t.early_stop.metric == StopMetric::kRobust ? "robust"
                                                                   : "natural"},
             {"patience", t.early_stop.patience},
             {"eval_samples", t.early_stop.eval_samples}};
  if (t.early_stop.eval_attack) {
    json a = to_json(*t.early_stop.eval_attack);
    a.erase("seed");
    es["eval_attack"] = a;
  }
  trainer["early_stop"] = es;

  json attacks = json::array();
  for (const AttackConfig& a : cfg.attacks) attacks.push_back(to_json(a));
  json out = {{"name", cfg.name},         {"seed", cfg.seed},
              {"output_dir", cfg.output_dir}, {"dataset", dataset},
              {"model", model},           {"trainer", trainer},
              {"attacks", attacks}};
  if (cfg.smoothing) {
    const SmoothingConfig& s = *cfg.smoothing;
    out["smoothing"] = {{"sigma", s.sigma},
                        {"n_samples", s.n_samples},
                        {"abstain_margin", s.abstain_margin},
                        {"seed", s.seed}};
  }
  return out;
}

ExperimentConfig parse_config_json(const json& doc) {
  Reader r(doc, "");
  ExperimentConfig cfg;
  cfg.name = r.string("name", cfg.name);
  require(!cfg.name.empty() &&
              cfg.name.find_first_not_of(
                  "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
                  "0123456789_-.") == std::string::npos &&
              cfg.name != "." && cfg.name != "..",
          "name", "must be a non-empty filesystem-safe name [A-Za-z0-9_.-]");
  cfg.seed = r.uint("seed", cfg.seed);
  cfg.output_dir = r.string("output_dir", "runs/" + cfg.name);

  if (const json* d = r.find("dataset")) {
    Reader dr(*d, "dataset");
    DatasetSpec& s = cfg.dataset;
    s.kind = parse_enum(dr, "kind", s.kind,
                        {{"mnist", DatasetKind::kMnist},
                         {"two_gaussians", DatasetKind::kTwoGaussians}});
    s.val_fraction = dr.number("val_fraction", s.val_fraction);
    require(s.val_fraction >= 0.0 && s.val_fraction < 1.0,
            "dataset.val_fraction", "must be in [0, 1)");
    if (s.kind == DatasetKind::kMnist) {
      if (const json* dir = dr.find("dir")) {
        require(dir->is_string(), "dataset.dir", "expected a string");
        s.dir = dir->get<std::string>();
      }
      s.classes = dr.uint_list("classes", s.classes);
      require(s.classes.empty() ||
                  (s.classes.size() == 2 && s.classes[0] != s.classes[1] &&
                   s.classes[0] < 10 && s.classes[1] < 10),
              "dataset.classes", "expected [] or two distinct digits");
      s.cap_per_class = dr.uint("cap_per_class", s.cap_per_class);
      s.test_samples = dr.uint("test_samples", s.test_samples);
    } else {
      s.train_n = dr.uint("train_n", s.train_n);
      s.test_n = dr.uint("test_n", s.test_n);
      s.separation = dr.number("separation", s.separation);
      require(s.train_n >= 2 && s.train_n % 2 == 0, "dataset.train_n",
              "must be even and >= 2");
      require(s.test_n >= 2 && s.test_n % 2 == 0, "dataset.test_n",
              "must be even and >= 2");
    }
    dr.finish();
  }

  if (const json* m = r.find("model")) {
    Reader mr(*m, "model");
    cfg.model.kind = parse_enum(
        mr, "kind", cfg.model.kind,
        {{"mlp", ModelKind::kMlp}, {"cnn", ModelKind::kCnn}});
    cfg.model.hidden = mr.uint_list("hidden", cfg.model.hidden);
    if (cfg.model.kind == ModelKind::kCnn) {
      cfg.model.conv_channels =
          mr.uint_list("conv_channels", cfg.model.conv_channels);
    }
    mr.finish();
    for (std::size_t h : cfg.model.hidden) {
      require(h > 0, "model.hidden", "widths must be > 0");
    }
    for (std::size_t c : cfg.model.conv_channels) {
      require(c > 0, "model.conv_channels", "channels must be > 0");
    }
  }

  if (const json* t = r.find("trainer")) {
    cfg.trainer = parse_trainer(*t, "trainer", cfg.seed);
  } else {
    cfg.trainer.seed = cfg.seed;
  }

  if (const json* a = r.find("attacks")) {
    require(a->is_array(), "attacks", "expected an array");
    for (std::size_t i = 0; i < a->size(); ++i) {
      const std::uint64_t derived =
          Rng::stream(cfg.seed, {kAttackStream, 0xc0f16, i}).next_u64();
      cfg.attacks.push_back(parse_attack(
          (*a)[i], "attacks[" + std::to_string(i) + "]", true, derived));
    }
  }

  if (const json* s = r.find("smoothing")) {
    Reader sr(*s, "smoothing");
    SmoothingConfig sc;
    sc.sigma = sr.number("sigma", sc.sigma);
    sc.n_samples = sr.uint("n_samples", sc.n_samples);
    sc.abstain_margin = sr.number("abstain_margin", sc.abstain_margin);
    sc.seed = sr.uint(
        "seed", Rng::stream(cfg.seed, {kSmoothingStream, 0xc0f16}).next_u64());
    sr.finish();
    require(sc.sigma >= 0.0, "smoothing.sigma", "must be >= 0");
    require(sc.n_samples >= 1, "smoothing.n_samples", "must be >= 1");
    require(sc.abstain_margin >= 0.0 && sc.abstain_margin < 0.5,
            "smoothing.abstain_margin", "must be in [0, 0.5)");
    cfg.smoothing = sc;
  }
  r.finish();
  return cfg;
}

ExperimentConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": JSON syntax error: " + e.what());
  }
  try {
    return parse_config_json(doc);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace atent
