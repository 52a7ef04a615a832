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

// Experiment configuration: a strict JSON key tree. Unknown keys, wrong
// types and out-of-range values raise ConfigError with the key path.

#ifndef ATENT_CONFIG_HPP_
#define ATENT_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "atent/attacks.hpp"
#include "atent/defenses.hpp"
#include "atent/smoothing.hpp"

namespace atent {

enum class DatasetKind { kMnist, kTwoGaussians };

struct DatasetSpec {
  DatasetKind kind = DatasetKind::kMnist;
  // kMnist: directory holding {train,t10k}-{images-idx3,labels-idx1}-ubyte
  // (optionally .gz). Unset: $ATENT_DATA_DIR, else data/mnist58.
  std::optional<std::string> dir;
  // kMnist: keep two digits and relabel them 0/1; empty keeps all ten.
  std::vector<std::size_t> classes = {5, 8};
  std::size_t cap_per_class = 0;  // 0 = no cap, applied to the train split
  std::size_t test_samples = 0;   // 0 = all
  // kTwoGaussians.
  std::size_t train_n = 400;
  std::size_t test_n = 400;
  double separation = 4.0;
  // Held out of the training set for early stopping.
  double val_fraction = 0.1;

  bool operator==(const DatasetSpec&) const = default;
};

struct ModelSpec {
  ModelKind kind = ModelKind::kMlp;
  std::vector<std::size_t> hidden = {64, 64};
  std::vector<std::size_t> conv_channels = {8, 16};  // cnn only

  bool operator==(const ModelSpec&) const = default;
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::uint64_t seed = 0;
  std::string output_dir = "runs/experiment";
  DatasetSpec dataset;
  ModelSpec model;
  TrainerConfig trainer;
  std::vector<AttackConfig> attacks;
  std::optional<SmoothingConfig> smoothing;
};

// Strict parse. Seeds of the trainer, attacks without an explicit seed,
// and smoothing derive from the master seed.
ExperimentConfig parse_config_json(const nlohmann::json& doc);
ExperimentConfig parse_config(const std::filesystem::path& path);

// Full key tree with every default spelled out; parses back to the same
// config.
nlohmann::json to_json(const ExperimentConfig& cfg);

nlohmann::json to_json(const AttackConfig& cfg);
nlohmann::json to_json(const GibbsSamplerConfig& cfg);
nlohmann::json to_json(const Architecture& arch);
Architecture architecture_from_json(const nlohmann::json& doc);

}  // namespace atent

#endif  // ATENT_CONFIG_HPP_
