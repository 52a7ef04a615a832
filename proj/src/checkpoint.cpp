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

#include "atent/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <limits>

#include "atent/config.hpp"
#include "atent/io.hpp"

namespace atent {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "checkpoint encoding assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'A', 'T', 'N', 'T'};
constexpr const char* kBestPrefix = "best/";

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

class Cursor {
 public:
  explicit Cursor(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T take() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::string_view take_bytes(std::size_t n) {
    need(n);
    std::string_view v = bytes_.substr(pos_, n);
    pos_ += n;
    return v;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw FormatError("checkpoint is truncated");
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

json entry_list(std::span<const NamedTensor> entries) {
  json list = json::array();
  for (const NamedTensor& e : entries) {
    list.push_back({{"name", e.name}, {"shape", e.value.shape()}});
  }
  return list;
}

void check_against_manifest(const std::vector<NamedTensor>& entries,
                            const json& manifest) {
  const json& list = manifest.at("entries");
  if (!list.is_array() || list.size() != entries.size()) {
    throw FormatError("manifest entry count does not match the checkpoint");
  }
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto name = list[i].at("name").get<std::string>();
    const auto shape = list[i].at("shape").get<Shape>();
    if (name != entries[i].name || shape != entries[i].value.shape()) {
      throw FormatError("manifest entry " + name + " " + shape_string(shape) +
                        " disagrees with checkpoint entry " + entries[i].name +
                        " " + shape_string(entries[i].value.shape()));
    }
  }
}

struct Loaded {
  std::vector<NamedTensor> entries;
  json manifest;
};

Loaded load_pair(const std::filesystem::path& file) {
  Loaded out;
  out.entries = decode_atnt(read_file(file));
  try {
    out.manifest = json::parse(read_file(manifest_path(file)));
    if (out.manifest.at("format") != "ATNT" ||
        out.manifest.at("version") != kCheckpointVersion) {
      throw FormatError("manifest has an unexpected format or version");
    }
    check_against_manifest(out.entries, out.manifest);
  } catch (const json::exception& e) {
    throw FormatError("bad checkpoint manifest: " + std::string(e.what()));
  }
  return out;
}

ModelParams params_from(const Architecture& arch,
                        std::vector<NamedTensor> weights) {
  ModelParams p{arch, std::move(weights)};
  try {
    validate(p);
  } catch (const ShapeError& e) {
    throw FormatError(std::string("checkpoint does not fit its architecture: ") +
                      e.what());
  }
  return p;
}

void write_pair(const std::filesystem::path& file,
                std::span<const NamedTensor> entries, json manifest) {
  manifest["format"] = "ATNT";
  manifest["version"] = kCheckpointVersion;
  manifest["entries"] = entry_list(entries);
  // Binary first: a manifest never points at a missing or stale binary
  // unless the process dies between the two renames.
  atomic_write(file, encode_atnt(entries));
  atomic_write(manifest_path(file), manifest.dump(2) + "\n");
}

}  // namespace

std::string encode_atnt(std::span<const NamedTensor> entries) {
  std::string out(kMagic, 4);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(entries.size()));
  for (const NamedTensor& e : entries) {
    if (e.name.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw FormatError("entry name too long: " + e.name);
    }
    if (e.value.rank() > std::numeric_limits<std::uint8_t>::max()) {
      throw FormatError("entry rank too large: " + e.name);
    }
    put<std::uint16_t>(out, static_cast<std::uint16_t>(e.name.size()));
    out += e.name;
    put<std::uint8_t>(out, static_cast<std::uint8_t>(e.value.rank()));
    for (std::size_t d : e.value.shape()) {
      if (d > std::numeric_limits<std::uint32_t>::max()) {
        throw FormatError("extent too large in " + e.name);
      }
      put<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    }
    for (double v : e.value.values()) put<double>(out, v);
  }
  return out;
}

std::vector<NamedTensor> decode_atnt(std::string_view bytes) {
  Cursor c(bytes);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError("not an ATNT checkpoint (bad magic)");
  }
  c.take_bytes(4);
  const auto version = c.take<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " +
                      std::to_string(version));
  }
  const auto count = c.take<std::uint32_t>();
  std::vector<NamedTensor> out;
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor e;
    const auto len = c.take<std::uint16_t>();
    e.name = std::string(c.take_bytes(len));
    const auto rank = c.take<std::uint8_t>();
    Shape shape(rank);
    std::size_t total = 1;
    for (auto& d : shape) {
      d = c.take<std::uint32_t>();
      if (d == 0) throw FormatError("zero extent in " + e.name);
      total *= d;
    }
    if (total > (bytes.size() / sizeof(double))) {
      throw FormatError("checkpoint is truncated");
    }
    std::vector<double> values(total);
    for (double& v : values) v = c.take<double>();
    e.value = Tensor(std::move(shape), std::move(values));
    out.push_back(std::move(e));
  }
  if (!c.done()) throw FormatError("trailing bytes after checkpoint entries");
  return out;
}

std::filesystem::path manifest_path(const std::filesystem::path& file) {
  std::filesystem::path m = file;
  m += ".json";
  return m;
}

void save_checkpoint(const ModelParams& params,
                     const std::filesystem::path& file) {
  validate(params);
  write_pair(file, params.weights, {{"architecture", to_json(params.arch)}});
}

ModelParams load_checkpoint(const std::filesystem::path& file) {
  Loaded l = load_pair(file);
  Architecture arch;
  try {
    arch = architecture_from_json(l.manifest.at("architecture"));
  } catch (const json::exception& e) {
    throw FormatError("manifest lacks an architecture: " +
                      std::string(e.what()));
  } catch (const ConfigError& e) {
    throw FormatError(std::string("bad architecture in manifest: ") +
                      e.what());
  }
  return params_from(arch, std::move(l.entries));
}

json to_json(const EpochMetrics& m) {
  json j;
  j["epoch"] = m.epoch;
  j["train_loss"] = m.train_loss;
  j["nat_acc"] = m.nat_acc;
  j["rob_acc"] = m.rob_acc;
  j["lr"] = m.lr;
  j["wall_ms"] = m.wall_ms;
  return j;
}

EpochMetrics metrics_from_json(const json& j) {
  EpochMetrics m;
  m.epoch = j.at("epoch").get<std::size_t>();
  m.train_loss = j.at("train_loss").get<double>();
  m.nat_acc = j.at("nat_acc").get<double>();
  m.rob_acc = j.at("rob_acc").get<double>();
  m.lr = j.at("lr").get<double>();
  m.wall_ms = j.at("wall_ms").get<double>();
  return m;
}

void save_trainer_state(const TrainerState& state,
                        const std::filesystem::path& file) {
  validate(state.params);
  std::vector<NamedTensor> entries = state.params.weights;
  for (const NamedTensor& t : state.best_params.weights) {
    entries.push_back({kBestPrefix + t.name, t.value});
  }
  json history = json::array();
  for (const EpochMetrics& m : state.history) history.push_back(to_json(m));
  json trainer = {{"epoch", state.epoch},
                  {"best_metric", state.best_metric},
                  {"best_tiebreak", state.best_tiebreak},
                  {"best_epoch", state.best_epoch},
                  {"epochs_since_best", state.epochs_since_best},
                  {"stopped", state.stopped},
                  {"history", history}};
  write_pair(file, entries,
             {{"architecture", to_json(state.params.arch)},
              {"trainer", trainer}});
}

TrainerState load_trainer_state(const std::filesystem::path& file) {
  Loaded l = load_pair(file);
  try {
    const Architecture arch =
        architecture_from_json(l.manifest.at("architecture"));
    const std::size_t n = expected_weights(arch).size();
    if (l.entries.size() != 2 * n) {
      throw FormatError("trainer state needs current and best weights");
    }
    std::vector<NamedTensor> current(l.entries.begin(), l.entries.begin() + n);
    std::vector<NamedTensor> best;
    for (std::size_t i = n; i < 2 * n; ++i) {
      NamedTensor t = l.entries[i];
      if (t.name.rfind(kBestPrefix, 0) != 0) {
        throw FormatError("unexpected trainer state entry " + t.name);
      }
      t.name = t.name.substr(std::strlen(kBestPrefix));
      best.push_back(std::move(t));
    }
    TrainerState s;
    s.params = params_from(arch, std::move(current));
    s.best_params = params_from(arch, std::move(best));
    const json& tr = l.manifest.at("trainer");
    s.epoch = tr.at("epoch").get<std::size_t>();
    s.best_metric = tr.at("best_metric").get<double>();
    s.best_tiebreak = tr.at("best_tiebreak").get<double>();
    s.best_epoch = tr.at("best_epoch").get<std::size_t>();
    s.epochs_since_best = tr.at("epochs_since_best").get<std::size_t>();
    s.stopped = tr.at("stopped").get<bool>();
    for (const json& m : tr.at("history")) {
      s.history.push_back(metrics_from_json(m));
    }
    return s;
  } catch (const json::exception& e) {
    throw FormatError("bad trainer state manifest: " + std::string(e.what()));
  } catch (const ConfigError& e) {
    throw FormatError(std::string("bad architecture in manifest: ") +
                      e.what());
  }
}

}  // namespace atent
