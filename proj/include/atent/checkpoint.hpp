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

// Checkpoint format, all little-endian:
//   "ATNT" | version u32 = 1 | entry count u32 |
//   per entry: name length u16 | name bytes | rank u8 | extents u32 x rank |
//              values f64 x product(extents)
// plus a JSON manifest at <file>.json holding the architecture and the
// entry list, and for trainer states the loop counters and metric history.

#ifndef ATENT_CHECKPOINT_HPP_
#define ATENT_CHECKPOINT_HPP_

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "atent/defenses.hpp"
#include "atent/models.hpp"

namespace atent {

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string encode_atnt(std::span<const NamedTensor> entries);
// Throws FormatError on bad magic, version, truncation or trailing bytes.
std::vector<NamedTensor> decode_atnt(std::string_view bytes);

std::filesystem::path manifest_path(const std::filesystem::path& file);

void save_checkpoint(const ModelParams& params,
                     const std::filesystem::path& file);
// Throws FormatError when the binary, manifest and architecture disagree.
ModelParams load_checkpoint(const std::filesystem::path& file);

// Current and best params plus loop state, enough to resume training.
void save_trainer_state(const TrainerState& state,
                        const std::filesystem::path& file);
TrainerState load_trainer_state(const std::filesystem::path& file);

nlohmann::json to_json(const EpochMetrics& m);
EpochMetrics metrics_from_json(const nlohmann::json& j);

}  // namespace atent

#endif  // ATENT_CHECKPOINT_HPP_
