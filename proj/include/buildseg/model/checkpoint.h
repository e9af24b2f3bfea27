// Copyright 2026 The buildseg Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "buildseg/model/config.h"
#include "buildseg/model/params.h"

namespace buildseg::model {

// Binary weight file:
//   "SABW" | u32 LE version | u64 LE header length | JSON header text |
//   raw little-endian float32 blobs in header order.
// The header lists name, dtype, shape and blob offset per parameter and
// embeds the model config.
inline constexpr char kCheckpointMagic[4] = {'S', 'A', 'B', 'W'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelConfig config;
  ParameterSet<float> params;
  std::uint32_t format_version = kCheckpointVersion;
};

nlohmann::json config_to_json(const ModelConfig& config);
ModelConfig config_from_json(const nlohmann::json& j);

// Throws NumericError if any parameter is non-finite, IoError on write failure.
void save_checkpoint(const std::filesystem::path& path, const ModelConfig& config, const ParameterSet<float>& params);

// Throws FormatError for bad magic, version, header or truncation.
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Loads and checks the stored weights against `target`; a ShapeError names
// the first offending parameter and counts the rest.
ParameterSet<float> load_checkpoint_for(const std::filesystem::path& path, const ModelConfig& target);

}  // namespace buildseg::model
