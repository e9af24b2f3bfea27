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

#include "buildseg/model/checkpoint.h"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

#include "buildseg/core/error.h"

namespace buildseg::model {

namespace {

void put_le(std::vector<char>& out, std::uint64_t value, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
}

std::uint64_t get_le(const char* p, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return v;
}

}  // namespace

nlohmann::json config_to_json(const ModelConfig& config) {
  nlohmann::json stages = nlohmann::json::array();
  for (const auto& s : config.stages) {
    stages.push_back({{"patch_kernel", s.patch_kernel},
                      {"patch_stride", s.patch_stride},
                      {"patch_pad", s.patch_pad},
                      {"embed_dim", s.embed_dim},
                      {"num_heads", s.num_heads},
                      {"sr_ratio", s.sr_ratio},
                      {"depth", s.depth}});
  }
  return {{"in_channels", config.in_channels},
          {"stages", stages},
          {"ffn_expansion", config.ffn_expansion},
          {"decoder_dim", config.decoder_dim},
          {"num_classes", config.num_classes}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
  try {
    ModelConfig c;
    c.in_channels = j.at("in_channels").get<int>();
    c.ffn_expansion = j.at("ffn_expansion").get<int>();
    c.decoder_dim = j.at("decoder_dim").get<int>();
    c.num_classes = j.at("num_classes").get<int>();
    for (const auto& s : j.at("stages")) {
      c.stages.push_back(StageConfig{s.at("patch_kernel").get<int>(), s.at("patch_stride").get<int>(),
                                     s.at("patch_pad").get<int>(), s.at("embed_dim").get<int>(),
                                     s.at("num_heads").get<int>(), s.at("sr_ratio").get<int>(),
                                     s.at("depth").get<int>()});
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed model config: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const ModelConfig& config, const ParameterSet<float>& params) {
  check_parameters(config, params);
  nlohmann::json entries = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, t] : params) {
    for (const float v : t.data()) {
      if (!std::isfinite(v)) throw NumericError("refusing to save non-finite parameter '" + name + "'");
    }
    entries.push_back({{"name", name}, {"dtype", "f32"}, {"shape", t.shape()}, {"offset", offset}});
    offset += t.numel() * sizeof(float);
  }
  const std::string header = nlohmann::json{{"config", config_to_json(config)}, {"parameters", entries}}.dump();

  std::vector<char> bytes(std::begin(kCheckpointMagic), std::end(kCheckpointMagic));
  put_le(bytes, kCheckpointVersion, 4);
  put_le(bytes, header.size(), 8);
  bytes.insert(bytes.end(), header.begin(), header.end());
  bytes.reserve(bytes.size() + offset);
  for (const auto& [name, t] : params) {
    for (const float v : t.data()) put_le(bytes, std::bit_cast<std::uint32_t>(v), 4);
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open checkpoint for writing: " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing checkpoint: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path.string());
  const std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string where = " in " + path.string();

  constexpr std::size_t kPrefix = 4 + 4 + 8;
  if (bytes.size() < kPrefix) throw FormatError("truncated checkpoint header" + where);
  if (std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0) throw FormatError("bad checkpoint magic" + where);
  const auto version = static_cast<std::uint32_t>(get_le(bytes.data() + 4, 4));
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version) + where);
  }
  const std::uint64_t header_len = get_le(bytes.data() + 8, 8);
  if (header_len > bytes.size() - kPrefix) throw FormatError("truncated checkpoint header" + where);

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin() + kPrefix, bytes.begin() + static_cast<std::ptrdiff_t>(kPrefix + header_len));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("unreadable checkpoint header" + where + ": " + e.what());
  }

  Checkpoint ckpt;
  ckpt.format_version = version;
  ckpt.config = config_from_json(header.at("config"));
  const std::size_t blob_start = kPrefix + header_len;
  const std::size_t blob_size = bytes.size() - blob_start;
  try {
    for (const auto& entry : header.at("parameters")) {
      const auto name = entry.at("name").get<std::string>();
      if (entry.at("dtype").get<std::string>() != "f32") throw FormatError("unsupported dtype for '" + name + "'" + where);
      const auto shape = entry.at("shape").get<tensor::Shape>();
      const auto offset = entry.at("offset").get<std::uint64_t>();
      const std::size_t n = tensor::shape_numel(shape);
      if (offset > blob_size || n * sizeof(float) > blob_size - offset) {
        throw FormatError("truncated checkpoint: parameter '" + name + "' extends past end of file" + where);
      }
      std::vector<float> values(n);
      const char* p = bytes.data() + blob_start + offset;
      for (std::size_t i = 0; i < n; ++i) {
        values[i] = std::bit_cast<float>(static_cast<std::uint32_t>(get_le(p + 4 * i, 4)));
      }
      ckpt.params.add(name, tensor::Tensor<float>(shape, std::move(values)));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("malformed checkpoint header" + where + ": " + e.what());
  }
  check_parameters(ckpt.config, ckpt.params);
  return ckpt;
}

ParameterSet<float> load_checkpoint_for(const std::filesystem::path& path, const ModelConfig& target) {
  auto ckpt = load_checkpoint(path);
  check_parameters(target, ckpt.params);
  return std::move(ckpt.params);
}

}  // namespace buildseg::model
