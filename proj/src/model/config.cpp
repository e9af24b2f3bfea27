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

#include "buildseg/model/config.h"

#include "buildseg/core/error.h"

namespace buildseg::model {

void ModelConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("invalid model config: " + what); };
  if (in_channels < 1) fail("in_channels must be >= 1");
  if (stages.empty()) fail("at least one stage is required");
  if (num_classes != 2) fail("num_classes must be 2 (building vs background)");
  if (ffn_expansion < 1) fail("ffn_expansion must be >= 1");
  if (decoder_dim < 1) fail("decoder_dim must be >= 1");
  for (std::size_t i = 0; i < stages.size(); ++i) {
    const auto& s = stages[i];
    const std::string tag = "stage " + std::to_string(i + 1) + ": ";
    if (s.patch_kernel < 1 || s.patch_stride < 1 || s.patch_pad < 0) fail(tag + "bad patch geometry");
    if (i > 0 && s.patch_stride < 2) fail(tag + "stride must be >= 2 after the first stage");
    if (s.embed_dim < 1 || s.num_heads < 1) fail(tag + "embed_dim and num_heads must be >= 1");
    if (s.embed_dim % s.num_heads != 0) fail(tag + "embed_dim not divisible by num_heads");
    if (s.sr_ratio < 1) fail(tag + "sr_ratio must be >= 1");
    if (s.depth < 0) fail(tag + "depth must be >= 0");
  }
}

int ModelConfig::total_stride() const {
  int stride = 1;
  for (const auto& s : stages) stride *= s.patch_stride;
  return stride;
}

ModelConfig ModelConfig::small_preset() {
  ModelConfig c;
  c.stages = {
      {7, 4, 3, 32, 1, 8, 2},
      {3, 2, 1, 64, 2, 4, 2},
      {3, 2, 1, 160, 5, 2, 2},
      {3, 2, 1, 256, 8, 1, 2},
  };
  c.ffn_expansion = 4;
  c.decoder_dim = 128;
  return c;
}

ModelConfig ModelConfig::tiny_preset() {
  ModelConfig c;
  c.stages = {
      {7, 4, 3, 8, 1, 4, 1},
      {3, 2, 1, 16, 2, 2, 1},
  };
  c.ffn_expansion = 4;
  c.decoder_dim = 16;
  return c;
}

std::vector<ParamSpec> parameter_specs(const ModelConfig& config) {
  config.validate();
  std::vector<ParamSpec> specs;
  auto linear = [&specs](const std::string& prefix, std::size_t in, std::size_t out) {
    specs.push_back({prefix + ".weight", {in, out}, ParamKind::kWeight});
    specs.push_back({prefix + ".bias", {out}, ParamKind::kBias});
  };
  auto norm = [&specs](const std::string& prefix, std::size_t d) {
    specs.push_back({prefix + ".weight", {d}, ParamKind::kNormGamma});
    specs.push_back({prefix + ".bias", {d}, ParamKind::kNormBeta});
  };
  auto channels = static_cast<std::size_t>(config.in_channels);
  for (std::size_t i = 0; i < config.stages.size(); ++i) {
    const auto& s = config.stages[i];
    const auto d = static_cast<std::size_t>(s.embed_dim);
    const auto k = static_cast<std::size_t>(s.patch_kernel);
    const std::string stage = "stage" + std::to_string(i + 1);
    specs.push_back({stage + ".patch_embed.weight", {d, channels, k, k}, ParamKind::kWeight});
    specs.push_back({stage + ".patch_embed.bias", {d}, ParamKind::kBias});
    norm(stage + ".patch_embed.norm", d);
    for (int j = 0; j < s.depth; ++j) {
      const std::string block = stage + ".block" + std::to_string(j + 1);
      norm(block + ".norm1", d);
      linear(block + ".attn.q", d, d);
      linear(block + ".attn.k", d, d);
      linear(block + ".attn.v", d, d);
      if (s.sr_ratio > 1) linear(block + ".attn.sr", d, d);
      linear(block + ".attn.proj", d, d);
      norm(block + ".norm2", d);
      const auto hidden = d * static_cast<std::size_t>(config.ffn_expansion);
      linear(block + ".ffn.fc1", d, hidden);
      linear(block + ".ffn.fc2", hidden, d);
    }
    norm(stage + ".norm", d);
    channels = d;
  }
  const auto dec = static_cast<std::size_t>(config.decoder_dim);
  for (std::size_t i = 0; i < config.stages.size(); ++i) {
    linear("head.linear" + std::to_string(i + 1), static_cast<std::size_t>(config.stages[i].embed_dim), dec);
  }
  linear("head.fuse", dec * config.stages.size(), dec);
  linear("head.cls", dec, static_cast<std::size_t>(config.num_classes));
  return specs;
}

}  // namespace buildseg::model
