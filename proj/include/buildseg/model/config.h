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

#include <cstddef>
#include <string>
#include <vector>

#include "buildseg/tensor/tensor.h"

namespace buildseg::model {

struct StageConfig {
  int patch_kernel = 3;
  int patch_stride = 2;
  int patch_pad = 1;
  int embed_dim = 32;
  int num_heads = 1;
  int sr_ratio = 1;  // key/value spatial reduction
  int depth = 1;     // transformer blocks

  bool operator==(const StageConfig&) const = default;
};

// Architecture hyperparameters of the hierarchical encoder and MLP decoder.
struct ModelConfig {
  int in_channels = 3;
  std::vector<StageConfig> stages;
  int ffn_expansion = 4;
  int decoder_dim = 64;
  int num_classes = 2;

  // Throws ConfigError describing the first violated constraint.
  void validate() const;

  // Product of patch strides; input sides must be divisible by it.
  int total_stride() const;

  // Four stages, widths [32, 64, 160, 256].
  static ModelConfig small_preset();
  // Two stages, widths [8, 16], one block each.
  static ModelConfig tiny_preset();

  bool operator==(const ModelConfig&) const = default;
};

enum class ParamKind { kWeight, kBias, kNormGamma, kNormBeta };

struct ParamSpec {
  std::string name;
  tensor::Shape shape;
  ParamKind kind;
};

// Canonical, ordered list of every parameter the config implies.
std::vector<ParamSpec> parameter_specs(const ModelConfig& config);

}  // namespace buildseg::model
