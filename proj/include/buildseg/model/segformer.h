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
#include <optional>
#include <string>
#include <vector>

#include "buildseg/core/grid.h"
#include "buildseg/model/config.h"
#include "buildseg/model/params.h"
#include "buildseg/tensor/tensor.h"

namespace buildseg::model {

// One encoder stage output: tokens[(h*w) x channels] in row-major spatial order.
template <typename T>
struct FeatureMap {
  tensor::Tensor<T> tokens;
  std::size_t height = 0;
  std::size_t width = 0;

  std::size_t channels() const { return tokens.dim(1); }
};

// Pre-norm residual block: x + MHA(LN(x)), then + FFN(LN(.)). `prefix`
// names the block's parameters, e.g. "stage1.block1".
template <typename T>
tensor::Tensor<T> transformer_block(const tensor::Tensor<T>& x, const ModelConfig& config, std::size_t stage,
                                    const ParameterSet<T>& params, const std::string& prefix, std::size_t h,
                                    std::size_t w);

// img[C x H x W] -> one feature map per stage. H and W must be divisible by
// the config's total stride.
template <typename T>
std::vector<FeatureMap<T>> encoder_forward(const tensor::Tensor<T>& img, const ModelConfig& config,
                                           const ParameterSet<T>& params);

// All-MLP head: per-stage linear projection, bilinear upsampling to the first
// stage's grid, concatenation, fusion, classification, and a final resize to
// out_h x out_w. Returns logits[2 x out_h x out_w].
template <typename T>
tensor::Tensor<T> decode_head_forward(const std::vector<FeatureMap<T>>& features, const ModelConfig& config,
                                      const ParameterSet<T>& params, std::size_t out_h, std::size_t out_w);

// Encoder then decode head; channel 1 of the result is "building".
template <typename T>
tensor::Tensor<T> model_forward(const tensor::Tensor<T>& img, const ModelConfig& config,
                                const ParameterSet<T>& params);

// Per-channel mean/std normalisation of an RGB raster into [3 x H x W].
template <typename T>
tensor::Tensor<T> image_to_tensor(const RgbImage& image);

// Argmax over the two logit planes; ties go to background.
Mask logits_to_mask(const tensor::Tensor<float>& logits);

// Weights plus their architecture.
struct Model {
  ModelConfig config;
  ParameterSet<float> params;

  Model(ModelConfig c, ParameterSet<float> p);
  static Model initialized(ModelConfig config, std::uint64_t seed);

  tensor::Tensor<float> forward(const RgbImage& image) const;
  Mask predict(const RgbImage& image) const;
};

}  // namespace buildseg::model
