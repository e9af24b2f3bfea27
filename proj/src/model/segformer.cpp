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

#include "buildseg/model/segformer.h"

#include "buildseg/core/error.h"
#include "buildseg/model/attention.h"
#include "buildseg/tensor/ops.h"

namespace buildseg::model {

using tensor::Tensor;

namespace {

// ImageNet statistics on the 0..255 scale.
constexpr double kPixelMean[3] = {123.675, 116.28, 103.53};
constexpr double kPixelStd[3] = {58.395, 57.12, 57.375};

template <typename T>
Tensor<T> norm(const Tensor<T>& x, const ParameterSet<T>& params, const std::string& prefix) {
  return tensor::layer_norm(x, params.at(prefix + ".weight"), params.at(prefix + ".bias"));
}

template <typename T>
Tensor<T> dense(const Tensor<T>& x, const ParameterSet<T>& params, const std::string& prefix) {
  return linear(x, params.at(prefix + ".weight"), params.at(prefix + ".bias"));
}

// tokens[(h*w) x c] <-> grid[c x h x w]
template <typename T>
Tensor<T> tokens_to_grid(const Tensor<T>& tokens, std::size_t h, std::size_t w) {
  return tensor::reshape(tensor::transpose(tokens), {tokens.dim(1), h, w});
}

template <typename T>
Tensor<T> grid_to_tokens(const Tensor<T>& grid) {
  return tensor::transpose(tensor::reshape(grid, {grid.dim(0), grid.dim(1) * grid.dim(2)}));
}

}  // namespace

template <typename T>
Tensor<T> transformer_block(const Tensor<T>& x, const ModelConfig& config, std::size_t stage,
                            const ParameterSet<T>& params, const std::string& prefix, std::size_t h,
                            std::size_t w) {
  const auto& sc = config.stages.at(stage);
  AttentionParams<T> attn{
      params.at(prefix + ".attn.q.weight"),    params.at(prefix + ".attn.q.bias"),
      params.at(prefix + ".attn.k.weight"),    params.at(prefix + ".attn.k.bias"),
      params.at(prefix + ".attn.v.weight"),    params.at(prefix + ".attn.v.bias"),
      params.at(prefix + ".attn.proj.weight"), params.at(prefix + ".attn.proj.bias"),
      {},                                      {},
  };
  if (sc.sr_ratio > 1) {
    attn.sr_weight = params.at(prefix + ".attn.sr.weight");
    attn.sr_bias = params.at(prefix + ".attn.sr.bias");
  }
  auto attended = multi_head_attention(norm(x, params, prefix + ".norm1"), attn,
                                       static_cast<std::size_t>(sc.num_heads),
                                       static_cast<std::size_t>(sc.sr_ratio), h, w);
  auto y = tensor::add(x, attended);
  auto hidden = tensor::gelu(dense(norm(y, params, prefix + ".norm2"), params, prefix + ".ffn.fc1"));
  return tensor::add(y, dense(hidden, params, prefix + ".ffn.fc2"));
}

template <typename T>
std::vector<FeatureMap<T>> encoder_forward(const Tensor<T>& img, const ModelConfig& config,
                                           const ParameterSet<T>& params) {
  config.validate();
  if (img.rank() != 3 || img.dim(0) != static_cast<std::size_t>(config.in_channels)) {
    throw ShapeError("encoder input must be [" + std::to_string(config.in_channels) + " x H x W], got " +
                     tensor::shape_str(img.shape()));
  }
  const auto stride = static_cast<std::size_t>(config.total_stride());
  if (img.dim(1) % stride != 0 || img.dim(2) % stride != 0) {
    throw ShapeError("input " + std::to_string(img.dim(1)) + "x" + std::to_string(img.dim(2)) +
                     " is not divisible by the encoder stride " + std::to_string(stride));
  }
  std::vector<FeatureMap<T>> features;
  Tensor<T> grid = img;
  for (std::size_t i = 0; i < config.stages.size(); ++i) {
    const auto& sc = config.stages[i];
    const std::string stage = "stage" + std::to_string(i + 1);
    auto embedded = tensor::conv2d(grid, params.at(stage + ".patch_embed.weight"),
                                   static_cast<std::size_t>(sc.patch_stride), static_cast<std::size_t>(sc.patch_pad));
    const std::size_t h = embedded.dim(1), w = embedded.dim(2);
    auto tokens = tensor::add_bias(grid_to_tokens(embedded), params.at(stage + ".patch_embed.bias"));
    tokens = norm(tokens, params, stage + ".patch_embed.norm");
    for (int j = 0; j < sc.depth; ++j) {
      tokens = transformer_block(tokens, config, i, params, stage + ".block" + std::to_string(j + 1), h, w);
    }
    tokens = norm(tokens, params, stage + ".norm");
    if (i + 1 < config.stages.size()) grid = tokens_to_grid(tokens, h, w);
    features.push_back(FeatureMap<T>{tokens, h, w});
  }
  return features;
}

template <typename T>
Tensor<T> decode_head_forward(const std::vector<FeatureMap<T>>& features, const ModelConfig& config,
                              const ParameterSet<T>& params, std::size_t out_h, std::size_t out_w) {
  if (features.size() != config.stages.size()) {
    throw ShapeError("decode head expects " + std::to_string(config.stages.size()) + " feature maps, got " +
                     std::to_string(features.size()));
  }
  const std::size_t h1 = features.front().height, w1 = features.front().width;
  std::vector<Tensor<T>> projected;
  projected.reserve(features.size());
  for (std::size_t i = 0; i < features.size(); ++i) {
    const auto& f = features[i];
    auto grid = tokens_to_grid(dense(f.tokens, params, "head.linear" + std::to_string(i + 1)), f.height, f.width);
    if (f.height != h1 || f.width != w1) grid = tensor::bilinear_resize(grid, h1, w1, false);
    projected.push_back(grid);
  }
  auto fused = projected.size() == 1 ? projected.front() : tensor::concat(projected, 0);
  auto tokens = tensor::gelu(dense(grid_to_tokens(fused), params, "head.fuse"));
  auto logits = tokens_to_grid(dense(tokens, params, "head.cls"), h1, w1);
  if (h1 == out_h && w1 == out_w) return logits;
  return tensor::bilinear_resize(logits, out_h, out_w, false);
}

template <typename T>
Tensor<T> model_forward(const Tensor<T>& img, const ModelConfig& config, const ParameterSet<T>& params) {
  return decode_head_forward(encoder_forward(img, config, params), config, params, img.dim(1), img.dim(2));
}

template <typename T>
Tensor<T> image_to_tensor(const RgbImage& image) {
  const auto h = static_cast<std::size_t>(image.height), w = static_cast<std::size_t>(image.width);
  std::vector<T> values(3 * h * w);
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < h * w; ++i) {
      values[c * h * w + i] = static_cast<T>((image.pixels[i * 3 + c] - kPixelMean[c]) / kPixelStd[c]);
    }
  }
  return Tensor<T>({3, h, w}, std::move(values));
}

Mask logits_to_mask(const Tensor<float>& logits) {
  if (logits.rank() != 3 || logits.dim(0) != 2) {
    throw ShapeError("expected logits [2 x H x W], got " + tensor::shape_str(logits.shape()));
  }
  const auto h = static_cast<int>(logits.dim(1)), w = static_cast<int>(logits.dim(2));
  const std::size_t plane = logits.dim(1) * logits.dim(2);
  std::vector<std::uint8_t> values(plane);
  const auto x = logits.data();
  for (std::size_t i = 0; i < plane; ++i) values[i] = x[plane + i] > x[i] ? 1 : 0;
  return Mask(w, h, std::move(values));
}

Model::Model(ModelConfig c, ParameterSet<float> p) : config(std::move(c)), params(std::move(p)) {
  check_parameters(config, params);
}

Model Model::initialized(ModelConfig config, std::uint64_t seed) {
  auto params = init_weights<float>(config, seed);
  return Model(std::move(config), std::move(params));
}

Tensor<float> Model::forward(const RgbImage& image) const {
  return model_forward(image_to_tensor<float>(image), config, params);
}

Mask Model::predict(const RgbImage& image) const { return logits_to_mask(forward(image)); }

#define BUILDSEG_INSTANTIATE_SEGFORMER(T)                                                                      \
  template Tensor<T> transformer_block(const Tensor<T>&, const ModelConfig&, std::size_t,                      \
                                       const ParameterSet<T>&, const std::string&, std::size_t, std::size_t);  \
  template std::vector<FeatureMap<T>> encoder_forward(const Tensor<T>&, const ModelConfig&,                    \
                                                      const ParameterSet<T>&);                                 \
  template Tensor<T> decode_head_forward(const std::vector<FeatureMap<T>>&, const ModelConfig&,                \
                                         const ParameterSet<T>&, std::size_t, std::size_t);                    \
  template Tensor<T> model_forward(const Tensor<T>&, const ModelConfig&, const ParameterSet<T>&);              \
  template Tensor<T> image_to_tensor(const RgbImage&);

BUILDSEG_INSTANTIATE_SEGFORMER(float)
BUILDSEG_INSTANTIATE_SEGFORMER(double)

#undef BUILDSEG_INSTANTIATE_SEGFORMER

}  // namespace buildseg::model
