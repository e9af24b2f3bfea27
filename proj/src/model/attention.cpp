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

#include "buildseg/model/attention.h"

#include <cmath>
#include <string>

#include "buildseg/core/error.h"
#include "buildseg/tensor/ops.h"

namespace buildseg::model {

using tensor::Tensor;

template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
  auto y = tensor::matmul(x, w);
  return b.defined() ? tensor::add_bias(y, b) : y;
}

template <typename T>
Tensor<T> scaled_dot_attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v, Tensor<T>* weights) {
  if (q.rank() != 2 || k.rank() != 2 || v.rank() != 2) throw ShapeError("attention operands must be matrices");
  if (q.dim(1) != k.dim(1)) {
    throw ShapeError("attention: Q " + tensor::shape_str(q.shape()) + " and K " + tensor::shape_str(k.shape()) +
                     " disagree on d_k");
  }
  if (k.dim(0) != v.dim(0)) {
    throw ShapeError("attention: K " + tensor::shape_str(k.shape()) + " and V " + tensor::shape_str(v.shape()) +
                     " disagree on row count");
  }
  const T inv_sqrt_dk = T{1} / std::sqrt(static_cast<T>(q.dim(1)));
  auto scores = tensor::scale(tensor::matmul(q, tensor::transpose(k)), inv_sqrt_dk);
  auto probs = tensor::softmax_rows(scores);
  if (weights) *weights = probs;
  return tensor::matmul(probs, v);
}

template <typename T>
Tensor<T> spatial_reduction(const Tensor<T>& x, std::size_t ratio, std::size_t h, std::size_t w,
                            const Tensor<T>& mix_weight, const Tensor<T>& mix_bias) {
  if (x.rank() != 2 || x.dim(0) != h * w) {
    throw ShapeError("spatial_reduction: tokens " + tensor::shape_str(x.shape()) + " do not form a " +
                     std::to_string(h) + "x" + std::to_string(w) + " grid");
  }
  if (ratio < 1 || h % ratio != 0 || w % ratio != 0) {
    throw ShapeError("spatial_reduction: ratio " + std::to_string(ratio) + " does not divide " + std::to_string(h) +
                     "x" + std::to_string(w));
  }
  if (ratio == 1) return x;
  const std::size_t d = x.dim(1);
  auto grid = tensor::reshape(tensor::transpose(x), {d, h, w});
  auto pooled = tensor::avg_pool2d(grid, ratio);
  auto tokens = tensor::transpose(tensor::reshape(pooled, {d, (h / ratio) * (w / ratio)}));
  return linear(tokens, mix_weight, mix_bias);
}

template <typename T>
Tensor<T> multi_head_attention(const Tensor<T>& x, const AttentionParams<T>& p, std::size_t num_heads,
                               std::size_t sr_ratio, std::size_t h, std::size_t w,
                               std::vector<Tensor<T>>* head_weights) {
  if (x.rank() != 2 || x.dim(0) != h * w) {
    throw ShapeError("multi_head_attention: " + std::to_string(x.rank() == 2 ? x.dim(0) : 0) +
                     " tokens do not match spatial size " + std::to_string(h) + "x" + std::to_string(w));
  }
  const std::size_t d = x.dim(1);
  if (num_heads < 1 || d % num_heads != 0) {
    throw ShapeError("multi_head_attention: width " + std::to_string(d) + " not divisible by " +
                     std::to_string(num_heads) + " heads");
  }
  const std::size_t head_dim = d / num_heads;
  const auto reduced = spatial_reduction(x, sr_ratio, h, w, p.sr_weight, p.sr_bias);
  const auto q = linear(x, p.q_weight, p.q_bias);
  const auto k = linear(reduced, p.k_weight, p.k_bias);
  const auto v = linear(reduced, p.v_weight, p.v_bias);
  if (head_weights) head_weights->clear();

  std::vector<Tensor<T>> heads;
  heads.reserve(num_heads);
  for (std::size_t i = 0; i < num_heads; ++i) {
    if (num_heads == 1) {
      heads.push_back(scaled_dot_attention(q, k, v, head_weights ? &head_weights->emplace_back() : nullptr));
      continue;
    }
    const std::size_t start = i * head_dim;
    heads.push_back(scaled_dot_attention(tensor::slice(q, 1, start, head_dim), tensor::slice(k, 1, start, head_dim),
                                         tensor::slice(v, 1, start, head_dim),
                                         head_weights ? &head_weights->emplace_back() : nullptr));
  }
  const auto merged = num_heads == 1 ? heads.front() : tensor::concat(heads, 1);
  return linear(merged, p.out_weight, p.out_bias);
}

#define BUILDSEG_INSTANTIATE_ATTENTION(T)                                                                    \
  template Tensor<T> linear(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);                           \
  template Tensor<T> scaled_dot_attention(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, Tensor<T>*); \
  template Tensor<T> spatial_reduction(const Tensor<T>&, std::size_t, std::size_t, std::size_t,              \
                                       const Tensor<T>&, const Tensor<T>&);                                  \
  template Tensor<T> multi_head_attention(const Tensor<T>&, const AttentionParams<T>&, std::size_t,          \
                                          std::size_t, std::size_t, std::size_t, std::vector<Tensor<T>>*);

BUILDSEG_INSTANTIATE_ATTENTION(float)
BUILDSEG_INSTANTIATE_ATTENTION(double)

#undef BUILDSEG_INSTANTIATE_ATTENTION

}  // namespace buildseg::model
