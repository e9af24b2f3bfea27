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
#include <vector>

#include "buildseg/tensor/tensor.h"

namespace buildseg::model {

// Projection weights of one attention layer. Each weight is [d x d] and
// multiplies row-vector tokens from the right; head i owns the column block
// [i*d/h, (i+1)*d/h) of q, k and v. Biases may be left undefined.
template <typename T>
struct AttentionParams {
  tensor::Tensor<T> q_weight, q_bias;
  tensor::Tensor<T> k_weight, k_bias;
  tensor::Tensor<T> v_weight, v_bias;
  tensor::Tensor<T> out_weight, out_bias;
  // Key/value reduction mixing, used only when sr_ratio > 1.
  tensor::Tensor<T> sr_weight, sr_bias;
};

// x * w + b, with b optional.
template <typename T>
tensor::Tensor<T> linear(const tensor::Tensor<T>& x, const tensor::Tensor<T>& w, const tensor::Tensor<T>& b);

// softmax(Q K^T / sqrt(d_k)) V for Q[n x d_k], K[m x d_k], V[m x d_v]. When
// `weights` is given it receives the [n x m] attention matrix.
template <typename T>
tensor::Tensor<T> scaled_dot_attention(const tensor::Tensor<T>& q, const tensor::Tensor<T>& k,
                                       const tensor::Tensor<T>& v, tensor::Tensor<T>* weights = nullptr);

// Tokens x[(h*w) x d] -> [((h/r)*(w/r)) x d]: r x r mean pooling followed by a
// learned d x d mixing. Identity for r == 1.
template <typename T>
tensor::Tensor<T> spatial_reduction(const tensor::Tensor<T>& x, std::size_t ratio, std::size_t h, std::size_t w,
                                    const tensor::Tensor<T>& mix_weight, const tensor::Tensor<T>& mix_bias);

// Concat(head_1, ..., head_H) W_O with head_i = Attention(x W_Qi, x_r W_Ki,
// x_r W_Vi), x_r the spatially reduced tokens.
template <typename T>
tensor::Tensor<T> multi_head_attention(const tensor::Tensor<T>& x, const AttentionParams<T>& params,
                                       std::size_t num_heads, std::size_t sr_ratio, std::size_t h, std::size_t w,
                                       std::vector<tensor::Tensor<T>>* head_weights = nullptr);

}  // namespace buildseg::model
