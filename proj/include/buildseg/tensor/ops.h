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

// Differentiable kernels. Every op records itself on the tape of its tracked
// inputs (if any) and throws NumericError when its forward result contains a
// NaN or infinity.
namespace buildseg::tensor {

// [m x k] * [k x n] -> [m x n]
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);

// [m x n] -> [n x m]
template <typename T>
Tensor<T> transpose(const Tensor<T>& a);

// Same data in a new shape with identical element count.
template <typename T>
Tensor<T> reshape(const Tensor<T>& a, Shape shape);

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> add(const Tensor<T>& a, T b);
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor);

// Adds bias[d] to every slice along the last axis of x[... x d].
template <typename T>
Tensor<T> add_bias(const Tensor<T>& x, const Tensor<T>& bias);

// Scalar reductions (shape []).
template <typename T>
Tensor<T> sum(const Tensor<T>& x);
template <typename T>
Tensor<T> mean(const Tensor<T>& x);

// Softmax over the last axis with per-slice max subtraction.
template <typename T>
Tensor<T> softmax_rows(const Tensor<T>& x);

inline constexpr double kLayerNormEps = 1e-6;

// Normalises each last-axis slice to zero mean / unit variance, then applies
// gamma and beta.
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                     T eps = static_cast<T>(kLayerNormEps));

// Exact GELU, x * Phi(x).
template <typename T>
Tensor<T> gelu(const Tensor<T>& x);

// x[C x H x W] -> columns[(C*k*k) x (H'*W')] with zero padding.
template <typename T>
Tensor<T> im2col(const Tensor<T>& x, std::size_t kernel, std::size_t stride, std::size_t pad);

// Cross-correlation of x[C_in x H x W] with kernels[C_out x C_in x k x k].
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& kernels, std::size_t stride, std::size_t pad);

std::size_t conv_output_size(std::size_t input, std::size_t kernel, std::size_t stride, std::size_t pad);

// x[C x H x W] -> [C x out_h x out_w]. With align_corners == false the source
// coordinate is (i + 0.5) * H / out_h - 0.5, clamped to the image.
template <typename T>
Tensor<T> bilinear_resize(const Tensor<T>& x, std::size_t out_h, std::size_t out_w, bool align_corners);

// Non-overlapping r x r mean pooling of x[C x H x W]; r must divide H and W.
template <typename T>
Tensor<T> avg_pool2d(const Tensor<T>& x, std::size_t r);

template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts, std::size_t axis);

template <typename T>
Tensor<T> slice(const Tensor<T>& x, std::size_t axis, std::size_t start, std::size_t length);

}  // namespace buildseg::tensor
