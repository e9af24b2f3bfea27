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

#include <optional>

#include "buildseg/core/grid.h"
#include "buildseg/tensor/tensor.h"

namespace buildseg::metrics {

inline constexpr double kProbabilityFloor = 1e-12;

// Mean pixel-wise two-class cross-entropy of logits[2 x H x W] against a
// binary target, -sum_c y_c log(p_c) with p = softmax over the channel axis.
// Only pixels inside `valid` (default: the whole grid) contribute.
// Probabilities are clamped to [1e-12, 1] before the log.
template <typename T>
tensor::Tensor<T> cross_entropy(const tensor::Tensor<T>& logits, const Mask& target,
                                std::optional<Rect> valid = std::nullopt);

}  // namespace buildseg::metrics
