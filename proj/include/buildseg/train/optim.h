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
#include <string>
#include <vector>

#include "buildseg/model/params.h"

namespace buildseg::train {

struct OptimConfig {
  double base_lr = 0.0006;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double weight_decay = 0.01;
  int warmup_iters = 1500;
  double warmup_ratio = 1e-6;
  double power = 1.0;
  double min_lr = 0.0;
  int max_iters = 2000;
  int batch_size = 8;
  double eps = 1e-8;
  std::uint64_t seed = 0;
  double clip_norm = 0.0;  // global L2 clip; 0 disables

  void validate() const;

  // Published constants: batch 32, warmup 1500.
  static OptimConfig published(int max_iters);
  // Batch 8, warmup min(1500, max_iters / 10).
  static OptimConfig desk(int max_iters = 2000);

  bool operator==(const OptimConfig&) const = default;
};

// Learning rate for 0-based iteration t in [0, max_iters].
double lr_at(int t, const OptimConfig& cfg);

template <typename T>
struct OptimState {
  std::vector<std::string> names;
  std::vector<std::vector<T>> m;
  std::vector<std::vector<T>> v;
  std::int64_t t = 0;
};

// Decoupled-decay Adam update from each parameter's gradient buffer. A
// parameter without a gradient buffer is treated as having zero gradient.
// Throws NumericError naming the first parameter with a non-finite gradient.
template <typename T>
void adamw_step(model::ParameterSet<T>& params, OptimState<T>& state, double lr, const OptimConfig& cfg);

}  // namespace buildseg::train
