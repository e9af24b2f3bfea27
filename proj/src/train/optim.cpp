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

#include "buildseg/train/optim.h"

#include <algorithm>
#include <cmath>

#include "buildseg/core/error.h"

namespace buildseg::train {

void OptimConfig::validate() const {
  if (!(0.0 < beta1 && beta1 < beta2 && beta2 < 1.0)) throw ConfigError("optimizer betas must satisfy 0 < beta1 < beta2 < 1");
  if (max_iters < 1) throw ConfigError("max_iters must be at least 1");
  if (warmup_iters < 0 || warmup_iters > max_iters) throw ConfigError("warmup_iters must be in [0, max_iters]");
  if (!(base_lr > min_lr && min_lr >= 0.0)) throw ConfigError("learning rates must satisfy base_lr > min_lr >= 0");
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (!(eps > 0.0) || weight_decay < 0.0 || power < 0.0 || clip_norm < 0.0) {
    throw ConfigError("eps must be positive; weight_decay, power and clip_norm non-negative");
  }
  if (warmup_ratio < 0.0 || warmup_ratio > 1.0) throw ConfigError("warmup_ratio must be in [0, 1]");
}

OptimConfig OptimConfig::published(int max_iters) {
  OptimConfig c;
  c.max_iters = max_iters;
  c.batch_size = 32;
  c.warmup_iters = 1500;
  return c;
}

OptimConfig OptimConfig::desk(int max_iters) {
  OptimConfig c;
  c.max_iters = max_iters;
  c.batch_size = 8;
  c.warmup_iters = std::min(1500, max_iters / 10);
  return c;
}

double lr_at(int t, const OptimConfig& cfg) {
  if (t < 0 || t > cfg.max_iters) {
    throw ConfigError("iteration " + std::to_string(t) + " outside [0, " + std::to_string(cfg.max_iters) + "]");
  }
  if (t < cfg.warmup_iters) {
    const double k = (1.0 - static_cast<double>(t) / cfg.warmup_iters) * (1.0 - cfg.warmup_ratio);
    return cfg.base_lr * (1.0 - k);
  }
  if (cfg.max_iters == cfg.warmup_iters) return cfg.min_lr;
  const double progress = static_cast<double>(t - cfg.warmup_iters) / (cfg.max_iters - cfg.warmup_iters);
  return (cfg.base_lr - cfg.min_lr) * std::pow(1.0 - progress, cfg.power) + cfg.min_lr;
}

template <typename T>
void adamw_step(model::ParameterSet<T>& params, OptimState<T>& state, double lr, const OptimConfig& cfg) {
  if (!(lr >= 0.0)) throw ConfigError("learning rate must be non-negative");
  if (state.names.empty() && state.t == 0) {
    for (const auto& [name, p] : params) {
      state.names.push_back(name);
      state.m.emplace_back(p.numel(), T{0});
      state.v.emplace_back(p.numel(), T{0});
    }
  }
  if (state.names.size() != params.size()) throw ShapeError("optimizer state does not match the parameter set");

  // Check everything before touching anything.
  double sq_norm = 0.0;
  std::size_t i = 0;
  for (const auto& [name, p] : params) {
    if (state.names[i] != name || state.m[i].size() != p.numel()) {
      throw ShapeError("optimizer state for '" + state.names[i] + "' does not match parameter '" + name + "'");
    }
    if (p.has_grad()) {
      if (p.grad().size() != p.numel()) throw ShapeError("gradient of '" + name + "' has the wrong size");
      for (T g : p.grad()) {
        if (!std::isfinite(g)) throw NumericError("non-finite gradient in parameter '" + name + "'");
        sq_norm += static_cast<double>(g) * g;
      }
    }
    ++i;
  }
  const double clip = cfg.clip_norm > 0.0 && std::sqrt(sq_norm) > cfg.clip_norm ? cfg.clip_norm / std::sqrt(sq_norm) : 1.0;

  state.t += 1;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  i = 0;
  for (auto& [name, p] : params) {
    auto w = p.mutable_data();
    auto& m = state.m[i];
    auto& v = state.v[i];
    const bool has = p.has_grad();
    for (std::size_t k = 0; k < w.size(); ++k) {
      const double g = has ? static_cast<double>(p.grad()[k]) * clip : 0.0;
      const double mk = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g;
      const double vk = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g * g;
      m[k] = static_cast<T>(mk);
      v[k] = static_cast<T>(vk);
      const double step = (mk / c1) / (std::sqrt(vk / c2) + cfg.eps);
      const double wk = static_cast<double>(w[k]);
      w[k] = static_cast<T>(wk - lr * step - lr * cfg.weight_decay * wk);
    }
    ++i;
  }
}

template void adamw_step(model::ParameterSet<float>&, OptimState<float>&, double, const OptimConfig&);
template void adamw_step(model::ParameterSet<double>&, OptimState<double>&, double, const OptimConfig&);

}  // namespace buildseg::train
