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
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "buildseg/core/error.h"
#include "buildseg/model/config.h"
#include "buildseg/tensor/tensor.h"

namespace buildseg::model {

// Ordered name -> tensor map holding a model's weights.
template <typename T>
class ParameterSet {
 public:
  using Entry = std::pair<std::string, tensor::Tensor<T>>;

  void add(std::string name, tensor::Tensor<T> value) {
    if (index_.contains(name)) throw Error("duplicate parameter '" + name + "'");
    index_.emplace(name, entries_.size());
    entries_.emplace_back(std::move(name), std::move(value));
  }

  bool contains(std::string_view name) const { return index_.contains(std::string(name)); }

  const tensor::Tensor<T>& at(std::string_view name) const { return entries_[lookup(name)].second; }
  tensor::Tensor<T>& at(std::string_view name) { return entries_[lookup(name)].second; }

  std::size_t size() const { return entries_.size(); }
  std::size_t total_elements() const {
    std::size_t n = 0;
    for (const auto& [name, t] : entries_) n += t.numel();
    return n;
  }

  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }
  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }

  // Every tensor registered as a leaf of `tape`; gradients land in this set's buffers.
  ParameterSet watched(tensor::Tape<T>& tape) const {
    ParameterSet out;
    for (const auto& [name, t] : entries_) out.add(name, tape.watch(t));
    return out;
  }

  // Shares data, with independent gradient buffers.
  ParameterSet aliased() const {
    ParameterSet out;
    for (const auto& [name, t] : entries_) out.add(name, t.alias());
    return out;
  }

  ParameterSet clone() const {
    ParameterSet out;
    for (const auto& [name, t] : entries_) out.add(name, t.clone());
    return out;
  }

  template <typename U>
  ParameterSet<U> cast() const {
    ParameterSet<U> out;
    for (const auto& [name, t] : entries_) out.add(name, t.template cast<U>());
    return out;
  }

  void zero_grad() {
    for (auto& [name, t] : entries_) t.zero_grad();
  }

 private:
  std::size_t lookup(std::string_view name) const {
    const auto it = index_.find(std::string(name));
    if (it == index_.end()) throw Error("unknown parameter '" + std::string(name) + "'");
    return it->second;
  }

  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Truncated normal (std 0.02, cut at +-2 std) for weights and kernels, zeros
// for biases and norm betas, ones for norm gammas. Fully determined by seed.
template <typename T>
ParameterSet<T> init_weights(const ModelConfig& config, std::uint64_t seed);

// Throws ShapeError listing every missing, extra or mis-shaped parameter.
template <typename T>
void check_parameters(const ModelConfig& config, const ParameterSet<T>& params);

}  // namespace buildseg::model
