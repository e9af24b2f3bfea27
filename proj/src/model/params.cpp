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

#include "buildseg/model/params.h"

#include <algorithm>

#include "buildseg/core/rng.h"

namespace buildseg::model {

template <typename T>
ParameterSet<T> init_weights(const ModelConfig& config, std::uint64_t seed) {
  constexpr double kInitStd = 0.02;
  Rng rng(seed);
  ParameterSet<T> params;
  for (const auto& spec : parameter_specs(config)) {
    tensor::Tensor<T> t(spec.shape);
    auto values = t.mutable_data();
    switch (spec.kind) {
      case ParamKind::kWeight:
        for (auto& v : values) v = static_cast<T>(rng.truncated_normal(kInitStd));
        break;
      case ParamKind::kNormGamma:
        for (auto& v : values) v = T{1};
        break;
      case ParamKind::kBias:
      case ParamKind::kNormBeta:
        break;
    }
    params.add(spec.name, std::move(t));
  }
  return params;
}

template <typename T>
void check_parameters(const ModelConfig& config, const ParameterSet<T>& params) {
  std::vector<std::string> problems;
  const auto specs = parameter_specs(config);
  for (const auto& spec : specs) {
    if (!params.contains(spec.name)) {
      problems.push_back(spec.name + " (missing, expected " + tensor::shape_str(spec.shape) + ")");
    } else if (params.at(spec.name).shape() != spec.shape) {
      problems.push_back(spec.name + " (shape " + tensor::shape_str(params.at(spec.name).shape()) + ", expected " +
                         tensor::shape_str(spec.shape) + ")");
    }
  }
  for (const auto& [name, t] : params) {
    const bool known = std::any_of(specs.begin(), specs.end(), [&](const ParamSpec& s) { return s.name == name; });
    if (!known) problems.push_back(name + " (unexpected)");
  }
  if (problems.empty()) return;
  std::string message = "parameter mismatch: " + problems.front();
  if (problems.size() > 1) {
    message += " (and " + std::to_string(problems.size() - 1) + " more:";
    for (std::size_t i = 1; i < problems.size(); ++i) message += " " + problems[i] + (i + 1 < problems.size() ? ";" : "");
    message += ")";
  }
  throw ShapeError(message);
}

template ParameterSet<float> init_weights(const ModelConfig&, std::uint64_t);
template ParameterSet<double> init_weights(const ModelConfig&, std::uint64_t);
template void check_parameters(const ModelConfig&, const ParameterSet<float>&);
template void check_parameters(const ModelConfig&, const ParameterSet<double>&);

}  // namespace buildseg::model
