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

#include "buildseg/tensor/gradcheck.h"

#include <algorithm>
#include <cmath>

#include "buildseg/core/error.h"

namespace buildseg::tensor {

Tensor<double> finite_diff_grad(const std::function<double(const Tensor<double>&)>& f, const Tensor<double>& x,
                                double h) {
  if (!(h > 0.0)) throw Error("finite_diff_grad: step must be positive");
  Tensor<double> probe = x.clone();
  std::vector<double> grad(x.numel());
  auto values = probe.mutable_data();
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double original = values[i];
    values[i] = original + h;
    const double plus = f(probe);
    values[i] = original - h;
    const double minus = f(probe);
    values[i] = original;
    grad[i] = (plus - minus) / (2.0 * h);
  }
  return Tensor<double>(x.shape(), std::move(grad));
}

Tensor<double> richardson_diff_grad(const std::function<double(const Tensor<double>&)>& f, const Tensor<double>& x,
                                    double h) {
  const auto coarse = finite_diff_grad(f, x, h);
  auto fine = finite_diff_grad(f, x, h / 2.0);
  auto values = fine.mutable_data();
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = (4.0 * values[i] - coarse[i]) / 3.0;
  return fine;
}

double max_relative_error(std::span<const double> analytic, std::span<const double> numeric, double floor) {
  if (analytic.size() != numeric.size()) throw ShapeError("max_relative_error: length mismatch");
  double diff = 0.0;
  double scale = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff = std::max(diff, std::abs(analytic[i] - numeric[i]));
    scale = std::max({scale, std::abs(analytic[i]), std::abs(numeric[i])});
  }
  return diff / std::max(scale, floor);
}

}  // namespace buildseg::tensor
