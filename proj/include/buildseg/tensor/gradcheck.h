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

#include <functional>
#include <span>

#include "buildseg/tensor/tensor.h"

namespace buildseg::tensor {

// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h for every element of
// x, evaluated in double precision. Throws if h <= 0.
Tensor<double> finite_diff_grad(const std::function<double(const Tensor<double>&)>& f, const Tensor<double>& x,
                                double h = 1e-6);

// Richardson extrapolation of two central differences, (4 D(h/2) - D(h)) / 3,
// cancelling the h^2 truncation term. Throws if h <= 0.
Tensor<double> richardson_diff_grad(const std::function<double(const Tensor<double>&)>& f, const Tensor<double>& x,
                                    double h = 1e-4);

// Norm-wise relative error max|a - b| / max(max|a|, max|b|, floor).
double max_relative_error(std::span<const double> analytic, std::span<const double> numeric, double floor = 1e-8);

}  // namespace buildseg::tensor
