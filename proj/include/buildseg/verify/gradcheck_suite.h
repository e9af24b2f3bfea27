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

namespace buildseg::verify {

inline constexpr double kTolerance64 = 1e-6;
inline constexpr double kTolerance32 = 1e-3;
inline constexpr double kModelTolerance = 1e-4;

struct GradCheckResult {
  std::string name;
  int cases = 0;
  double max_error_64 = 0.0;  // backward in double vs central differences
  double max_error_32 = 0.0;  // backward in float vs central differences (double)
  bool passed = false;
};

// Checks every differentiable kernel on `cases` seeded random inputs with
// dimensions <= 8.
std::vector<GradCheckResult> run_op_gradchecks(std::uint64_t seed, int cases = 100);

struct ModelGradCheckResult {
  std::size_t parameters = 0;  // tensors checked
  std::size_t elements = 0;
  double max_error = 0.0;     // double backward, worst tensor
  double max_error_32 = 0.0;  // float backward against the same differences
  std::string worst_parameter;
  bool passed = false;
};

// Full-network check on the tiny two-stage config ([8, 16], depth 1) with a
// 32x32 input: every parameter's gradient of the cross-entropy loss against
// double-precision central differences.
ModelGradCheckResult run_model_gradcheck(std::uint64_t seed);

}  // namespace buildseg::verify
