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

#include <gtest/gtest.h>

#include "buildseg/verify/gradcheck_suite.h"

namespace buildseg::verify {
namespace {

TEST(GradCheckTest, EveryOpMatchesFiniteDifferences) {
  for (const auto& r : run_op_gradchecks(2026, 100)) {
    EXPECT_EQ(r.cases, 100);
    EXPECT_LE(r.max_error_64, kTolerance64) << r.name;
    EXPECT_LE(r.max_error_32, kTolerance32) << r.name;
    EXPECT_TRUE(r.passed) << r.name;
  }
}

TEST(GradCheckTest, TinyModelMatchesFiniteDifferences) {
  const auto r = run_model_gradcheck(7);
  EXPECT_LE(r.max_error, kModelTolerance) << "worst: " << r.worst_parameter;
  EXPECT_LE(r.max_error_32, kTolerance32);
  EXPECT_GT(r.elements, 1000u);
  EXPECT_TRUE(r.passed);
}

}  // namespace
}  // namespace buildseg::verify
