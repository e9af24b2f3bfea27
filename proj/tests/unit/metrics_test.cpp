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

#include <cmath>
#include <cstdlib>
#include <numeric>

#include <gtest/gtest.h>

#include "buildseg/core/error.h"
#include "buildseg/core/rng.h"
#include "buildseg/metrics/loss.h"
#include "buildseg/metrics/metrics.h"
#include "buildseg/tensor/gradcheck.h"

namespace buildseg::metrics {
namespace {

using tensor::Tensor;

Mask block(int h, int w, int row, int col, int bh, int bw) {
  Mask m(w, h);
  for (int r = row; r < row + bh; ++r)
    for (int c = col; c < col + bw; ++c) m.set(r, c, true);
  return m;
}

Mask random_mask(Rng& rng, int h, int w) {
  // Mix of blobs and noise so bands are non-trivial.
  Mask m(w, h);
  const int blobs = static_cast<int>(rng.uniform_int(0, 3));
  for (int b = 0; b < blobs; ++b) {
    const int r0 = static_cast<int>(rng.uniform_int(0, h - 1)), c0 = static_cast<int>(rng.uniform_int(0, w - 1));
    const int bh = static_cast<int>(rng.uniform_int(1, h)), bw = static_cast<int>(rng.uniform_int(1, w));
    for (int r = r0; r < std::min(h, r0 + bh); ++r)
      for (int c = c0; c < std::min(w, c0 + bw); ++c) m.set(r, c, true);
  }
  const double noise = rng.uniform(0.0, 0.2);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c)
      if (rng.uniform() < noise) m.set(r, c, !m.at(r, c));
  return m;
}

// Brute force: L1 distance from each foreground pixel to the nearest
// background pixel, with the area beyond the grid counted as background.
Mask oracle_band(const Mask& m, int d) {
  const int h = m.height(), w = m.width();
  Mask out(w, h);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      if (!m.at(r, c)) continue;
      int best = std::min({r + 1, c + 1, h - r, w - c});
      for (int rr = 0; rr < h; ++rr)
        for (int cc = 0; cc < w; ++cc)
          if (!m.at(rr, cc)) best = std::min(best, std::abs(rr - r) + std::abs(cc - c));
      out.set(r, c, best <= d);
    }
  return out;
}

std::pair<std::uint64_t, std::uint64_t> oracle_counts(const Mask& a, const Mask& b) {
  std::uint64_t inter = 0, uni = 0;
  for (int r = 0; r < a.height(); ++r)
    for (int c = 0; c < a.width(); ++c) {
      inter += a.at(r, c) && b.at(r, c);
      uni += a.at(r, c) || b.at(r, c);
    }
  return {inter, uni};
}

TEST(IouTest, Examples) {
  const auto a = block(4, 4, 0, 0, 2, 2);
  EXPECT_EQ(iou(a, a), 1.0);
  EXPECT_EQ(iou(a, block(4, 4, 2, 2, 2, 2)), 0.0);
  EXPECT_DOUBLE_EQ(*iou(a, block(4, 4, 0, 1, 2, 2)), 1.0 / 3.0);
  EXPECT_FALSE(iou(Mask(4, 4), Mask(4, 4)).has_value());
  EXPECT_THROW(iou(Mask(4, 4), Mask(4, 5)), ShapeError);
}

TEST(BoundaryBandTest, Examples) {
  const Mask full = block(6, 9, 0, 0, 6, 9);
  EXPECT_EQ(boundary_band(full, 3).band, full);
  const Mask dot = block(5, 5, 2, 3, 1, 1);
  EXPECT_EQ(boundary_band(dot, 1).band, dot);
  const Mask square = block(8, 8, 1, 1, 6, 6);
  const auto ring = boundary_band(square, 1);
  EXPECT_EQ(ring.band.count(), 20u);
  EXPECT_EQ(ring.band, oracle_band(square, 1));
  EXPECT_EQ(ring.d, 1);
  EXPECT_THROW(boundary_band(square, 0), Error);
}

TEST(BoundaryBandTest, BandIsSubsetOfSource) {
  Rng rng(4);
  for (int i = 0; i < 50; ++i) {
    const auto m = random_mask(rng, 12, 10);
    const auto band = boundary_band(m, 2).band;
    for (int r = 0; r < 12; ++r)
      for (int c = 0; c < 10; ++c) EXPECT_LE(band.at(r, c), m.at(r, c));
  }
}

TEST(BiouTest, Examples) {
  const auto a = block(8, 8, 1, 1, 6, 6);
  EXPECT_EQ(biou(a, a, 1), 1.0);
  // Brute-force bands: 20 pixels each, 10 shared, 30 in the union.
  EXPECT_DOUBLE_EQ(*biou(a, block(8, 8, 1, 2, 6, 6), 1), 10.0 / 30.0);
  Rng rng(9);
  for (int i = 0; i < 20; ++i) {
    const auto x = random_mask(rng, 8, 8), y = random_mask(rng, 8, 8);
    EXPECT_EQ(biou(x, y, 16), iou(x, y));
  }
}

TEST(MetricPropertiesTest, SymmetricBoundedAndExtremal) {
  Rng rng(21);
  for (int i = 0; i < 200; ++i) {
    const auto a = random_mask(rng, 9, 11), b = random_mask(rng, 9, 11);
    for (const auto& value : {iou(a, b), biou(a, b, 2)}) {
      if (!value) continue;
      EXPECT_GE(*value, 0.0);
      EXPECT_LE(*value, 1.0);
    }
    EXPECT_EQ(iou(a, b), iou(b, a));
    EXPECT_EQ(biou(a, b, 2), biou(b, a, 2));
    if (a.count() > 0) {
      EXPECT_EQ(iou(a, a), 1.0);
      EXPECT_EQ(biou(a, a, 2), 1.0);
    }
  }
  const auto left = block(6, 6, 0, 0, 6, 2), right = block(6, 6, 0, 4, 6, 2);
  EXPECT_EQ(iou(left, right), 0.0);
  EXPECT_EQ(biou(left, right, 1), 0.0);
}

TEST(MetricOracleTest, CountsMatchBruteForce) {
  Rng rng(77);
  for (int i = 0; i < 100; ++i) {
    const auto a = random_mask(rng, 16, 16), b = random_mask(rng, 16, 16);
    for (int d = 1; d <= 3; ++d) {
      const auto counts = pair_counts(a, b, d);
      const auto [inter, uni] = oracle_counts(a, b);
      const auto [binter, buni] = oracle_counts(oracle_band(a, d), oracle_band(b, d));
      EXPECT_EQ(counts.intersection, inter);
      EXPECT_EQ(counts.union_, uni);
      EXPECT_EQ(counts.band_intersection, binter);
      EXPECT_EQ(counts.band_union, buni);
    }
  }
}

TEST(AccumulateTest, Examples) {
  const auto a = block(4, 4, 0, 0, 2, 2), b = block(4, 4, 0, 1, 2, 2);
  auto single = accumulate({}, a, b, 1);
  EXPECT_EQ(single.iou(), iou(a, b));
  EXPECT_EQ(single.biou(), biou(a, b, 1));

  // (i, u) = (2, 6) and (2, 2) -> 4 / 8.
  auto two = accumulate(accumulate({}, a, b, 1), block(4, 4, 3, 0, 1, 2), block(4, 4, 3, 0, 1, 2), 1);
  EXPECT_EQ(two.intersection, 4u);
  EXPECT_EQ(two.union_, 8u);
  EXPECT_EQ(two.iou(), 0.5);

  auto skipped = accumulate({}, Mask(4, 4), Mask(4, 4), 1);
  EXPECT_EQ(skipped.samples_skipped, 1u);
  EXPECT_EQ(skipped.samples, 0u);
  EXPECT_FALSE(skipped.iou().has_value());
}

TEST(AccumulateTest, MergeIsOrderFree) {
  Rng rng(5);
  std::vector<std::pair<Mask, Mask>> pairs;
  for (int i = 0; i < 30; ++i) pairs.emplace_back(random_mask(rng, 8, 8), random_mask(rng, 8, 8));
  ConfusionCounts whole;
  for (const auto& [p, t] : pairs) whole = accumulate(whole, p, t, 2);
  ConfusionCounts parts[3];
  for (std::size_t i = 0; i < pairs.size(); ++i) parts[i % 3] = accumulate(parts[i % 3], pairs[i].first, pairs[i].second, 2);
  ConfusionCounts ab = parts[0];
  ab.merge(parts[1]).merge(parts[2]);
  ConfusionCounts cb = parts[2];
  ConfusionCounts bc = parts[1];
  cb.merge(bc.merge(parts[0]));
  EXPECT_EQ(ab, whole);
  EXPECT_EQ(cb, whole);
}

TEST(DefaultDistanceTest, Diagonal) {
  EXPECT_EQ(default_boundary_distance(256, 256), 7);
  EXPECT_EQ(default_boundary_distance(4, 4), 1);
}

Tensor<double> logits_with(int h, int w, double background, double building) {
  std::vector<double> v(static_cast<std::size_t>(2 * h * w));
  for (int i = 0; i < h * w; ++i) {
    v[static_cast<std::size_t>(i)] = background;
    v[static_cast<std::size_t>(h * w + i)] = building;
  }
  return Tensor<double>({2, static_cast<std::size_t>(h), static_cast<std::size_t>(w)}, v);
}

TEST(CrossEntropyTest, Examples) {
  // Margin 20 toward the true class everywhere.
  const auto target = block(3, 3, 0, 0, 3, 3);
  EXPECT_LE(cross_entropy(logits_with(3, 3, 0.0, 20.0), target).item(), 1e-6);
  EXPECT_NEAR(cross_entropy(logits_with(3, 3, 1.5, 1.5), block(3, 3, 1, 1, 1, 1)).item(), std::log(2.0), 1e-12);
  EXPECT_THROW(cross_entropy(logits_with(3, 3, 0, 0), Mask(4, 3)), ShapeError);
}

TEST(CrossEntropyTest, GradientMatchesFiniteDifferences) {
  Rng rng(13);
  std::vector<double> v(2 * 16);
  for (auto& x : v) x = 2.0 * rng.normal();
  const Tensor<double> logits({2, 4, 4}, v);
  const auto target = random_mask(rng, 4, 4);
  tensor::Tape<double> tape;
  tape.backward(cross_entropy(tape.watch(logits), target));
  const auto numeric = tensor::finite_diff_grad(
      [&](const Tensor<double>& x) { return cross_entropy(x, target).item(); }, logits, 1e-5);
  const std::vector<double> analytic(logits.grad().begin(), logits.grad().end());
  EXPECT_LE(tensor::max_relative_error(analytic, numeric.data()), 1e-6);
}

TEST(CrossEntropyTest, NonNegativeAndDecreasesWhenTrueLogitRises) {
  Rng rng(8);
  for (int i = 0; i < 50; ++i) {
    std::vector<double> v(2 * 25);
    for (auto& x : v) x = 4.0 * rng.normal();
    EXPECT_GE(cross_entropy(Tensor<double>({2, 5, 5}, v), random_mask(rng, 5, 5)).item(), 0.0);
  }
  // Pixel (0, 0) is a building predicted as background.
  const auto target = block(2, 2, 0, 0, 1, 1);
  auto before = logits_with(2, 2, 1.0, -1.0);
  auto raised = before.clone();
  raised.mutable_data()[4] += 0.5;
  EXPECT_LT(cross_entropy(raised, target).item(), cross_entropy(before, target).item());
}

TEST(CrossEntropyTest, ValidRegionExcludesPadding) {
  auto logits = logits_with(4, 4, 0.0, 0.0);
  // Confidently wrong outside the 2x2 valid region must not matter.
  auto values = logits.mutable_data();
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c)
      if (r >= 2 || c >= 2) values[static_cast<std::size_t>(16 + r * 4 + c)] = 30.0;
  EXPECT_NEAR(cross_entropy(logits, Mask(4, 4), Rect{0, 0, 2, 2}).item(), std::log(2.0), 1e-12);
}

}  // namespace
}  // namespace buildseg::metrics
