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
#include <optional>

#include "buildseg/core/grid.h"

namespace buildseg::metrics {

// Foreground pixels within L1 distance d of the background, where pixels
// beyond the grid edge count as background.
struct BoundaryBand {
  Mask source;
  int d = 0;
  Mask band;
};

// Band = mask minus its d-fold 4-neighbour erosion. Throws if d < 1.
BoundaryBand boundary_band(const Mask& mask, int d);

// |A n B| / |A u B|; nullopt when both masks are empty.
std::optional<double> iou(const Mask& a, const Mask& b);

// IoU of the two boundary bands; nullopt when both bands are empty.
std::optional<double> biou(const Mask& a, const Mask& b, int d);

// round(0.02 * diagonal), at least 1. Gives 7 for 256 x 256.
int default_boundary_distance(int height, int width);

// Pixel counts of one prediction/ground-truth pair.
struct PairCounts {
  std::uint64_t intersection = 0;
  std::uint64_t union_ = 0;
  std::uint64_t band_intersection = 0;
  std::uint64_t band_union = 0;
};

PairCounts pair_counts(const Mask& prediction, const Mask& truth, int d);

// Dataset-level accumulator. Micro-averaged: metrics are ratios of summed
// counts. Pairs where both masks are empty only bump samples_skipped.
struct ConfusionCounts {
  std::uint64_t intersection = 0;
  std::uint64_t union_ = 0;
  std::uint64_t band_intersection = 0;
  std::uint64_t band_union = 0;
  std::uint64_t samples = 0;
  std::uint64_t samples_skipped = 0;

  ConfusionCounts& merge(const ConfusionCounts& other);
  std::optional<double> iou() const;
  std::optional<double> biou() const;
  bool operator==(const ConfusionCounts&) const = default;
};

ConfusionCounts accumulate(ConfusionCounts counts, const Mask& prediction, const Mask& truth, int d);

}  // namespace buildseg::metrics
