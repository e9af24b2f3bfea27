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

#include "buildseg/metrics/metrics.h"

#include <cmath>
#include <string>
#include <tuple>

#include "buildseg/core/error.h"

namespace buildseg::metrics {

namespace {

void require_same_size(const Mask& a, const Mask& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw ShapeError("mask size mismatch: " + std::to_string(a.width()) + "x" + std::to_string(a.height()) + " vs " +
                     std::to_string(b.width()) + "x" + std::to_string(b.height()));
  }
}

// One step of 4-neighbour erosion with the outside treated as background.
Mask erode(const Mask& m) {
  Mask out(m.width(), m.height());
  const int h = m.height(), w = m.width();
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const bool keep = m.at(r, c) && r > 0 && r + 1 < h && c > 0 && c + 1 < w && m.at(r - 1, c) &&
                        m.at(r + 1, c) && m.at(r, c - 1) && m.at(r, c + 1);
      if (keep) out.set(r, c, true);
    }
  }
  return out;
}

std::pair<std::uint64_t, std::uint64_t> overlap(const Mask& a, const Mask& b) {
  std::uint64_t inter = 0, uni = 0;
  const auto av = a.values();
  const auto bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) {
    inter += av[i] & bv[i];
    uni += av[i] | bv[i];
  }
  return {inter, uni};
}

std::optional<double> ratio(std::uint64_t num, std::uint64_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

BoundaryBand boundary_band(const Mask& mask, int d) {
  if (d < 1) throw Error("boundary distance must be >= 1, got " + std::to_string(d));
  Mask eroded = mask;
  for (int i = 0; i < d && !eroded.empty_foreground(); ++i) eroded = erode(eroded);
  Mask band(mask.width(), mask.height());
  for (int r = 0; r < mask.height(); ++r)
    for (int c = 0; c < mask.width(); ++c) band.set(r, c, mask.at(r, c) && !eroded.at(r, c));
  return BoundaryBand{mask, d, std::move(band)};
}

std::optional<double> iou(const Mask& a, const Mask& b) {
  require_same_size(a, b);
  const auto [inter, uni] = overlap(a, b);
  return ratio(inter, uni);
}

std::optional<double> biou(const Mask& a, const Mask& b, int d) {
  require_same_size(a, b);
  const auto [inter, uni] = overlap(boundary_band(a, d).band, boundary_band(b, d).band);
  return ratio(inter, uni);
}

int default_boundary_distance(int height, int width) {
  const double diagonal = std::sqrt(static_cast<double>(height) * height + static_cast<double>(width) * width);
  return std::max(1, static_cast<int>(std::lround(0.02 * diagonal)));
}

PairCounts pair_counts(const Mask& prediction, const Mask& truth, int d) {
  require_same_size(prediction, truth);
  PairCounts out;
  std::tie(out.intersection, out.union_) = overlap(prediction, truth);
  std::tie(out.band_intersection, out.band_union) =
      overlap(boundary_band(prediction, d).band, boundary_band(truth, d).band);
  return out;
}

ConfusionCounts& ConfusionCounts::merge(const ConfusionCounts& other) {
  intersection += other.intersection;
  union_ += other.union_;
  band_intersection += other.band_intersection;
  band_union += other.band_union;
  samples += other.samples;
  samples_skipped += other.samples_skipped;
  return *this;
}

std::optional<double> ConfusionCounts::iou() const { return ratio(intersection, union_); }

std::optional<double> ConfusionCounts::biou() const { return ratio(band_intersection, band_union); }

ConfusionCounts accumulate(ConfusionCounts counts, const Mask& prediction, const Mask& truth, int d) {
  const PairCounts pair = pair_counts(prediction, truth, d);
  if (pair.union_ == 0) {
    ++counts.samples_skipped;
    return counts;
  }
  counts.intersection += pair.intersection;
  counts.union_ += pair.union_;
  counts.band_intersection += pair.band_intersection;
  counts.band_union += pair.band_union;
  ++counts.samples;
  return counts;
}

}  // namespace buildseg::metrics
