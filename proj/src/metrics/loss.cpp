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

#include "buildseg/metrics/loss.h"

#include <algorithm>
#include <cmath>

#include "buildseg/core/error.h"

namespace buildseg::metrics {

using tensor::Tensor;

template <typename T>
Tensor<T> cross_entropy(const Tensor<T>& logits, const Mask& target, std::optional<Rect> valid) {
  if (logits.rank() != 3 || logits.dim(0) != 2 || logits.dim(1) != static_cast<std::size_t>(target.height()) ||
      logits.dim(2) != static_cast<std::size_t>(target.width())) {
    throw ShapeError("cross_entropy: logits " + tensor::shape_str(logits.shape()) + " vs mask " +
                     std::to_string(target.height()) + "x" + std::to_string(target.width()));
  }
  const Rect region = valid.value_or(Rect{0, 0, target.height(), target.width()});
  if (region.row < 0 || region.col < 0 || region.height < 1 || region.width < 1 ||
      region.row + region.height > target.height() || region.col + region.width > target.width()) {
    throw ShapeError("cross_entropy: valid region outside the target grid or empty");
  }
  const std::size_t plane = target.size();
  const std::size_t w = static_cast<std::size_t>(target.width());
  const auto x = logits.data();
  const double log_floor = std::log(kProbabilityFloor);

  // Probability of the building class per valid pixel, saved for backward.
  std::vector<T> p_building(static_cast<std::size_t>(region.area()));
  std::vector<std::uint8_t> clamped(p_building.size());
  double total = 0.0;
  std::size_t k = 0;
  for (int r = region.row; r < region.row + region.height; ++r) {
    for (int c = region.col; c < region.col + region.width; ++c, ++k) {
      const std::size_t idx = static_cast<std::size_t>(r) * w + static_cast<std::size_t>(c);
      const double l0 = x[idx];
      const double l1 = x[plane + idx];
      const double peak = std::max(l0, l1);
      const double lse = peak + std::log(std::exp(l0 - peak) + std::exp(l1 - peak));
      const double log_true = (target.at(r, c) ? l1 : l0) - lse;
      p_building[k] = static_cast<T>(std::exp(l1 - lse));
      clamped[k] = log_true < log_floor;
      total -= std::max(log_true, log_floor);
    }
  }
  const double count = static_cast<double>(region.area());
  Tensor<T> out = Tensor<T>::scalar(static_cast<T>(total / count));
  if (!std::isfinite(out.item())) throw NumericError("non-finite cross-entropy");
  auto* tape = logits.tape();
  if (!tape) return out;
  return tape->record(
      "cross_entropy", {logits}, std::move(out),
      [target, region, plane, w, count, p_building = std::move(p_building), clamped = std::move(clamped)](
          std::span<const T> g, std::span<const std::span<T>> in) {
        if (in[0].empty()) return;
        const T coeff = static_cast<T>(g[0] / count);
        std::size_t k = 0;
        for (int r = region.row; r < region.row + region.height; ++r) {
          for (int c = region.col; c < region.col + region.width; ++c, ++k) {
            if (clamped[k]) continue;
            const std::size_t idx = static_cast<std::size_t>(r) * w + static_cast<std::size_t>(c);
            const T y1 = target.at(r, c) ? T{1} : T{0};
            // d/dl1 = p1 - y1, d/dl0 = p0 - y0 = -(p1 - y1)
            const T delta = coeff * (p_building[k] - y1);
            in[0][plane + idx] += delta;
            in[0][idx] -= delta;
          }
        }
      });
}

template Tensor<float> cross_entropy(const Tensor<float>&, const Mask&, std::optional<Rect>);
template Tensor<double> cross_entropy(const Tensor<double>&, const Mask&, std::optional<Rect>);

}  // namespace buildseg::metrics
