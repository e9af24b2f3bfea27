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

#include "buildseg/core/grid.h"

#include <algorithm>

#include "buildseg/core/error.h"

namespace buildseg {

namespace {
void check_dims(int w, int h) {
  if (w < 0 || h < 0) throw ShapeError("negative raster dimensions " + std::to_string(w) + "x" + std::to_string(h));
}
}  // namespace

RgbImage::RgbImage(int w, int h) : width(w), height(h) {
  check_dims(w, h);
  pixels.assign(static_cast<std::size_t>(w) * h * 3, 0);
}

LabelGrid::LabelGrid(int w, int h) : width(w), height(h) {
  check_dims(w, h);
  values.assign(static_cast<std::size_t>(w) * h, 0);
}

Mask::Mask(int width, int height) : width_(width), height_(height) {
  check_dims(width, height);
  values_.assign(static_cast<std::size_t>(width) * height, 0);
}

Mask::Mask(int width, int height, std::vector<std::uint8_t> values)
    : width_(width), height_(height), values_(std::move(values)) {
  check_dims(width, height);
  if (values_.size() != static_cast<std::size_t>(width) * height) {
    throw ShapeError("mask buffer has " + std::to_string(values_.size()) + " values, expected " +
                     std::to_string(static_cast<std::size_t>(width) * height));
  }
  if (std::any_of(values_.begin(), values_.end(), [](std::uint8_t v) { return v > 1; })) {
    throw FormatError("mask values must be 0 or 1");
  }
}

std::size_t Mask::count() const {
  return static_cast<std::size_t>(std::count(values_.begin(), values_.end(), std::uint8_t{1}));
}

Mask Mask::crop(int row, int col, int height, int width) const {
  if (row < 0 || col < 0 || height < 0 || width < 0 || row + height > height_ || col + width > width_) {
    throw ShapeError("crop rectangle outside " + std::to_string(width_) + "x" + std::to_string(height_) + " mask");
  }
  Mask out(width, height);
  for (int r = 0; r < height; ++r) {
    std::copy_n(values_.begin() + static_cast<std::ptrdiff_t>((row + r) * width_ + col), width,
                out.values_.begin() + static_cast<std::ptrdiff_t>(r * width));
  }
  return out;
}

}  // namespace buildseg
