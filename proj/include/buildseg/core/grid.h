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

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace buildseg {

// Axis-aligned pixel rectangle.
struct Rect {
  int row = 0;
  int col = 0;
  int height = 0;
  int width = 0;

  long long area() const { return static_cast<long long>(height) * width; }
  bool operator==(const Rect&) const = default;
};

// Interleaved 8-bit RGB raster, row-major.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // width * height * 3

  RgbImage() = default;
  RgbImage(int w, int h);

  std::uint8_t* at(int row, int col) { return &pixels[(static_cast<std::size_t>(row) * width + col) * 3]; }
  const std::uint8_t* at(int row, int col) const {
    return &pixels[(static_cast<std::size_t>(row) * width + col) * 3];
  }
  bool operator==(const RgbImage&) const = default;
};

// Single-channel integer label raster as read from a dataset's mask files.
struct LabelGrid {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> values;

  LabelGrid() = default;
  LabelGrid(int w, int h);

  std::uint16_t at(int row, int col) const { return values[static_cast<std::size_t>(row) * width + col]; }
  bool operator==(const LabelGrid&) const = default;
};

// Binary building mask; 1 = building. Values are kept strictly in {0, 1}.
class Mask {
 public:
  Mask() = default;
  Mask(int width, int height);
  // Throws FormatError if any value is outside {0, 1}.
  Mask(int width, int height, std::vector<std::uint8_t> values);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return values_.size(); }

  std::uint8_t at(int row, int col) const { return values_[static_cast<std::size_t>(row) * width_ + col]; }
  void set(int row, int col, bool on) { values_[static_cast<std::size_t>(row) * width_ + col] = on ? 1 : 0; }

  std::span<const std::uint8_t> values() const { return values_; }
  std::size_t count() const;
  bool empty_foreground() const { return count() == 0; }

  // Sub-rectangle copy; the rectangle must lie within the mask.
  Mask crop(int row, int col, int height, int width) const;

  bool operator==(const Mask&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> values_;
};

}  // namespace buildseg
