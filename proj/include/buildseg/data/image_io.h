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

#include <filesystem>

#include "buildseg/core/grid.h"

namespace buildseg::data {

// RGB rasters: binary PPM (P6, maxval 255) or 8-bit PNG of any colour type.
RgbImage read_rgb(const std::filesystem::path& path);
// Label rasters: binary PGM (P5, 8 or 16 bit) or 8-bit PNG. Palette PNGs yield
// their palette indices, which is how most label maps store class ids.
LabelGrid read_labels(const std::filesystem::path& path);
// Reads only the header to get the raster size.
std::pair<int, int> read_size(const std::filesystem::path& path);

void write_ppm(const std::filesystem::path& path, const RgbImage& image);
void write_pgm(const std::filesystem::path& path, const LabelGrid& labels);
void write_pgm(const std::filesystem::path& path, const Mask& mask, std::uint8_t on_value = 1);

}  // namespace buildseg::data
