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

#include <string>
#include <vector>

#include "buildseg/core/grid.h"

namespace buildseg::data {

inline constexpr int kPatchSize = 256;

struct PatchProvenance {
  std::string record_id;
  int tile_row = 0;
  int tile_col = 0;
  Rect valid;  // unpadded extent, in patch coordinates

  bool operator==(const PatchProvenance&) const = default;
};

struct PatchPair {
  RgbImage image;
  Mask mask;
  PatchProvenance provenance;
};

struct TilingOptions {
  int patch_size = kPatchSize;
  int stride = kPatchSize;  // < patch_size gives overlapping tiles
  double rescale = 1.0;
};

// Tiles needed along one axis of length n.
int tiles_along(int n, const TilingOptions& options);

// Reflect-pads right/bottom (mask with 0) and cuts a tile grid. Scaling, when
// requested, is bilinear for the image and nearest-neighbour for the mask.
std::vector<PatchPair> tile_to_patches(const RgbImage& image, const Mask& mask, const std::string& record_id,
                                       const TilingOptions& options = {});

// Pastes the valid regions back into an h x w mask.
Mask reassemble_mask(const std::vector<PatchPair>& patches, int height, int width,
                     const TilingOptions& options = {});

RgbImage resize_bilinear(const RgbImage& image, int width, int height);
Mask resize_nearest(const Mask& mask, int width, int height);
RgbImage flip_horizontal(const RgbImage& image);
Mask flip_horizontal(const Mask& mask);

}  // namespace buildseg::data
