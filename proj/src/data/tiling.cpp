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

#include "buildseg/data/tiling.h"

#include <algorithm>
#include <cmath>

#include "buildseg/core/error.h"

namespace buildseg::data {
namespace {

// Mirror index without repeating the edge sample.
int reflect(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  return i < n ? i : period - i;
}

int scaled(int n, double factor) { return std::max(1, static_cast<int>(std::lround(n * factor))); }

}  // namespace

int tiles_along(int n, const TilingOptions& options) {
  if (n <= options.patch_size) return 1;
  return (n - options.patch_size + options.stride - 1) / options.stride + 1;
}

std::vector<PatchPair> tile_to_patches(const RgbImage& source_image, const Mask& source_mask,
                                       const std::string& record_id, const TilingOptions& options) {
  if (source_image.width != source_mask.width() || source_image.height != source_mask.height()) {
    throw ShapeError("image " + std::to_string(source_image.width) + "x" + std::to_string(source_image.height) +
                     " and mask " + std::to_string(source_mask.width()) + "x" +
                     std::to_string(source_mask.height()) + " of '" + record_id + "' differ in size");
  }
  if (options.patch_size < 1 || options.stride < 1 || options.stride > options.patch_size) {
    throw ConfigError("tiling stride must be in [1, patch size]");
  }
  if (!(options.rescale > 0.0)) throw ConfigError("rescale factor must be positive");

  RgbImage image = source_image;
  Mask mask = source_mask;
  if (options.rescale != 1.0) {
    const int w = scaled(image.width, options.rescale), h = scaled(image.height, options.rescale);
    image = resize_bilinear(source_image, w, h);
    mask = resize_nearest(source_mask, w, h);
  }
  const int h = image.height, w = image.width, p = options.patch_size;
  const int rows = tiles_along(h, options), cols = tiles_along(w, options);

  std::vector<PatchPair> out;
  out.reserve(static_cast<std::size_t>(rows) * cols);
  for (int tr = 0; tr < rows; ++tr) {
    for (int tc = 0; tc < cols; ++tc) {
      const int r0 = tr * options.stride, c0 = tc * options.stride;
      PatchPair patch;
      patch.image = RgbImage(p, p);
      patch.mask = Mask(p, p);
      for (int r = 0; r < p; ++r) {
        const int sr = reflect(r0 + r, h);
        for (int c = 0; c < p; ++c) {
          const int sc = reflect(c0 + c, w);
          std::copy_n(image.at(sr, sc), 3, patch.image.at(r, c));
          if (r0 + r < h && c0 + c < w) patch.mask.set(r, c, mask.at(r0 + r, c0 + c));
        }
      }
      patch.provenance = {record_id, tr, tc, Rect{0, 0, std::min(p, h - r0), std::min(p, w - c0)}};
      out.push_back(std::move(patch));
    }
  }
  return out;
}

Mask reassemble_mask(const std::vector<PatchPair>& patches, int height, int width, const TilingOptions& options) {
  Mask out(width, height);
  for (const auto& patch : patches) {
    const auto& v = patch.provenance.valid;
    const int r0 = patch.provenance.tile_row * options.stride, c0 = patch.provenance.tile_col * options.stride;
    if (r0 + v.row + v.height > height || c0 + v.col + v.width > width) {
      throw ShapeError("patch valid region exceeds the " + std::to_string(width) + "x" + std::to_string(height) +
                       " target");
    }
    for (int r = v.row; r < v.row + v.height; ++r)
      for (int c = v.col; c < v.col + v.width; ++c) out.set(r0 + r, c0 + c, patch.mask.at(r, c));
  }
  return out;
}

RgbImage resize_bilinear(const RgbImage& image, int width, int height) {
  RgbImage out(width, height);
  const double sy = static_cast<double>(image.height) / height, sx = static_cast<double>(image.width) / width;
  for (int r = 0; r < height; ++r) {
    const double fy = std::clamp((r + 0.5) * sy - 0.5, 0.0, image.height - 1.0);
    const int y0 = static_cast<int>(fy), y1 = std::min(y0 + 1, image.height - 1);
    const double ty = fy - y0;
    for (int c = 0; c < width; ++c) {
      const double fx = std::clamp((c + 0.5) * sx - 0.5, 0.0, image.width - 1.0);
      const int x0 = static_cast<int>(fx), x1 = std::min(x0 + 1, image.width - 1);
      const double tx = fx - x0;
      for (int k = 0; k < 3; ++k) {
        const double top = image.at(y0, x0)[k] + tx * (image.at(y0, x1)[k] - image.at(y0, x0)[k]);
        const double bottom = image.at(y1, x0)[k] + tx * (image.at(y1, x1)[k] - image.at(y1, x0)[k]);
        out.at(r, c)[k] = static_cast<std::uint8_t>(std::clamp(std::floor(top + ty * (bottom - top) + 0.5), 0.0, 255.0));
      }
    }
  }
  return out;
}

Mask resize_nearest(const Mask& mask, int width, int height) {
  Mask out(width, height);
  for (int r = 0; r < height; ++r) {
    const int sr = std::min(mask.height() - 1, static_cast<int>((r + 0.5) * mask.height() / height));
    for (int c = 0; c < width; ++c) {
      const int sc = std::min(mask.width() - 1, static_cast<int>((c + 0.5) * mask.width() / width));
      out.set(r, c, mask.at(sr, sc));
    }
  }
  return out;
}

RgbImage flip_horizontal(const RgbImage& image) {
  RgbImage out(image.width, image.height);
  for (int r = 0; r < image.height; ++r)
    for (int c = 0; c < image.width; ++c) std::copy_n(image.at(r, image.width - 1 - c), 3, out.at(r, c));
  return out;
}

Mask flip_horizontal(const Mask& mask) {
  Mask out(mask.width(), mask.height());
  for (int r = 0; r < mask.height(); ++r)
    for (int c = 0; c < mask.width(); ++c) out.set(r, c, mask.at(r, mask.width() - 1 - c));
  return out;
}

}  // namespace buildseg::data
