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

#include "buildseg/data/synthetic.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "buildseg/core/error.h"
#include "buildseg/core/rng.h"
#include "buildseg/data/image_io.h"

namespace buildseg::data {
namespace {

namespace fs = std::filesystem;
using Colour = std::array<double, 3>;

struct Palette {
  Colour ground;
  std::array<Colour, 4> roofs;
};

// Domain B shifts both ground and roof colours.
const Palette kPaletteA{{92, 112, 70}, {{{196, 82, 68}, {184, 184, 194}, {150, 96, 60}, {224, 214, 200}}}};
const Palette kPaletteB{{158, 138, 104}, {{{86, 98, 142}, {62, 64, 74}, {118, 160, 172}, {236, 198, 120}}}};

std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0)); }

void paint_ground(RgbImage& img, const Palette& palette, Rng& rng) {
  // A few low-frequency waves for texture plus per-pixel grain.
  struct Wave {
    double fy, fx, phase, amp;
  };
  std::array<Wave, 4> waves;
  for (auto& w : waves) {
    w = {rng.uniform(0.005, 0.04), rng.uniform(0.005, 0.04), rng.uniform(0.0, 2 * std::numbers::pi),
         rng.uniform(4.0, 10.0)};
  }
  const Colour tint{rng.uniform(-10, 10), rng.uniform(-10, 10), rng.uniform(-10, 10)};
  for (int r = 0; r < img.height; ++r) {
    for (int c = 0; c < img.width; ++c) {
      double shade = 0;
      for (const auto& w : waves) shade += w.amp * std::sin(w.fy * r + w.fx * c + w.phase);
      const double grain = rng.uniform(-8.0, 8.0);
      for (int k = 0; k < 3; ++k) img.at(r, c)[k] = to_byte(palette.ground[k] + tint[k] + shade + grain);
    }
  }
}

}  // namespace

Domain parse_domain(const std::string& name) {
  if (name == "A" || name == "a") return Domain::kA;
  if (name == "B" || name == "b") return Domain::kB;
  throw ConfigError("unknown synthetic domain '" + name + "' (expected A or B)");
}

std::string domain_tag(Domain d) { return d == Domain::kA ? "synthetic-a" : "synthetic-b"; }

void rasterize_rect(Mask& mask, double cy, double cx, double height, double width, double angle) {
  const double cs = std::cos(angle), sn = std::sin(angle);
  const double reach = 0.5 * std::hypot(height, width) + 1.0;
  const int r0 = std::max(0, static_cast<int>(std::floor(cy - reach)));
  const int r1 = std::min(mask.height() - 1, static_cast<int>(std::ceil(cy + reach)));
  const int c0 = std::max(0, static_cast<int>(std::floor(cx - reach)));
  const int c1 = std::min(mask.width() - 1, static_cast<int>(std::ceil(cx + reach)));
  for (int r = r0; r <= r1; ++r) {
    for (int c = c0; c <= c1; ++c) {
      const double dy = r + 0.5 - cy, dx = c + 0.5 - cx;
      const double u = dx * cs + dy * sn, v = -dx * sn + dy * cs;
      if (std::abs(u) < 0.5 * width && std::abs(v) < 0.5 * height) mask.set(r, c, true);
    }
  }
}

void rasterize_rect(Mask& mask, const Rect& rect) {
  const int r1 = std::min(mask.height(), rect.row + rect.height), c1 = std::min(mask.width(), rect.col + rect.width);
  for (int r = std::max(0, rect.row); r < r1; ++r)
    for (int c = std::max(0, rect.col); c < c1; ++c) mask.set(r, c, true);
}

Scene render_scene(std::uint64_t seed, Domain domain, int index) {
  Rng rng(derive_seed(derive_seed(seed, domain == Domain::kA ? 0 : 1), static_cast<std::uint64_t>(index)));
  const auto& palette = domain == Domain::kA ? kPaletteA : kPaletteB;
  Scene scene;
  scene.image = RgbImage(kSceneSize, kSceneSize);
  scene.mask = Mask(kSceneSize, kSceneSize);
  paint_ground(scene.image, palette, rng);

  scene.buildings = static_cast<int>(rng.uniform_int(3, 10));
  for (int b = 0; b < scene.buildings; ++b) {
    const int h = static_cast<int>(rng.uniform_int(20, 120)), w = static_cast<int>(rng.uniform_int(20, 120));
    Mask footprint(kSceneSize, kSceneSize);
    if (domain == Domain::kA) {
      const int row = static_cast<int>(rng.uniform_int(0, kSceneSize - h));
      const int col = static_cast<int>(rng.uniform_int(0, kSceneSize - w));
      rasterize_rect(footprint, Rect{row, col, h, w});
    } else {
      const double angle = rng.uniform(0.0, std::numbers::pi);
      const double half = 0.5 * std::hypot(h, w);
      const double cy = rng.uniform(half, kSceneSize - half), cx = rng.uniform(half, kSceneSize - half);
      rasterize_rect(footprint, cy, cx, h, w, angle);
    }
    const auto& base = palette.roofs[static_cast<std::size_t>(rng.uniform_int(0, 3))];
    const Colour roof{base[0] + rng.uniform(-12, 12), base[1] + rng.uniform(-12, 12), base[2] + rng.uniform(-12, 12)};
    for (int r = 0; r < kSceneSize; ++r) {
      for (int c = 0; c < kSceneSize; ++c) {
        if (!footprint.at(r, c)) continue;
        const double grain = rng.uniform(-6.0, 6.0);
        for (int k = 0; k < 3; ++k) scene.image.at(r, c)[k] = to_byte(roof[k] + grain);
        scene.mask.set(r, c, true);
      }
    }
  }
  return scene;
}

void generate_synthetic(const fs::path& root, std::uint64_t seed, int n_scenes, Domain domain) {
  if (n_scenes < 1) throw ConfigError("need at least one scene, got " + std::to_string(n_scenes));
  std::error_code ec;
  fs::create_directories(root / "images", ec);
  fs::create_directories(root / "masks", ec);
  if (ec) throw IoError("cannot create " + root.string() + ": " + ec.message());
  for (int i = 0; i < n_scenes; ++i) {
    const auto scene = render_scene(seed, domain, i);
    char stem[32];
    std::snprintf(stem, sizeof(stem), "scene_%04d", i);
    write_ppm(root / "images" / (std::string(stem) + ".ppm"), scene.image);
    write_pgm(root / "masks" / (std::string(stem) + ".pgm"), scene.mask);
  }
}

}  // namespace buildseg::data
