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
#include <filesystem>
#include <string>

#include "buildseg/core/grid.h"

namespace buildseg::data {

enum class Domain { kA, kB };

Domain parse_domain(const std::string& name);
std::string domain_tag(Domain d);  // adapter tag, "synthetic-a" / "synthetic-b"

inline constexpr int kSceneSize = 512;

struct Scene {
  RgbImage image;
  Mask mask;
  int buildings = 0;
};

// Sets every pixel whose centre lies inside the rectangle of the given size,
// centred at (cy, cx) in continuous coordinates and rotated by `angle` radians.
void rasterize_rect(Mask& mask, double cy, double cx, double height, double width, double angle);
void rasterize_rect(Mask& mask, const Rect& rect);

// Fully determined by (seed, domain, index).
Scene render_scene(std::uint64_t seed, Domain domain, int index);

// Writes images/scene_NNNN.ppm and masks/scene_NNNN.pgm under root.
void generate_synthetic(const std::filesystem::path& root, std::uint64_t seed, int n_scenes, Domain domain);

}  // namespace buildseg::data
