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
#include <map>
#include <string>
#include <vector>

#include "buildseg/core/grid.h"

namespace buildseg::data {

enum class Split { kTrain, kVal, kTest };

std::string split_name(Split s);
Split parse_split(const std::string& name);

// Source label value -> binary class, total over the dataset's declared labels.
struct ClassMapping {
  std::string dataset;
  std::map<std::uint16_t, std::uint8_t> map;

  // Throws ConfigError if empty, non-binary or without a building label.
  void validate() const;
};

// Declares where a dataset keeps its files and how its labels binarize.
struct AdapterConfig {
  std::string tag;
  std::string image_dir = "images";
  std::string mask_dir = "masks";
  std::vector<std::string> image_exts = {".png", ".ppm"};
  std::vector<std::string> mask_exts = {".png", ".pgm"};
  // Applied to the image (bilinear) and mask (nearest) before tiling.
  double rescale = 1.0;
  bool strict = true;
  ClassMapping mapping;
};

// Parses a key/value adapter file ([dataset] and [classes] sections).
AdapterConfig load_adapter(const std::filesystem::path& path);
// Looks up `<dir>/<tag>.ini`.
AdapterConfig load_adapter(const std::filesystem::path& dir, const std::string& tag);
std::filesystem::path default_adapter_dir();

struct MapStats {
  std::size_t unknown = 0;  // pixels with labels outside the mapping (lenient mode)
};

// Strict mode throws FormatError on the first unmapped label.
Mask map_classes_binary(const LabelGrid& raw, const ClassMapping& mapping, bool strict = true,
                        MapStats* stats = nullptr);

struct SampleRecord {
  std::string id;
  std::string dataset;
  std::string image_uri;
  std::string mask_uri;
  int width = 0;
  int height = 0;
  Split split = Split::kTrain;

  bool operator==(const SampleRecord&) const = default;
};

struct IngestResult {
  std::vector<SampleRecord> records;
  std::vector<std::string> warnings;
};

// Pairs images and masks by stem. Splits come from train/val/test
// subdirectories when the root has them, otherwise from a seeded 80/10/10
// hash of the id.
IngestResult ingest(const std::filesystem::path& root, const AdapterConfig& adapter, std::uint64_t seed = 0);

Split hash_split(const std::string& dataset, const std::string& id, std::uint64_t seed);

}  // namespace buildseg::data
