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
#include <set>
#include <string>
#include <vector>

#include "buildseg/data/adapter.h"
#include "buildseg/data/tiling.h"

namespace buildseg::data {

struct ManifestEntry {
  SampleRecord record;
  PatchProvenance provenance;
  std::string image_file;  // relative to the store root
  std::string mask_file;
  std::uint32_t image_crc32 = 0;
  std::uint32_t mask_crc32 = 0;
  std::uint64_t building_pixels = 0;  // within the valid region
  std::uint64_t valid_pixels = 0;
};

struct ManifestStats {
  std::map<std::string, std::size_t> patches;  // per dataset
  std::map<std::string, std::size_t> records;
  std::uint64_t building_pixels = 0;
  std::uint64_t valid_pixels = 0;

  double building_fraction() const;
  bool operator==(const ManifestStats&) const = default;
};

struct Manifest {
  std::vector<ManifestEntry> entries;
  ManifestStats stats;

  std::vector<const ManifestEntry*> select(Split split, const std::set<std::string>& datasets = {}) const;
};

ManifestStats compute_stats(const std::vector<ManifestEntry>& entries);

// Streams patches to patches/<split>/<dataset>/<id>_<r>_<c>.{img,msk}.
// finish() writes stats.json and then manifest.jsonl, sorted by id, tile row
// and tile col, so a present manifest means a complete store.
class PatchStoreWriter {
 public:
  explicit PatchStoreWriter(std::filesystem::path root);
  void add(const SampleRecord& record, const PatchPair& patch);
  Manifest finish();

 private:
  std::filesystem::path root_;
  std::vector<ManifestEntry> entries_;
  std::set<std::string> files_;
  bool finished_ = false;
};

Manifest write_patch_store(const std::filesystem::path& root,
                           const std::vector<std::pair<SampleRecord, PatchPair>>& patches);

// Throws IoError/FormatError naming the offending file.
Manifest read_manifest(const std::filesystem::path& root);
PatchPair load_patch(const std::filesystem::path& root, const ManifestEntry& entry);

inline constexpr std::size_t kPatchImageBytes = kPatchSize * kPatchSize * 3;
inline constexpr std::size_t kPatchMaskBytes = kPatchSize * kPatchSize;

}  // namespace buildseg::data
