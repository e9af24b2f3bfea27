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
#include <vector>

#include "buildseg/data/adapter.h"
#include "buildseg/data/patch_store.h"
#include "buildseg/data/tiling.h"

namespace buildseg::data {

struct DatasetSource {
  std::filesystem::path root;
  AdapterConfig adapter;
};

struct FuseOptions {
  int stride = kPatchSize;
  std::uint64_t seed = 0;  // for hash splits
  int workers = 1;
};

struct FuseSummary {
  Manifest manifest;
  std::vector<std::string> warnings;
  std::size_t unknown_labels = 0;  // lenient-mode pixels forced to background
};

// Reads one record and binarizes its mask.
std::pair<RgbImage, Mask> load_record(const SampleRecord& record, const AdapterConfig& adapter,
                                      MapStats* stats = nullptr);

// Ingest, binarize, tile and store every source. Output is independent of
// `workers`.
FuseSummary fuse_datasets(const std::vector<DatasetSource>& sources, const std::filesystem::path& store_root,
                          const FuseOptions& options = {});

}  // namespace buildseg::data
