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

#include "buildseg/data/fusion.h"

#include <algorithm>
#include <future>

#include "buildseg/core/error.h"
#include "buildseg/data/image_io.h"

namespace buildseg::data {

std::pair<RgbImage, Mask> load_record(const SampleRecord& record, const AdapterConfig& adapter, MapStats* stats) {
  auto image = read_rgb(record.image_uri);
  const auto labels = read_labels(record.mask_uri);
  if (labels.width != image.width || labels.height != image.height) {
    throw ShapeError(record.mask_uri + " is " + std::to_string(labels.width) + "x" + std::to_string(labels.height) +
                     " but its image is " + std::to_string(image.width) + "x" + std::to_string(image.height));
  }
  try {
    return {std::move(image), map_classes_binary(labels, adapter.mapping, adapter.strict, stats)};
  } catch (const FormatError& e) {
    throw FormatError(record.mask_uri + ": " + e.what());
  }
}

FuseSummary fuse_datasets(const std::vector<DatasetSource>& sources, const std::filesystem::path& store_root,
                          const FuseOptions& options) {
  if (sources.empty()) throw ConfigError("no datasets to fuse");
  struct Job {
    const SampleRecord* record;
    const AdapterConfig* adapter;
  };
  FuseSummary summary;
  std::vector<std::vector<SampleRecord>> records;
  std::vector<Job> jobs;
  for (const auto& source : sources) {
    auto ingested = ingest(source.root, source.adapter, options.seed);
    for (auto& w : ingested.warnings) summary.warnings.push_back(std::move(w));
    records.push_back(std::move(ingested.records));
  }
  for (std::size_t s = 0; s < sources.size(); ++s)
    for (const auto& r : records[s]) jobs.push_back({&r, &sources[s].adapter});

  struct Tiled {
    std::vector<PatchPair> patches;
    std::size_t unknown = 0;
  };
  auto run = [&](const Job& job) {
    MapStats stats;
    auto [image, mask] = load_record(*job.record, *job.adapter, &stats);
    TilingOptions tiling{kPatchSize, options.stride, job.adapter->rescale};
    return Tiled{tile_to_patches(image, mask, job.record->id, tiling), stats.unknown};
  };

  PatchStoreWriter writer(store_root);
  const std::size_t workers = static_cast<std::size_t>(std::max(1, options.workers));
  for (std::size_t start = 0; start < jobs.size(); start += workers) {
    const std::size_t end = std::min(jobs.size(), start + workers);
    std::vector<Tiled> results(end - start);
    if (workers == 1) {
      results[0] = run(jobs[start]);
    } else {
      std::vector<std::future<Tiled>> pending;
      for (std::size_t i = start; i < end; ++i) pending.push_back(std::async(std::launch::async, run, jobs[i]));
      for (std::size_t i = 0; i < pending.size(); ++i) results[i] = pending[i].get();
    }
    // Writes happen on this thread in job order.
    for (std::size_t i = 0; i < results.size(); ++i) {
      if (results[i].unknown > 0) {
        summary.warnings.push_back(jobs[start + i].record->mask_uri + ": " + std::to_string(results[i].unknown) +
                                   " pixels with unmapped labels set to background");
      }
      summary.unknown_labels += results[i].unknown;
      for (const auto& patch : results[i].patches) writer.add(*jobs[start + i].record, patch);
    }
  }
  summary.manifest = writer.finish();
  return summary;
}

}  // namespace buildseg::data
