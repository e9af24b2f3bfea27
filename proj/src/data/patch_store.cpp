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

#include "buildseg/data/patch_store.h"

#include <algorithm>
#include <fstream>
#include <tuple>

#include <nlohmann/json.hpp>

#include "buildseg/core/error.h"
#include "buildseg/core/hash.h"

namespace buildseg::data {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

void write_file(const fs::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("cannot write " + path.string());
}

std::vector<std::uint8_t> read_file(const fs::path& path, std::size_t expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes(expected + 1);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  const auto got = static_cast<std::size_t>(in.gcount());
  if (got != expected) {
    throw FormatError(path.string() + ": expected " + std::to_string(expected) + " bytes, found " +
                      (got > expected ? "more" : std::to_string(got)));
  }
  bytes.resize(expected);
  return bytes;
}

json entry_to_json(const ManifestEntry& e) {
  const auto& v = e.provenance.valid;
  return json{{"id", e.record.id},
              {"dataset", e.record.dataset},
              {"image_uri", e.record.image_uri},
              {"mask_uri", e.record.mask_uri},
              {"width", e.record.width},
              {"height", e.record.height},
              {"split", split_name(e.record.split)},
              {"tile_row", e.provenance.tile_row},
              {"tile_col", e.provenance.tile_col},
              {"valid", {v.row, v.col, v.height, v.width}},
              {"image_file", e.image_file},
              {"mask_file", e.mask_file},
              {"image_crc32", e.image_crc32},
              {"mask_crc32", e.mask_crc32},
              {"building_pixels", e.building_pixels},
              {"valid_pixels", e.valid_pixels}};
}

ManifestEntry entry_from_json(const json& j) {
  ManifestEntry e;
  e.record.id = j.at("id").get<std::string>();
  e.record.dataset = j.at("dataset").get<std::string>();
  e.record.image_uri = j.at("image_uri").get<std::string>();
  e.record.mask_uri = j.at("mask_uri").get<std::string>();
  e.record.width = j.at("width").get<int>();
  e.record.height = j.at("height").get<int>();
  e.record.split = parse_split(j.at("split").get<std::string>());
  e.provenance.record_id = e.record.id;
  e.provenance.tile_row = j.at("tile_row").get<int>();
  e.provenance.tile_col = j.at("tile_col").get<int>();
  const auto& v = j.at("valid");
  e.provenance.valid = Rect{v.at(0).get<int>(), v.at(1).get<int>(), v.at(2).get<int>(), v.at(3).get<int>()};
  e.image_file = j.at("image_file").get<std::string>();
  e.mask_file = j.at("mask_file").get<std::string>();
  e.image_crc32 = j.at("image_crc32").get<std::uint32_t>();
  e.mask_crc32 = j.at("mask_crc32").get<std::uint32_t>();
  e.building_pixels = j.at("building_pixels").get<std::uint64_t>();
  e.valid_pixels = j.at("valid_pixels").get<std::uint64_t>();
  return e;
}

json stats_to_json(const ManifestStats& s) {
  return json{{"patches", s.patches},
              {"records", s.records},
              {"building_pixels", s.building_pixels},
              {"valid_pixels", s.valid_pixels},
              {"building_fraction", s.building_fraction()}};
}

bool entry_less(const ManifestEntry& a, const ManifestEntry& b) {
  return std::tie(a.record.id, a.record.dataset, a.provenance.tile_row, a.provenance.tile_col) <
         std::tie(b.record.id, b.record.dataset, b.provenance.tile_row, b.provenance.tile_col);
}

}  // namespace

double ManifestStats::building_fraction() const {
  return valid_pixels == 0 ? 0.0 : static_cast<double>(building_pixels) / static_cast<double>(valid_pixels);
}

std::vector<const ManifestEntry*> Manifest::select(Split split, const std::set<std::string>& datasets) const {
  std::vector<const ManifestEntry*> out;
  for (const auto& e : entries) {
    if (e.record.split == split && (datasets.empty() || datasets.contains(e.record.dataset))) out.push_back(&e);
  }
  return out;
}

ManifestStats compute_stats(const std::vector<ManifestEntry>& entries) {
  ManifestStats s;
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& e : entries) {
    ++s.patches[e.record.dataset];
    if (seen.emplace(e.record.dataset, e.record.id).second) ++s.records[e.record.dataset];
    s.building_pixels += e.building_pixels;
    s.valid_pixels += e.valid_pixels;
  }
  return s;
}

PatchStoreWriter::PatchStoreWriter(fs::path root) : root_(std::move(root)) {
  std::error_code ec;
  fs::create_directories(root_, ec);
  if (ec || !fs::is_directory(root_)) throw IoError("cannot create patch store at " + root_.string());
  // A stale manifest must never describe the new contents.
  fs::remove(root_ / "manifest.jsonl");
  fs::remove(root_ / "stats.json");
  fs::remove_all(root_ / "patches");
}

void PatchStoreWriter::add(const SampleRecord& record, const PatchPair& patch) {
  if (finished_) throw Error("patch store already finished");
  if (patch.image.width != kPatchSize || patch.image.height != kPatchSize || patch.mask.width() != kPatchSize ||
      patch.mask.height() != kPatchSize) {
    throw ShapeError("patch store holds " + std::to_string(kPatchSize) + "x" + std::to_string(kPatchSize) +
                     " patches only");
  }
  const auto dir = fs::path("patches") / split_name(record.split) / record.dataset;
  const auto stem = record.id + "_" + std::to_string(patch.provenance.tile_row) + "_" +
                    std::to_string(patch.provenance.tile_col);
  ManifestEntry e;
  e.record = record;
  e.provenance = patch.provenance;
  e.image_file = (dir / (stem + ".img")).generic_string();
  e.mask_file = (dir / (stem + ".msk")).generic_string();
  if (!files_.insert(e.image_file).second) throw Error("patch " + e.image_file + " written twice");
  fs::create_directories(root_ / dir);
  write_file(root_ / e.image_file, patch.image.pixels);
  write_file(root_ / e.mask_file, patch.mask.values());
  e.image_crc32 = crc32(patch.image.pixels);
  e.mask_crc32 = crc32(patch.mask.values());
  const auto& v = patch.provenance.valid;
  for (int r = v.row; r < v.row + v.height; ++r)
    for (int c = v.col; c < v.col + v.width; ++c) e.building_pixels += patch.mask.at(r, c);
  e.valid_pixels = static_cast<std::uint64_t>(v.area());
  entries_.push_back(std::move(e));
}

Manifest PatchStoreWriter::finish() {
  if (finished_) throw Error("patch store already finished");
  finished_ = true;
  Manifest m;
  m.entries = std::move(entries_);
  std::sort(m.entries.begin(), m.entries.end(), entry_less);
  m.stats = compute_stats(m.entries);
  {
    std::ofstream out(root_ / "stats.json", std::ios::binary | std::ios::trunc);
    out << stats_to_json(m.stats).dump(2) << '\n';
    if (!out) throw IoError("cannot write " + (root_ / "stats.json").string());
  }
  const auto tmp = root_ / "manifest.jsonl.tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    for (const auto& e : m.entries) out << entry_to_json(e).dump() << '\n';
    if (!out) throw IoError("cannot write " + tmp.string());
  }
  fs::rename(tmp, root_ / "manifest.jsonl");
  return m;
}

Manifest write_patch_store(const fs::path& root, const std::vector<std::pair<SampleRecord, PatchPair>>& patches) {
  PatchStoreWriter writer(root);
  for (const auto& [record, patch] : patches) writer.add(record, patch);
  return writer.finish();
}

Manifest read_manifest(const fs::path& root) {
  const auto path = root / "manifest.jsonl";
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("no manifest at " + path.string() + " (store missing or incomplete)");
  Manifest m;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      m.entries.push_back(entry_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  m.stats = compute_stats(m.entries);
  std::ifstream stats_in(root / "stats.json");
  if (stats_in) {
    json stored;
    try {
      stats_in >> stored;
    } catch (const json::exception& e) {
      throw FormatError((root / "stats.json").string() + ": " + e.what());
    }
    if (stored != stats_to_json(m.stats)) {
      throw FormatError((root / "stats.json").string() + " disagrees with the manifest records");
    }
  }
  return m;
}

PatchPair load_patch(const fs::path& root, const ManifestEntry& entry) {
  PatchPair p;
  p.image.width = p.image.height = kPatchSize;
  p.image.pixels = read_file(root / entry.image_file, kPatchImageBytes);
  if (crc32(p.image.pixels) != entry.image_crc32) throw FormatError((root / entry.image_file).string() + ": checksum mismatch");
  auto mask = read_file(root / entry.mask_file, kPatchMaskBytes);
  if (crc32(mask) != entry.mask_crc32) throw FormatError((root / entry.mask_file).string() + ": checksum mismatch");
  try {
    p.mask = Mask(kPatchSize, kPatchSize, std::move(mask));
  } catch (const FormatError& e) {
    throw FormatError((root / entry.mask_file).string() + ": " + e.what());
  }
  p.provenance = entry.provenance;
  return p;
}

}  // namespace buildseg::data
