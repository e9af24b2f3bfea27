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

#include "buildseg/data/adapter.h"

#include <algorithm>
#include <optional>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "buildseg/core/error.h"
#include "buildseg/core/hash.h"
#include "buildseg/core/rng.h"
#include "buildseg/data/image_io.h"

#ifndef BUILDSEG_ADAPTER_DIR
#define BUILDSEG_ADAPTER_DIR "configs/adapters"
#endif

namespace buildseg::data {
namespace {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

// stem -> path, keeping only files with an accepted extension.
std::map<std::string, fs::path> files_by_stem(const fs::path& dir, const std::vector<std::string>& exts,
                                              std::vector<std::string>& warnings) {
  std::map<std::string, fs::path> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = lower(entry.path().extension().string());
    if (std::find(exts.begin(), exts.end(), ext) == exts.end()) continue;
    const auto stem = entry.path().stem().string();
    auto [it, inserted] = out.emplace(stem, entry.path());
    if (!inserted) {
      // Keep the lexicographically smaller path so the choice is order independent.
      const auto keep = std::min(it->second, entry.path());
      warnings.push_back("duplicate stem '" + stem + "' in " + dir.string() + ", using " + keep.filename().string());
      it->second = keep;
    }
  }
  return out;
}

void collect(const fs::path& root, const AdapterConfig& adapter, std::optional<Split> split, std::uint64_t seed,
             IngestResult& result) {
  auto images = files_by_stem(root / adapter.image_dir, adapter.image_exts, result.warnings);
  auto masks = files_by_stem(root / adapter.mask_dir, adapter.mask_exts, result.warnings);
  for (const auto& [stem, image] : images) {
    const auto m = masks.find(stem);
    if (m == masks.end()) {
      result.warnings.push_back("skipping " + image.string() + ": no mask");
      continue;
    }
    SampleRecord r;
    r.id = stem;
    r.dataset = adapter.tag;
    r.image_uri = image.string();
    r.mask_uri = m->second.string();
    std::tie(r.width, r.height) = read_size(image);
    r.split = split ? *split : hash_split(adapter.tag, stem, seed);
    result.records.push_back(std::move(r));
  }
  for (const auto& [stem, mask] : masks) {
    if (!images.contains(stem)) result.warnings.push_back("skipping " + mask.string() + ": no image");
  }
}

}  // namespace

std::string split_name(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "train";
}

Split parse_split(const std::string& name) {
  if (name == "train") return Split::kTrain;
  if (name == "val") return Split::kVal;
  if (name == "test") return Split::kTest;
  throw ConfigError("unknown split '" + name + "'");
}

void ClassMapping::validate() const {
  if (map.empty()) throw ConfigError("class mapping for '" + dataset + "' is empty");
  bool building = false;
  for (const auto& [label, cls] : map) {
    if (cls > 1) throw ConfigError("class mapping for '" + dataset + "' maps label " + std::to_string(label) +
                                   " to " + std::to_string(cls) + ", expected 0 or 1");
    building |= cls == 1;
  }
  if (!building) throw ConfigError("class mapping for '" + dataset + "' has no building label");
}

AdapterConfig load_adapter(const fs::path& path) {
  pt::ptree tree;
  try {
    pt::read_ini(path.string(), tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("adapter config " + path.string() + ": " + e.message());
  }
  AdapterConfig a;
  try {
    a.tag = tree.get<std::string>("dataset.tag");
    a.image_dir = tree.get("dataset.image_dir", a.image_dir);
    a.mask_dir = tree.get("dataset.mask_dir", a.mask_dir);
    if (auto v = tree.get_optional<std::string>("dataset.image_ext")) a.image_exts = split_list(lower(*v));
    if (auto v = tree.get_optional<std::string>("dataset.mask_ext")) a.mask_exts = split_list(lower(*v));
    a.rescale = tree.get("dataset.rescale", a.rescale);
    a.strict = tree.get("dataset.strict", a.strict);
    a.mapping.dataset = a.tag;
    for (const auto& [key, value] : tree.get_child("classes")) {
      const int label = std::stoi(key);
      const int cls = value.get_value<int>();
      if (label < 0 || label > 65535) throw ConfigError("label " + key + " out of range");
      a.mapping.map[static_cast<std::uint16_t>(label)] = static_cast<std::uint8_t>(cls < 0 ? 255 : cls);
    }
  } catch (const pt::ptree_error& e) {
    throw ConfigError("adapter config " + path.string() + ": " + e.what());
  } catch (const std::logic_error& e) {
    throw ConfigError("adapter config " + path.string() + ": bad value (" + e.what() + ")");
  }
  if (!(a.rescale > 0.0)) throw ConfigError("adapter config " + path.string() + ": rescale must be positive");
  a.mapping.validate();
  return a;
}

AdapterConfig load_adapter(const fs::path& dir, const std::string& tag) {
  const auto path = dir / (tag + ".ini");
  if (!fs::exists(path)) throw ConfigError("no adapter config for '" + tag + "' in " + dir.string());
  return load_adapter(path);
}

fs::path default_adapter_dir() { return BUILDSEG_ADAPTER_DIR; }

Mask map_classes_binary(const LabelGrid& raw, const ClassMapping& mapping, bool strict, MapStats* stats) {
  std::vector<std::uint8_t> out(raw.values.size());
  std::size_t unknown = 0;
  // Dense lookup; 2 marks an unmapped label.
  std::vector<std::uint8_t> lut(65536, 2);
  for (const auto& [label, cls] : mapping.map) lut[label] = cls;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto cls = lut[raw.values[i]];
    if (cls == 2) {
      if (strict) {
        throw FormatError("label " + std::to_string(raw.values[i]) + " at pixel " + std::to_string(i) +
                          " is not in the '" + mapping.dataset + "' class mapping");
      }
      ++unknown;
      out[i] = 0;
    } else {
      out[i] = cls;
    }
  }
  if (stats) stats->unknown = unknown;
  return Mask(raw.width, raw.height, std::move(out));
}

Split hash_split(const std::string& dataset, const std::string& id, std::uint64_t seed) {
  const auto bucket = derive_seed(seed, fnv1a64(dataset + "/" + id)) % 10;
  if (bucket < 8) return Split::kTrain;
  return bucket == 8 ? Split::kVal : Split::kTest;
}

IngestResult ingest(const fs::path& root, const AdapterConfig& adapter, std::uint64_t seed) {
  if (!fs::is_directory(root)) throw IoError("dataset root " + root.string() + " does not exist");
  IngestResult result;
  bool structured = false;
  for (auto split : {Split::kTrain, Split::kVal, Split::kTest}) {
    const auto dir = root / split_name(split);
    if (fs::is_directory(dir / adapter.image_dir)) {
      structured = true;
      collect(dir, adapter, split, seed, result);
    }
  }
  if (!structured) collect(root, adapter, std::nullopt, seed, result);
  if (result.records.empty()) throw IoError("no image/mask pairs found under " + root.string());
  std::sort(result.records.begin(), result.records.end(),
            [](const SampleRecord& a, const SampleRecord& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < result.records.size(); ++i) {
    if (result.records[i].id == result.records[i - 1].id) {
      throw FormatError("sample id '" + result.records[i].id + "' appears in more than one split");
    }
  }
  return result;
}

}  // namespace buildseg::data
