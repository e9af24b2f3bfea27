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

#include "buildseg/model/config.h"
#include "buildseg/train/optim.h"

namespace buildseg::cli {

// Flat "section.key" -> value settings, as read from an INI file or flags.
using Settings = std::map<std::string, std::string>;

struct RunConfig {
  std::string command;
  std::uint64_t seed = 0;
  int workers = 1;
  bool paper_mode = false;
  std::filesystem::path out = "out";

  std::string model_preset = "tiny";
  model::ModelConfig model;
  train::OptimConfig optim;

  std::filesystem::path store;  // patch store; defaults to <out>/store
  std::vector<std::string> datasets;
  std::vector<std::string> sources;  // tag=path
  std::filesystem::path adapter_dir;
  int stride = 256;
  std::string split = "test";
  int scenes = 20;
  std::vector<std::string> domains = {"a", "b"};

  std::string mode = "fusion";
  bool balanced = false;
  bool hflip = false;
  int checkpoint_every = 0;
  std::string run_name = "train";

  std::filesystem::path checkpoint;
  std::string stub;
  std::vector<std::string> manifests;
  int biou_d = 0;
  std::string averaging = "micro";
  std::filesystem::path overlays;  // defaults to <out>/overlays
  double alpha = 0.5;

  std::string ablate_a = "synthetic-a";
  std::string ablate_b = "synthetic-b";
  std::filesystem::path image;
  int cases = 100;

  bool operator==(const RunConfig&) const = default;
};

Settings read_settings(const std::filesystem::path& ini);

// Documented defaults, then `settings`. The optimizer starts from the desk
// profile, or the published constants when run.paper_mode is set. Throws
// ConfigError on unknown keys or bad values.
RunConfig resolve(const Settings& settings);

// Every field, in a form read_settings + resolve map back to the same config.
std::string to_ini(const RunConfig& config);

}  // namespace buildseg::cli
