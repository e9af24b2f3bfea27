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

#include <filesystem>
#include <functional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "buildseg/core/grid.h"
#include "buildseg/data/patch_store.h"
#include "buildseg/model/segformer.h"
#include "buildseg/train/optim.h"

namespace buildseg::train {

struct Example {
  RgbImage image;
  Mask mask;
  Rect valid;
  std::string dataset;
  std::string name;  // store-relative image path
  std::string id;    // source record id
};

// Loads one split of a patch store, optionally restricted to some datasets.
std::vector<Example> load_examples(const std::filesystem::path& store_root, const data::Manifest& manifest,
                                   data::Split split, const std::set<std::string>& datasets = {});

struct StepResult {
  double loss = 0.0;
  double lr = 0.0;
};

// Mean over the batch of each example's valid-region cross-entropy, one
// AdamW update at lr_at(state.t).
StepResult train_step(model::Model& model, std::span<const Example* const> batch, OptimState<float>& state,
                      const OptimConfig& cfg);

enum class Mode { kSelf, kFusion };

struct TrainOptions {
  OptimConfig optim;
  Mode mode = Mode::kFusion;
  bool balanced = false;  // equal dataset share per batch instead of size-proportional
  bool hflip = false;
  int checkpoint_every = 0;  // 0 keeps only the final checkpoint
  std::filesystem::path out_dir;  // checkpoints/ and logs/ go here; empty disables file output
  std::string run_name = "train";
};

struct TrainResult {
  std::vector<double> losses;
  std::vector<std::filesystem::path> checkpoints;
  std::filesystem::path loss_log;
};

using ProgressFn = std::function<void(int iter, const StepResult&)>;

// Batch composition depends only on optim.seed and the example order.
TrainResult train_loop(model::Model& model, const std::vector<Example>& corpus, const TrainOptions& options,
                       const ProgressFn& progress = {});

}  // namespace buildseg::train
