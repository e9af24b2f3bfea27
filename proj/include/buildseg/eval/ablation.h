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
#include <optional>
#include <string>

#include "buildseg/data/patch_store.h"
#include "buildseg/eval/evaluate.h"
#include "buildseg/model/config.h"
#include "buildseg/train/trainer.h"

namespace buildseg::eval {

struct Corpus {
  std::string tag;
  std::vector<train::Example> train;
  std::vector<train::Example> test;
};

// Train and test splits of one dataset in a patch store.
Corpus load_corpus(const std::filesystem::path& store_root, const data::Manifest& manifest, const std::string& tag);

// Throws Error listing shared record ids if train and test overlap.
void check_disjoint(const Corpus& corpus);

struct AblationConfig {
  model::ModelConfig model = model::ModelConfig::tiny_preset();
  train::TrainOptions train;  // out_dir receives both runs' checkpoints and logs
  EvalOptions eval;
};

struct AblationReport {
  MetricsReport report;  // rows "self" and "fusion"
  std::optional<double> delta_iou;   // fusion - self
  std::optional<double> delta_biou;
  std::filesystem::path self_checkpoint;
  std::filesystem::path fusion_checkpoint;
};

// Trains A-only and A+B models from the same seed and budget and scores both
// on A's test split.
AblationReport run_ablation(const Corpus& a, const Corpus& b, const AblationConfig& config);

std::string ablation_table(const AblationReport& report);
std::string ablation_to_jsonl(const AblationReport& report);

}  // namespace buildseg::eval
