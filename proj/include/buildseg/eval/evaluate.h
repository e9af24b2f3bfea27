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
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "buildseg/core/grid.h"
#include "buildseg/metrics/metrics.h"
#include "buildseg/model/segformer.h"
#include "buildseg/train/trainer.h"

namespace buildseg::eval {

enum class Averaging { kMicro, kPerImage };

std::string averaging_name(Averaging a);
Averaging parse_averaging(const std::string& name);

struct ReportRow {
  std::string label;
  std::optional<double> iou;  // empty when every sample was skipped
  std::optional<double> biou;
  std::uint64_t samples = 0;
  std::uint64_t skipped = 0;
  metrics::ConfusionCounts counts;
  // Per-image mode: sums of defined per-image scores.
  double iou_sum = 0.0;
  double biou_sum = 0.0;
  std::uint64_t biou_samples = 0;

  bool operator==(const ReportRow&) const = default;
};

struct ReportMeta {
  std::string checkpoint;  // file name and content hash, or a stub name
  std::string corpus;      // hash over the evaluated patch names
  int d = 0;               // 0 means the per-patch default
  Averaging averaging = Averaging::kMicro;
  std::string timestamp;

  bool operator==(const ReportMeta&) const = default;
};

struct MetricsReport {
  ReportMeta meta;
  std::vector<ReportRow> rows;

  const ReportRow& row(const std::string& label) const;
  bool operator==(const MetricsReport&) const = default;
};

// Scores of a finished row recomputed from its counts or sums.
void finalize_row(ReportRow& row, Averaging averaging);

using Predictor = std::function<Mask(const train::Example&)>;

Predictor model_predictor(const model::Model& model);
// "gt-echo", "all-background" or "inverted"; these ignore the image.
Predictor stub_predictor(const std::string& kind);

struct EvalOptions {
  int d = 0;
  Averaging averaging = Averaging::kMicro;
  std::string checkpoint_id;
  std::string timestamp;
  std::filesystem::path overlay_dir;  // empty: no overlays
  double alpha = 0.5;
  int workers = 1;
};

// One row per dataset, in name order. Predictions and truth are cropped to
// each patch's valid region. Result does not depend on example order.
MetricsReport evaluate(const Predictor& predictor, const std::vector<train::Example>& examples,
                       const EvalOptions& options);

std::string checkpoint_id(const std::filesystem::path& checkpoint);

// Red blend under the mask, round-half-up per channel.
RgbImage render_overlay(const RgbImage& image, const Mask& mask, double alpha);

}  // namespace buildseg::eval
