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

#include "buildseg/eval/evaluate.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <iterator>
#include <map>

#include "buildseg/core/error.h"
#include "buildseg/core/hash.h"
#include "buildseg/data/image_io.h"

namespace buildseg::eval {
namespace {

namespace fs = std::filesystem;

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string stem_of(const std::string& name) { return fs::path(name).stem().string(); }

}  // namespace

std::string averaging_name(Averaging a) { return a == Averaging::kMicro ? "micro" : "per-image"; }

Averaging parse_averaging(const std::string& name) {
  if (name == "micro") return Averaging::kMicro;
  if (name == "per-image") return Averaging::kPerImage;
  throw ConfigError("unknown averaging '" + name + "' (expected micro or per-image)");
}

const ReportRow& MetricsReport::row(const std::string& label) const {
  for (const auto& r : rows)
    if (r.label == label) return r;
  throw Error("report has no row '" + label + "'");
}

void finalize_row(ReportRow& row, Averaging averaging) {
  row.samples = row.counts.samples;
  row.skipped = row.counts.samples_skipped;
  if (averaging == Averaging::kMicro) {
    row.iou = row.counts.iou();
    row.biou = row.counts.biou();
    return;
  }
  row.iou = row.samples ? std::optional(row.iou_sum / static_cast<double>(row.samples)) : std::nullopt;
  row.biou = row.biou_samples ? std::optional(row.biou_sum / static_cast<double>(row.biou_samples)) : std::nullopt;
}

Predictor model_predictor(const model::Model& model) {
  return [&model](const train::Example& ex) { return model.predict(ex.image); };
}

Predictor stub_predictor(const std::string& kind) {
  if (kind == "gt-echo") return [](const train::Example& ex) { return ex.mask; };
  if (kind == "all-background") {
    return [](const train::Example& ex) { return Mask(ex.mask.width(), ex.mask.height()); };
  }
  if (kind == "inverted") {
    return [](const train::Example& ex) {
      std::vector<std::uint8_t> v(ex.mask.values().begin(), ex.mask.values().end());
      for (auto& x : v) x = 1 - x;
      return Mask(ex.mask.width(), ex.mask.height(), std::move(v));
    };
  }
  throw ConfigError("unknown predictor stub '" + kind + "' (expected gt-echo, all-background or inverted)");
}

MetricsReport evaluate(const Predictor& predictor, const std::vector<train::Example>& examples,
                       const EvalOptions& options) {
  if (examples.empty()) throw ConfigError("nothing to evaluate: the test set is empty");
  if (options.d < 0) throw ConfigError("boundary distance must be positive");
  if (!(options.alpha >= 0.0 && options.alpha <= 1.0)) throw ConfigError("overlay alpha must be in [0, 1]");

  // Fixed processing order makes the floating-point sums order independent.
  std::vector<const train::Example*> order;
  for (const auto& e : examples) order.push_back(&e);
  std::sort(order.begin(), order.end(), [](const auto* a, const auto* b) {
    return std::tie(a->dataset, a->name) < std::tie(b->dataset, b->name);
  });

  std::string names;
  for (const auto* e : order) names += e->dataset + "/" + e->name + "\n";
  MetricsReport report;
  report.meta = ReportMeta{options.checkpoint_id, hex64(fnv1a64(names)), options.d, options.averaging,
                           options.timestamp};

  std::vector<Mask> predictions(order.size());
  const std::size_t workers = static_cast<std::size_t>(std::max(1, options.workers));
  for (std::size_t start = 0; start < order.size(); start += workers) {
    const std::size_t end = std::min(order.size(), start + workers);
    if (workers == 1) {
      predictions[start] = predictor(*order[start]);
      continue;
    }
    std::vector<std::future<Mask>> pending;
    for (std::size_t i = start; i < end; ++i) pending.push_back(std::async(std::launch::async, predictor, std::cref(*order[i])));
    for (std::size_t i = start; i < end; ++i) predictions[i] = pending[i - start].get();
  }

  std::map<std::string, ReportRow> rows;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto& ex = *order[i];
    const auto& pred = predictions[i];
    if (pred.width() != ex.mask.width() || pred.height() != ex.mask.height()) {
      throw ShapeError("prediction for " + ex.name + " has the wrong size");
    }
    const int d = options.d > 0 ? options.d : metrics::default_boundary_distance(ex.mask.height(), ex.mask.width());
    const auto& v = ex.valid;
    const auto p = pred.crop(v.row, v.col, v.height, v.width);
    const auto t = ex.mask.crop(v.row, v.col, v.height, v.width);
    auto& row = rows[ex.dataset];
    row.label = ex.dataset;
    row.counts = metrics::accumulate(row.counts, p, t, d);
    if (options.averaging == Averaging::kPerImage) {
      const auto c = metrics::pair_counts(p, t, d);
      if (c.union_ > 0) row.iou_sum += static_cast<double>(c.intersection) / static_cast<double>(c.union_);
      if (c.band_union > 0) {
        row.biou_sum += static_cast<double>(c.band_intersection) / static_cast<double>(c.band_union);
        ++row.biou_samples;
      }
    }
    if (!options.overlay_dir.empty()) {
      const auto dir = options.overlay_dir / ex.dataset;
      fs::create_directories(dir);
      data::write_ppm(dir / (stem_of(ex.name) + ".ppm"), render_overlay(ex.image, pred, options.alpha));
    }
  }
  for (auto& [label, row] : rows) {
    finalize_row(row, options.averaging);
    report.rows.push_back(row);
  }
  return report;
}

std::string checkpoint_id(const fs::path& checkpoint) {
  std::ifstream in(checkpoint, std::ios::binary);
  if (!in) throw IoError("cannot open " + checkpoint.string());
  const std::string bytes{std::istreambuf_iterator<char>(in), {}};
  return checkpoint.filename().string() + "@" + hex64(fnv1a64(bytes));
}

RgbImage render_overlay(const RgbImage& image, const Mask& mask, double alpha) {
  if (image.width != mask.width() || image.height != mask.height()) {
    throw ShapeError("overlay: image " + std::to_string(image.width) + "x" + std::to_string(image.height) +
                     " and mask " + std::to_string(mask.width()) + "x" + std::to_string(mask.height()) + " differ");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("overlay alpha must be in [0, 1]");
  RgbImage out = image;
  const double red[3] = {255.0, 0.0, 0.0};
  for (int r = 0; r < image.height; ++r) {
    for (int c = 0; c < image.width; ++c) {
      if (!mask.at(r, c)) continue;
      for (int k = 0; k < 3; ++k) {
        const double v = (1.0 - alpha) * image.at(r, c)[k] + alpha * red[k];
        out.at(r, c)[k] = static_cast<std::uint8_t>(std::min(255.0, std::floor(v + 0.5)));
      }
    }
  }
  return out;
}

}  // namespace buildseg::eval
