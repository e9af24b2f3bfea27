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

#include "buildseg/eval/ablation.h"

#include <algorithm>
#include <cstdio>
#include <set>

#include <nlohmann/json.hpp>

#include "buildseg/core/error.h"
#include "buildseg/eval/report.h"
#include "buildseg/model/checkpoint.h"

namespace buildseg::eval {
namespace {

std::optional<double> diff(const std::optional<double>& a, const std::optional<double>& b) {
  if (!a || !b) return std::nullopt;
  return *a - *b;
}

std::string signed_score(const std::optional<double>& v) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%+.4f", *v);
  return buf;
}

}  // namespace

Corpus load_corpus(const std::filesystem::path& store_root, const data::Manifest& manifest, const std::string& tag) {
  Corpus c;
  c.tag = tag;
  c.train = train::load_examples(store_root, manifest, data::Split::kTrain, {tag});
  c.test = train::load_examples(store_root, manifest, data::Split::kTest, {tag});
  if (c.train.empty()) throw ConfigError("dataset '" + tag + "' has no training patches in " + store_root.string());
  return c;
}

void check_disjoint(const Corpus& corpus) {
  std::set<std::string> train_ids;
  for (const auto& e : corpus.train) train_ids.insert(e.id);
  std::set<std::string> shared;
  for (const auto& e : corpus.test)
    if (train_ids.contains(e.id)) shared.insert(e.id);
  if (shared.empty()) return;
  std::string list;
  for (const auto& id : shared) list += (list.empty() ? "" : ", ") + id;
  throw Error("train and test splits of '" + corpus.tag + "' share records: " + list);
}

AblationReport run_ablation(const Corpus& a, const Corpus& b, const AblationConfig& config) {
  check_disjoint(a);
  check_disjoint(b);
  if (a.test.empty()) throw ConfigError("dataset '" + a.tag + "' has no test patches");
  if (a.tag == b.tag) throw ConfigError("ablation needs two different datasets");

  AblationReport out;
  out.report.meta.averaging = config.eval.averaging;
  out.report.meta.d = config.eval.d;
  out.report.meta.timestamp = config.eval.timestamp;

  auto run = [&](const std::string& label, const std::vector<train::Example>& corpus, train::Mode mode) {
    auto model = model::Model::initialized(config.model, config.train.optim.seed);
    auto opts = config.train;
    opts.mode = mode;
    opts.run_name = label;
    const auto trained = train::train_loop(model, corpus, opts);
    EvalOptions eval = config.eval;
    if (!trained.checkpoints.empty()) eval.checkpoint_id = checkpoint_id(trained.checkpoints.back());
    if (!eval.overlay_dir.empty()) eval.overlay_dir /= label;
    auto report = evaluate(model_predictor(model), a.test, eval);
    auto row = report.rows.at(0);
    row.label = label;
    out.report.rows.push_back(row);
    out.report.meta.corpus = report.meta.corpus;
    return trained.checkpoints.empty() ? std::filesystem::path() : trained.checkpoints.back();
  };

  out.self_checkpoint = run("self", a.train, train::Mode::kSelf);
  std::vector<train::Example> fused = a.train;
  fused.insert(fused.end(), b.train.begin(), b.train.end());
  out.fusion_checkpoint = run("fusion", fused, train::Mode::kFusion);
  out.report.meta.checkpoint = "self+fusion";

  const auto& self = out.report.rows[0];
  const auto& fusion = out.report.rows[1];
  out.delta_iou = diff(fusion.iou, self.iou);
  out.delta_biou = diff(fusion.biou, self.biou);
  return out;
}

std::string ablation_table(const AblationReport& report) {
  const std::string delta_label = "delta (fusion-self)";
  std::size_t width = delta_label.size();
  for (const auto& r : report.report.rows) width = std::max(width, r.label.size());
  std::string out;
  char line[256];
  const auto add = [&](const std::string& label, const std::string& iou, const std::string& biou) {
    std::snprintf(line, sizeof(line), "%-*s  %7s  %7s\n", static_cast<int>(width), label.c_str(), iou.c_str(),
                  biou.c_str());
    out += line;
  };
  add("Model/Dataset", "IOU", "BIOU");
  for (const auto& r : report.report.rows) add(r.label, format_score(r.iou), format_score(r.biou));
  add(delta_label, signed_score(report.delta_iou), signed_score(report.delta_biou));
  return out;
}

std::string ablation_to_jsonl(const AblationReport& report) {
  auto text = report_to_jsonl(report.report);
  nlohmann::json delta{{"type", "delta"}};
  delta["iou"] = report.delta_iou ? nlohmann::json(*report.delta_iou) : nlohmann::json(nullptr);
  delta["biou"] = report.delta_biou ? nlohmann::json(*report.delta_biou) : nlohmann::json(nullptr);
  return text + delta.dump() + "\n";
}

}  // namespace buildseg::eval
