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
#include <string>

#include "buildseg/eval/evaluate.h"

namespace buildseg::eval {

// Line-delimited JSON: a metadata record, then one record per row.
std::string report_to_jsonl(const MetricsReport& report);
MetricsReport report_from_jsonl(const std::string& text);

// Aligned "Model/Dataset  IOU  BIOU" table with 4-decimal scores.
std::string format_table(const MetricsReport& report);

struct ReportFiles {
  std::filesystem::path jsonl;
  std::filesystem::path table;
};

// Writes <dir>/<stem>.jsonl and <dir>/<stem>.txt.
ReportFiles emit_report(const MetricsReport& report, const std::filesystem::path& dir, const std::string& stem);

std::string format_score(const std::optional<double>& v);

}  // namespace buildseg::eval
