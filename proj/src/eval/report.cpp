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

#include "buildseg/eval/report.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "buildseg/core/error.h"

namespace buildseg::eval {
namespace {

using nlohmann::json;

json score(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> score_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

}  // namespace

std::string format_score(const std::optional<double>& v) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", *v);
  return buf;
}

std::string report_to_jsonl(const MetricsReport& report) {
  const auto& m = report.meta;
  std::string out = json{{"type", "metadata"},
                         {"checkpoint", m.checkpoint},
                         {"corpus", m.corpus},
                         {"d", m.d},
                         {"averaging", averaging_name(m.averaging)},
                         {"timestamp", m.timestamp}}
                        .dump() +
                    "\n";
  for (const auto& r : report.rows) {
    const auto& c = r.counts;
    out += json{{"type", "row"},
                {"label", r.label},
                {"iou", score(r.iou)},
                {"biou", score(r.biou)},
                {"n", r.samples},
                {"skipped", r.skipped},
                {"intersection", c.intersection},
                {"union", c.union_},
                {"band_intersection", c.band_intersection},
                {"band_union", c.band_union},
                {"iou_sum", r.iou_sum},
                {"biou_sum", r.biou_sum},
                {"biou_n", r.biou_samples}}
               .dump() +
           "\n";
  }
  return out;
}

MetricsReport report_from_jsonl(const std::string& text) {
  MetricsReport report;
  std::istringstream in(text);
  std::string line;
  bool have_meta = false;
  std::size_t lineno = 0;
  try {
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      const auto j = json::parse(line);
      const auto type = j.at("type").get<std::string>();
      if (type == "metadata") {
        report.meta.checkpoint = j.at("checkpoint").get<std::string>();
        report.meta.corpus = j.at("corpus").get<std::string>();
        report.meta.d = j.at("d").get<int>();
        report.meta.averaging = parse_averaging(j.at("averaging").get<std::string>());
        report.meta.timestamp = j.at("timestamp").get<std::string>();
        have_meta = true;
      } else if (type == "row") {
        ReportRow r;
        r.label = j.at("label").get<std::string>();
        r.iou = score_from(j.at("iou"));
        r.biou = score_from(j.at("biou"));
        r.samples = j.at("n").get<std::uint64_t>();
        r.skipped = j.at("skipped").get<std::uint64_t>();
        r.counts.intersection = j.at("intersection").get<std::uint64_t>();
        r.counts.union_ = j.at("union").get<std::uint64_t>();
        r.counts.band_intersection = j.at("band_intersection").get<std::uint64_t>();
        r.counts.band_union = j.at("band_union").get<std::uint64_t>();
        r.counts.samples = r.samples;
        r.counts.samples_skipped = r.skipped;
        r.iou_sum = j.at("iou_sum").get<double>();
        r.biou_sum = j.at("biou_sum").get<double>();
        r.biou_samples = j.at("biou_n").get<std::uint64_t>();
        report.rows.push_back(std::move(r));
      }
    }
  } catch (const json::exception& e) {
    throw FormatError("report line " + std::to_string(lineno) + ": " + e.what());
  }
  if (!have_meta) throw FormatError("report has no metadata record");
  return report;
}

std::string format_table(const MetricsReport& report) {
  std::size_t width = std::string("Model/Dataset").size();
  for (const auto& r : report.rows) width = std::max(width, r.label.size());
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-*s  %6s  %6s\n", static_cast<int>(width), "Model/Dataset", "IOU", "BIOU");
  out << line;
  for (const auto& r : report.rows) {
    std::snprintf(line, sizeof(line), "%-*s  %6s  %6s\n", static_cast<int>(width), r.label.c_str(),
                  format_score(r.iou).c_str(), format_score(r.biou).c_str());
    out << line;
  }
  return out.str();
}

ReportFiles emit_report(const MetricsReport& report, const std::filesystem::path& dir, const std::string& stem) {
  std::filesystem::create_directories(dir);
  ReportFiles files{dir / (stem + ".jsonl"), dir / (stem + ".txt")};
  auto write = [](const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) throw IoError("cannot write " + path.string());
  };
  write(files.jsonl, report_to_jsonl(report));
  write(files.table, format_table(report));
  return files;
}

}  // namespace buildseg::eval
