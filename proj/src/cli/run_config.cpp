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

#include "buildseg/cli/run_config.h"

#include <charconv>
#include <cstdio>
#include <functional>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "buildseg/core/error.h"
#include "buildseg/data/adapter.h"
#include "buildseg/eval/evaluate.h"

namespace buildseg::cli {
namespace {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) throw ConfigError(key + ": expected a number, got '" + text + "'");
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ConfigError(key + ": expected true or false, got '" + text + "'");
}

std::vector<std::string> parse_list(const std::string& text) {
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

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : ",") + s;
  return out;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct Field {
  const char* key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define BS_INT(KEY, MEMBER)                                                                          \
  Field {                                                                                            \
    KEY, [](RunConfig& c, const std::string& v) { c.MEMBER = parse_number<decltype(c.MEMBER)>(KEY, v); }, \
        [](const RunConfig& c) { return std::to_string(c.MEMBER); }                                  \
  }
#define BS_REAL(KEY, MEMBER)                                                                   \
  Field {                                                                                      \
    KEY, [](RunConfig& c, const std::string& v) { c.MEMBER = parse_number<double>(KEY, v); }, \
        [](const RunConfig& c) { return fmt(c.MEMBER); }                                       \
  }
#define BS_BOOL(KEY, MEMBER)                                                           \
  Field {                                                                              \
    KEY, [](RunConfig& c, const std::string& v) { c.MEMBER = parse_bool(KEY, v); },   \
        [](const RunConfig& c) { return std::string(c.MEMBER ? "true" : "false"); }    \
  }
#define BS_TEXT(KEY, MEMBER)                                                 \
  Field {                                                                    \
    KEY, [](RunConfig& c, const std::string& v) { c.MEMBER = v; },           \
        [](const RunConfig& c) { return std::string(c.MEMBER); }             \
  }
#define BS_PATH(KEY, MEMBER)                                                 \
  Field {                                                                    \
    KEY, [](RunConfig& c, const std::string& v) { c.MEMBER = v; },           \
        [](const RunConfig& c) { return c.MEMBER.string(); }                 \
  }
#define BS_LIST(KEY, MEMBER)                                                 \
  Field {                                                                    \
    KEY, [](RunConfig& c, const std::string& v) { c.MEMBER = parse_list(v); }, \
        [](const RunConfig& c) { return join(c.MEMBER); }                    \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      BS_TEXT("run.command", command),
      BS_INT("run.seed", seed),
      BS_INT("run.workers", workers),
      BS_BOOL("run.paper_mode", paper_mode),
      BS_PATH("output.root", out),
      BS_TEXT("model.preset", model_preset),
      BS_REAL("optimizer.lr", optim.base_lr),
      BS_REAL("optimizer.beta1", optim.beta1),
      BS_REAL("optimizer.beta2", optim.beta2),
      BS_REAL("optimizer.weight_decay", optim.weight_decay),
      BS_INT("optimizer.warmup_iters", optim.warmup_iters),
      BS_REAL("optimizer.warmup_ratio", optim.warmup_ratio),
      BS_REAL("optimizer.power", optim.power),
      BS_REAL("optimizer.min_lr", optim.min_lr),
      BS_INT("optimizer.max_iters", optim.max_iters),
      BS_INT("optimizer.batch_size", optim.batch_size),
      BS_REAL("optimizer.eps", optim.eps),
      BS_REAL("optimizer.clip_norm", optim.clip_norm),
      BS_PATH("data.store", store),
      BS_LIST("data.datasets", datasets),
      BS_LIST("data.sources", sources),
      BS_PATH("data.adapter_dir", adapter_dir),
      BS_INT("data.stride", stride),
      BS_TEXT("data.split", split),
      BS_INT("data.scenes", scenes),
      BS_LIST("data.domains", domains),
      BS_TEXT("train.mode", mode),
      BS_BOOL("train.balanced", balanced),
      BS_BOOL("train.hflip", hflip),
      BS_INT("train.checkpoint_every", checkpoint_every),
      BS_TEXT("train.run_name", run_name),
      BS_PATH("eval.checkpoint", checkpoint),
      BS_TEXT("eval.stub", stub),
      BS_LIST("eval.manifests", manifests),
      BS_INT("eval.biou_d", biou_d),
      BS_TEXT("eval.averaging", averaging),
      BS_PATH("eval.overlays", overlays),
      BS_REAL("eval.alpha", alpha),
      BS_TEXT("ablate.dataset_a", ablate_a),
      BS_TEXT("ablate.dataset_b", ablate_b),
      BS_PATH("infer.image", image),
      BS_INT("gradcheck.cases", cases),
  };
  return table;
}

#undef BS_INT
#undef BS_REAL
#undef BS_BOOL
#undef BS_TEXT
#undef BS_PATH
#undef BS_LIST

const Field* find_field(const std::string& key) {
  for (const auto& f : fields())
    if (key == f.key) return &f;
  return nullptr;
}

}  // namespace

Settings read_settings(const fs::path& ini) {
  pt::ptree tree;
  try {
    pt::read_ini(ini.string(), tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("cannot read config " + ini.string() + ": " + e.message());
  }
  Settings out;
  for (const auto& [section, body] : tree) {
    if (!body.data().empty()) throw ConfigError(ini.string() + ": key '" + section + "' outside a section");
    for (const auto& [key, value] : body) out[section + "." + key] = value.data();
  }
  return out;
}

RunConfig resolve(const Settings& settings) {
  for (const auto& [key, value] : settings)
    if (!find_field(key)) throw ConfigError("unknown setting '" + key + "'");

  RunConfig c;
  auto apply = [&](const char* key) {
    if (auto it = settings.find(key); it != settings.end()) find_field(key)->set(c, it->second);
  };
  apply("run.paper_mode");
  apply("optimizer.max_iters");
  c.optim = c.paper_mode ? train::OptimConfig::published(c.optim.max_iters) : train::OptimConfig::desk(c.optim.max_iters);
  for (const auto& [key, value] : settings) find_field(key)->set(c, value);

  c.optim.seed = c.seed;
  if (c.model_preset == "tiny") {
    c.model = model::ModelConfig::tiny_preset();
  } else if (c.model_preset == "small") {
    c.model = model::ModelConfig::small_preset();
  } else {
    throw ConfigError("model.preset: expected tiny or small, got '" + c.model_preset + "'");
  }
  c.optim.validate();
  if (c.workers < 1) throw ConfigError("run.workers must be at least 1");
  if (c.mode != "self" && c.mode != "fusion") throw ConfigError("train.mode: expected self or fusion, got '" + c.mode + "'");
  if (c.checkpoint_every < 0) throw ConfigError("train.checkpoint_every must be non-negative");
  if (c.stride < 1) throw ConfigError("data.stride must be positive");
  if (c.scenes < 1) throw ConfigError("data.scenes must be positive");
  if (c.biou_d < 0) throw ConfigError("eval.biou_d must be non-negative");
  if (!(c.alpha >= 0.0 && c.alpha <= 1.0)) throw ConfigError("eval.alpha must lie in [0, 1]");
  if (c.cases < 1) throw ConfigError("gradcheck.cases must be positive");
  data::parse_split(c.split);
  eval::parse_averaging(c.averaging);
  return c;
}

std::string to_ini(const RunConfig& config) {
  std::string out, section;
  for (const auto& f : fields()) {
    const std::string key = f.key;
    const auto dot = key.find('.');
    if (key.substr(0, dot) != section) {
      section = key.substr(0, dot);
      out += (out.empty() ? "[" : "\n[") + section + "]\n";
    }
    out += key.substr(dot + 1) + " = " + f.get(config) + "\n";
  }
  return out;
}

}  // namespace buildseg::cli
