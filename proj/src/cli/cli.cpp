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

#include "buildseg/cli/cli.h"

#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>

#include <CLI11.hpp>

#include "buildseg/cli/run_config.h"
#include "buildseg/core/error.h"
#include "buildseg/data/fusion.h"
#include "buildseg/data/image_io.h"
#include "buildseg/data/synthetic.h"
#include "buildseg/eval/ablation.h"
#include "buildseg/eval/evaluate.h"
#include "buildseg/eval/report.h"
#include "buildseg/model/checkpoint.h"
#include "buildseg/verify/gradcheck_suite.h"

namespace buildseg::cli {
namespace {

namespace fs = std::filesystem;

enum : unsigned {
  kSynth = 1,
  kFuse = 2,
  kTrain = 4,
  kEval = 8,
  kAblate = 16,
  kGradcheck = 32,
  kInfer = 64,
  kAll = 127,
};

struct Flag {
  const char* name;
  const char* key;
  const char* help;
  unsigned commands;
  bool is_switch = false;
  bool repeat = false;
};

const std::vector<Flag>& flags() {
  static const std::vector<Flag> table = {
      {"--seed", "run.seed", "master seed", kAll},
      {"--out", "output.root", "output directory", kAll},
      {"--workers", "run.workers", "parallel fan-out cap", kAll},
      {"--paper-mode", "run.paper_mode", "published optimizer constants (batch 32, warmup 1500)", kAll, true},
      {"--scenes", "data.scenes", "scenes per domain", kSynth},
      {"--domain", "data.domains", "synthetic domain a or b", kSynth, false, true},
      {"--source", "data.sources", "dataset as tag=path", kFuse, false, true},
      {"--adapter-dir", "data.adapter_dir", "directory of <tag>.ini adapters", kFuse},
      {"--stride", "data.stride", "tile stride in pixels", kFuse},
      {"--store", "data.store", "patch store root", kFuse | kTrain | kEval | kAblate},
      {"--dataset", "data.datasets", "restrict to a dataset tag", kTrain | kEval, false, true},
      {"--split", "data.split", "train, val or test", kEval},
      {"--model", "model.preset", "tiny or small", kTrain | kAblate},
      {"--lr", "optimizer.lr", "base learning rate", kTrain | kAblate},
      {"--weight-decay", "optimizer.weight_decay", "decoupled weight decay", kTrain | kAblate},
      {"--warmup", "optimizer.warmup_iters", "linear warmup iterations", kTrain | kAblate},
      {"--iters", "optimizer.max_iters", "training iterations", kTrain | kAblate},
      {"--batch", "optimizer.batch_size", "examples per step", kTrain | kAblate},
      {"--clip-norm", "optimizer.clip_norm", "global gradient norm clip, 0 disables", kTrain | kAblate},
      {"--mode", "train.mode", "self or fusion", kTrain},
      {"--balanced", "train.balanced", "equal dataset share per batch", kTrain | kAblate, true},
      {"--hflip", "train.hflip", "random horizontal flips", kTrain | kAblate, true},
      {"--checkpoint-every", "train.checkpoint_every", "iterations between checkpoints, 0 keeps the final one", kTrain},
      {"--run-name", "train.run_name", "prefix for checkpoints and logs", kTrain},
      {"--checkpoint", "eval.checkpoint", "model checkpoint", kEval | kInfer},
      {"--stub", "eval.stub", "gt-echo, all-background or inverted instead of a checkpoint", kEval},
      {"--manifest", "eval.manifests", "patch store to evaluate", kEval, false, true},
      {"--biou-d", "eval.biou_d", "boundary width, 0 scales with patch size", kEval | kAblate},
      {"--averaging", "eval.averaging", "micro or per-image", kEval | kAblate},
      {"--overlays", "eval.overlays", "overlay directory", kEval | kInfer},
      {"--alpha", "eval.alpha", "overlay opacity", kEval | kInfer},
      {"--dataset-a", "ablate.dataset_a", "target dataset tag", kAblate},
      {"--dataset-b", "ablate.dataset_b", "auxiliary dataset tag", kAblate},
      {"--image", "infer.image", "input image", kInfer},
      {"--cases", "gradcheck.cases", "seeded cases per op", kGradcheck},
  };
  return table;
}

std::string timestamp() {
  const char* epoch = std::getenv("SOURCE_DATE_EPOCH");
  if (!epoch || !*epoch) return "";
  const std::time_t t = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

model::Model load_model(const fs::path& path) {
  if (path.empty()) throw ConfigError("a checkpoint is required (--checkpoint)");
  auto ckpt = model::load_checkpoint(path);
  return model::Model(ckpt.config, std::move(ckpt.params));
}

train::TrainOptions train_options(const RunConfig& c) {
  train::TrainOptions o;
  o.optim = c.optim;
  o.mode = c.mode == "self" ? train::Mode::kSelf : train::Mode::kFusion;
  o.balanced = c.balanced;
  o.hflip = c.hflip;
  o.checkpoint_every = c.checkpoint_every;
  o.out_dir = c.out;
  o.run_name = c.run_name;
  return o;
}

eval::EvalOptions eval_options(const RunConfig& c) {
  eval::EvalOptions o;
  o.d = c.biou_d;
  o.averaging = eval::parse_averaging(c.averaging);
  o.timestamp = timestamp();
  o.alpha = c.alpha;
  o.workers = c.workers;
  return o;
}

int cmd_synth(const RunConfig& c, std::ostream& out) {
  for (const auto& name : c.domains) {
    const auto domain = data::parse_domain(name);
    const auto root = c.out / data::domain_tag(domain);
    data::generate_synthetic(root, c.seed, c.scenes, domain);
    out << "synth: " << c.scenes << " scenes -> " << root.string() << "\n";
  }
  return 0;
}

int cmd_fuse(const RunConfig& c, std::ostream& out) {
  if (c.sources.empty()) throw ConfigError("fuse needs at least one --source tag=path");
  const auto adapter_dir = c.adapter_dir.empty() ? data::default_adapter_dir() : c.adapter_dir;
  std::vector<data::DatasetSource> sources;
  for (const auto& s : c.sources) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("source '" + s + "' is not tag=path");
    sources.push_back({s.substr(eq + 1), data::load_adapter(adapter_dir, s.substr(0, eq))});
  }
  data::FuseOptions opts;
  opts.stride = c.stride;
  opts.seed = c.seed;
  opts.workers = c.workers;
  const auto summary = data::fuse_datasets(sources, c.store, opts);
  for (const auto& w : summary.warnings) out << "warning: " << w << "\n";
  const auto& st = summary.manifest.stats;
  for (const auto& [tag, n] : st.patches)
    out << "fuse: " << tag << " " << st.records.at(tag) << " records, " << n << " patches\n";
  out << "fuse: building fraction " << eval::format_score(st.building_fraction()) << " -> " << c.store.string()
      << "\n";
  if (summary.unknown_labels) out << "fuse: " << summary.unknown_labels << " unknown label pixels set to background\n";
  return 0;
}

int cmd_train(const RunConfig& c, std::ostream& out) {
  const auto store = c.store;
  const auto manifest = data::read_manifest(store);
  const std::set<std::string> datasets(c.datasets.begin(), c.datasets.end());
  const auto examples = train::load_examples(store, manifest, data::Split::kTrain, datasets);
  if (examples.empty()) throw ConfigError("no training patches in " + store.string());
  auto model = model::Model::initialized(c.model, c.seed);
  const int every = std::max(1, c.optim.max_iters / 20);
  const auto result = train::train_loop(model, examples, train_options(c), [&](int iter, const train::StepResult& s) {
    if ((iter + 1) % every == 0 || iter + 1 == c.optim.max_iters)
      out << "iter " << iter + 1 << "/" << c.optim.max_iters << "  lr " << s.lr << "  loss " << s.loss << "\n";
  });
  out << "train: " << examples.size() << " patches, loss log " << result.loss_log.string() << "\n";
  if (!result.checkpoints.empty()) out << "train: checkpoint " << result.checkpoints.back().string() << "\n";
  return 0;
}

int cmd_eval(const RunConfig& c, std::ostream& out) {
  std::optional<model::Model> model;
  eval::Predictor predictor;
  auto opts = eval_options(c);
  if (!c.stub.empty()) {
    predictor = eval::stub_predictor(c.stub);
    opts.checkpoint_id = "stub:" + c.stub;
  } else {
    model.emplace(load_model(c.checkpoint));
    predictor = eval::model_predictor(*model);
    opts.checkpoint_id = eval::checkpoint_id(c.checkpoint);
  }
  std::vector<fs::path> roots(c.manifests.begin(), c.manifests.end());
  if (roots.empty()) roots.push_back(c.store);
  const std::set<std::string> datasets(c.datasets.begin(), c.datasets.end());
  std::vector<train::Example> examples;
  for (const auto& root : roots) {
    auto part = train::load_examples(root, data::read_manifest(root), data::parse_split(c.split), datasets);
    examples.insert(examples.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  opts.overlay_dir = c.overlays;
  const auto report = eval::evaluate(predictor, examples, opts);
  const auto files = eval::emit_report(report, c.out / "reports", "eval");
  out << eval::format_table(report) << "eval: report " << files.jsonl.string() << "\n";
  return 0;
}

int cmd_ablate(const RunConfig& c, std::ostream& out) {
  const auto store = c.store;
  const auto manifest = data::read_manifest(store);
  eval::AblationConfig cfg;
  cfg.model = c.model;
  cfg.train = train_options(c);
  cfg.eval = eval_options(c);
  const auto report =
      eval::run_ablation(eval::load_corpus(store, manifest, c.ablate_a), eval::load_corpus(store, manifest, c.ablate_b), cfg);
  const auto table = eval::ablation_table(report);
  fs::create_directories(c.out / "reports");
  std::ofstream(c.out / "reports" / "ablation.jsonl", std::ios::binary) << eval::ablation_to_jsonl(report);
  std::ofstream(c.out / "reports" / "ablation.txt", std::ios::binary) << table;
  out << table;
  return 0;
}

int cmd_gradcheck(const RunConfig& c, std::ostream& out, std::ostream& err) {
  std::string failed;
  char line[160];
  for (const auto& r : verify::run_op_gradchecks(c.seed, c.cases)) {
    std::snprintf(line, sizeof(line), "%-24s %4d cases  f64 %.3e  f32 %.3e  %s\n", r.name.c_str(), r.cases,
                  r.max_error_64, r.max_error_32, r.passed ? "ok" : "FAIL");
    out << line;
    if (!r.passed && failed.empty()) failed = r.name;
  }
  const auto m = verify::run_model_gradcheck(c.seed);
  std::snprintf(line, sizeof(line), "%-24s %zu tensors, %zu elements  f64 %.3e (%s)  f32 %.3e  %s\n", "tiny model",
                m.parameters, m.elements, m.max_error, m.worst_parameter.c_str(), m.max_error_32,
                m.passed ? "ok" : "FAIL");
  out << line;
  if (!m.passed && failed.empty()) failed = "tiny model";
  if (!failed.empty()) {
    err << "error: gradient check failed for " << failed << "\n";
    return 1;
  }
  return 0;
}

int cmd_infer(const RunConfig& c, std::ostream& out) {
  if (c.image.empty()) throw ConfigError("infer needs --image");
  const auto model = load_model(c.checkpoint);
  const auto image = data::read_rgb(c.image);
  const auto stem = c.image.stem().string();
  auto patches = data::tile_to_patches(image, Mask(image.width, image.height), stem);
  for (auto& p : patches) p.mask = model.predict(p.image);
  const auto mask = data::reassemble_mask(patches, image.height, image.width);
  const auto& overlay_dir = c.overlays;
  fs::create_directories(c.out / "masks");
  fs::create_directories(overlay_dir);
  data::write_pgm(c.out / "masks" / (stem + ".pgm"), mask, 255);
  data::write_ppm(overlay_dir / (stem + ".ppm"), eval::render_overlay(image, mask, c.alpha));
  out << "infer: " << mask.count() << " of " << image.width * image.height << " pixels labelled building\n";
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Building segmentation with dataset fusion", "buildseg"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  Settings overrides;
  std::string config_path;
  auto add_flags = [&](CLI::App* target, unsigned command) {
    target->add_option("--config", config_path, "INI file with run settings");
    for (const auto& f : flags()) {
      if (!(f.commands & command)) continue;
      const std::string key = f.key;
      if (f.is_switch) {
        target->add_flag_callback(f.name, [&overrides, key] { overrides[key] = "true"; }, f.help);
      } else if (f.repeat) {
        target->add_option_function<std::vector<std::string>>(
            f.name,
            [&overrides, key](const std::vector<std::string>& values) {
              std::string joined;
              for (const auto& v : values) joined += (joined.empty() ? "" : ",") + v;
              overrides[key] = joined;
            },
            f.help);
      } else {
        target->add_option_function<std::string>(
            f.name, [&overrides, key](const std::string& v) { overrides[key] = v; }, f.help);
      }
    }
  };
  app.add_option("--config", config_path, "INI file with run settings");
  for (const auto& f : flags())
    if (f.commands == kAll) {
      const std::string key = f.key;
      if (f.is_switch)
        app.add_flag_callback(f.name, [&overrides, key] { overrides[key] = "true"; }, f.help);
      else
        app.add_option_function<std::string>(f.name, [&overrides, key](const std::string& v) { overrides[key] = v; },
                                             f.help);
    }

  const std::vector<std::pair<const char*, std::pair<unsigned, const char*>>> commands = {
      {"synth", {kSynth, "generate synthetic corpora"}},
      {"fuse", {kFuse, "ingest, binarize and tile datasets into a patch store"}},
      {"train", {kTrain, "train a model on a patch store"}},
      {"eval", {kEval, "score a checkpoint and write reports and overlays"}},
      {"ablate", {kAblate, "self versus fusion training on the same test split"}},
      {"gradcheck", {kGradcheck, "finite-difference checks for ops and the tiny model"}},
      {"infer", {kInfer, "predict a mask and overlay for one image"}},
  };
  std::map<const CLI::App*, std::pair<std::string, unsigned>> subs;
  for (const auto& [name, spec] : commands) {
    auto* sub = app.add_subcommand(name, spec.second);
    add_flags(sub, spec.first);
    subs[sub] = {name, spec.first};
  }

  std::vector<const char*> argv{"buildseg"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }

  const auto* chosen = app.get_subcommands().front();
  const auto [command, bit] = subs.at(chosen);
  try {
    Settings settings = config_path.empty() ? Settings{} : read_settings(config_path);
    for (const auto& [k, v] : overrides) settings[k] = v;
    settings["run.command"] = command;
    auto config = resolve(settings);
    // Pin derived defaults so the serialized copy still works from another --out.
    if (config.store.empty()) config.store = config.out / "store";
    if (config.overlays.empty() && (bit == kEval || bit == kInfer)) config.overlays = config.out / "overlays";
    const auto ini = to_ini(config);
    out << "# resolved configuration\n" << ini << "\n";
    fs::create_directories(config.out);
    std::ofstream(config.out / "run_config.ini", std::ios::binary) << ini;

    switch (bit) {
      case kSynth: return cmd_synth(config, out);
      case kFuse: return cmd_fuse(config, out);
      case kTrain: return cmd_train(config, out);
      case kEval: return cmd_eval(config, out);
      case kAblate: return cmd_ablate(config, out);
      case kGradcheck: return cmd_gradcheck(config, out, err);
      default: return cmd_infer(config, out);
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace buildseg::cli
