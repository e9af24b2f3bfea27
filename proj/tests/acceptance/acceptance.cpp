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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits non-zero
// if any fails. Optional arguments select criteria by number.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "buildseg/cli/cli.h"
#include "buildseg/core/error.h"
#include "buildseg/core/rng.h"
#include "buildseg/data/fusion.h"
#include "buildseg/data/image_io.h"
#include "buildseg/data/patch_store.h"
#include "buildseg/data/synthetic.h"
#include "buildseg/data/tiling.h"
#include "buildseg/eval/evaluate.h"
#include "buildseg/eval/report.h"
#include "buildseg/metrics/metrics.h"
#include "buildseg/model/attention.h"
#include "buildseg/model/checkpoint.h"
#include "buildseg/model/segformer.h"
#include "buildseg/train/optim.h"
#include "buildseg/verify/gradcheck_suite.h"

namespace {

using namespace buildseg;
namespace fs = std::filesystem;
using tensor::Tensor;
using Clock = std::chrono::steady_clock;

constexpr std::uint64_t kSeed = 2026;

struct Outcome {
  bool pass = true;
  std::string detail;

  // Records a failed check; the first one is kept as the detail.
  void require(bool ok, const std::string& what) {
    if (ok) return;
    if (pass) detail = what;
    pass = false;
  }
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), format, v);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = slurp(e.path());
  return out;
}

// Runs the command-line tool in-process, discarding its console output.
int cli(std::vector<std::string> args, std::string* captured = nullptr) {
  std::ostringstream out, err;
  const int code = cli::run_cli(args, out, err);
  if (captured) *captured = out.str();
  if (code != 0) std::fprintf(stderr, "buildseg %s failed: %s", args[0].c_str(), err.str().c_str());
  return code;
}

Tensor<double> random_matrix(Rng& rng, std::size_t rows, std::size_t cols) {
  std::vector<double> v(rows * cols);
  for (auto& x : v) x = rng.normal();
  return Tensor<double>({rows, cols}, std::move(v));
}

Tensor<double> identity(std::size_t d) {
  Tensor<double> t({d, d});
  for (std::size_t i = 0; i < d; ++i) t.mutable_data()[i * d + i] = 1.0;
  return t;
}

RgbImage crop_image(const RgbImage& image, int height, int width) {
  RgbImage out(width, height);
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c) std::copy_n(image.at(r, c), 3, out.at(r, c));
  return out;
}

double max_abs_diff(const Tensor<double>& a, const Tensor<double>& b) {
  if (a.shape() != b.shape()) return INFINITY;
  double m = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// 1. Finite-difference gradient suite.
Outcome gradient_suite() {
  Outcome o;
  const auto t0 = Clock::now();
  double worst64 = 0.0, worst32 = 0.0;
  std::size_t ops = 0;
  for (const auto& r : verify::run_op_gradchecks(kSeed, 100)) {
    ++ops;
    worst64 = std::max(worst64, r.max_error_64);
    worst32 = std::max(worst32, r.max_error_32);
    o.require(r.cases == 100, r.name + " ran " + std::to_string(r.cases) + " cases");
    o.require(r.max_error_64 <= 1e-6, r.name + " 64-bit error " + fmt("%.3e", r.max_error_64));
    o.require(r.max_error_32 <= 1e-3, r.name + " 32-bit error " + fmt("%.3e", r.max_error_32));
  }
  const auto model = verify::run_model_gradcheck(kSeed);
  o.require(model.max_error <= 1e-6, "tiny model error " + fmt("%.3e", model.max_error) + " at " + model.worst_parameter);
  o.require(model.max_error_32 <= 1e-3, "tiny model 32-bit error " + fmt("%.3e", model.max_error_32));
  const double elapsed = seconds_since(t0);
  o.require(elapsed < 120.0, "took " + fmt("%.1f", elapsed) + " s");
  if (o.pass)
    o.detail = std::to_string(ops) + " ops x 100 cases, max error f64 " + fmt("%.2e", worst64) + " f32 " +
               fmt("%.2e", worst32) + ", tiny model f64 " + fmt("%.2e", model.max_error) + " f32 " + fmt("%.2e", model.max_error_32) + " over " +
               std::to_string(model.elements) + " weights, " + fmt("%.1f", elapsed) + " s";
  return o;
}

// 2. Attention identities over 200 seeded cases.
Outcome attention() {
  Outcome o;
  double worst_identity = 0.0, worst_rowsum = 0.0, worst_perm = 0.0;
  for (int i = 0; i < 200; ++i) {
    Rng rng(derive_seed(kSeed, 0xA770 + static_cast<std::uint64_t>(i)));
    const auto n = static_cast<std::size_t>(rng.uniform_int(1, 12));
    const auto m = static_cast<std::size_t>(rng.uniform_int(1, 12));
    const auto d = static_cast<std::size_t>(rng.uniform_int(1, 8));
    const auto dv = static_cast<std::size_t>(rng.uniform_int(1, 8));

    // Single head, identity projections, no reduction: plain attention of x with itself.
    const auto x = random_matrix(rng, n, d);
    model::AttentionParams<double> params;
    params.q_weight = params.k_weight = params.v_weight = params.out_weight = identity(d);
    const auto mha = model::multi_head_attention(x, params, 1, 1, n, 1);
    worst_identity = std::max(worst_identity, max_abs_diff(mha, model::scaled_dot_attention(x, x, x)));

    const auto q = random_matrix(rng, n, d), k = random_matrix(rng, m, d), v = random_matrix(rng, m, dv);
    Tensor<double> weights;
    const auto out = model::scaled_dot_attention(q, k, v, &weights);
    for (std::size_t r = 0; r < n; ++r) {
      double row = 0.0;
      for (std::size_t c = 0; c < m; ++c) row += weights[r * m + c];
      worst_rowsum = std::max(worst_rowsum, std::abs(row - 1.0));
    }

    std::vector<std::size_t> perm(m);
    for (std::size_t j = 0; j < m; ++j) perm[j] = j;
    for (std::size_t j = m; j > 1; --j) std::swap(perm[j - 1], perm[static_cast<std::size_t>(rng.uniform_int(0, j - 1))]);
    Tensor<double> kp({m, d}), vp({m, dv});
    for (std::size_t j = 0; j < m; ++j) {
      std::copy_n(k.data().begin() + perm[j] * d, d, kp.mutable_data().begin() + j * d);
      std::copy_n(v.data().begin() + perm[j] * dv, dv, vp.mutable_data().begin() + j * dv);
    }
    worst_perm = std::max(worst_perm, max_abs_diff(out, model::scaled_dot_attention(q, kp, vp)));
  }
  o.require(worst_identity <= 1e-6, "identity projection differs by " + fmt("%.3e", worst_identity));
  o.require(worst_rowsum <= 1e-6, "attention row sum off by " + fmt("%.3e", worst_rowsum));
  o.require(worst_perm <= 1e-6, "key/value permutation changes output by " + fmt("%.3e", worst_perm));
  if (o.pass)
    o.detail = "200 cases, identity " + fmt("%.1e", worst_identity) + ", row sums " + fmt("%.1e", worst_rowsum) +
               ", permutation " + fmt("%.1e", worst_perm);
  return o;
}

// Foreground pixels within L1 distance d of a background pixel or of the
// outside of the grid, by exhaustive search.
Mask oracle_band(const Mask& mask, int d) {
  const int h = mask.height(), w = mask.width();
  Mask band(w, h);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      if (!mask.at(r, c)) continue;
      bool near = std::min({r + 1, c + 1, h - r, w - c}) <= d;
      for (int rr = 0; rr < h && !near; ++rr)
        for (int cc = 0; cc < w && !near; ++cc)
          near = !mask.at(rr, cc) && std::abs(rr - r) + std::abs(cc - c) <= d;
      band.set(r, c, near);
    }
  return band;
}

Mask random_mask(Rng& rng, int size) {
  Mask m(size, size);
  if (rng.uniform() < 0.5) {
    const double p = rng.uniform();
    for (int r = 0; r < size; ++r)
      for (int c = 0; c < size; ++c) m.set(r, c, rng.uniform() < p);
  } else {
    const int rects = static_cast<int>(rng.uniform_int(0, 4));
    for (int k = 0; k < rects; ++k) {
      const int r0 = static_cast<int>(rng.uniform_int(0, size - 1)), c0 = static_cast<int>(rng.uniform_int(0, size - 1));
      const int r1 = static_cast<int>(rng.uniform_int(r0, size - 1)), c1 = static_cast<int>(rng.uniform_int(c0, size - 1));
      for (int r = r0; r <= r1; ++r)
        for (int c = c0; c <= c1; ++c) m.set(r, c, true);
    }
  }
  return m;
}

std::pair<std::uint64_t, std::uint64_t> overlap(const Mask& a, const Mask& b) {
  std::uint64_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    inter += a.values()[i] && b.values()[i];
    uni += a.values()[i] || b.values()[i];
  }
  return {inter, uni};
}

// 3. Metric counts against the brute-force oracle.
Outcome metric_oracle() {
  Outcome o;
  const auto t0 = Clock::now();
  for (int i = 0; i < 500; ++i) {
    Rng rng(derive_seed(kSeed, 0x3E7 + static_cast<std::uint64_t>(i)));
    const auto a = random_mask(rng, 16), b = random_mask(rng, 16);
    const auto [inter, uni] = overlap(a, b);
    for (int d = 1; d <= 3; ++d) {
      const auto counts = metrics::pair_counts(a, b, d);
      const auto [band_inter, band_uni] = overlap(oracle_band(a, d), oracle_band(b, d));
      o.require(counts.intersection == inter && counts.union_ == uni,
                "pair " + std::to_string(i) + ": mask counts differ from the oracle");
      o.require(counts.band_intersection == band_inter && counts.band_union == band_uni,
                "pair " + std::to_string(i) + ", d = " + std::to_string(d) + ": band counts differ from the oracle");
      const auto expect_biou =
          band_uni ? std::optional<double>(static_cast<double>(band_inter) / static_cast<double>(band_uni)) : std::nullopt;
      o.require(metrics::biou(a, b, d) == expect_biou, "pair " + std::to_string(i) + ": biou differs from the oracle");
    }
    const auto expect_iou =
        uni ? std::optional<double>(static_cast<double>(inter) / static_cast<double>(uni)) : std::nullopt;
    o.require(metrics::iou(a, b) == expect_iou, "pair " + std::to_string(i) + ": iou differs from the oracle");
  }
  for (int i = 0; i < 200; ++i) {
    Rng rng(derive_seed(kSeed, 0x5A7 + static_cast<std::uint64_t>(i)));
    const auto a = random_mask(rng, 32), b = random_mask(rng, 32);
    o.require(metrics::biou(a, b, 32 + 32) == metrics::iou(a, b),
              "saturated biou differs from iou on pair " + std::to_string(i));
  }
  const double elapsed = seconds_since(t0);
  o.require(elapsed < 60.0, "took " + fmt("%.1f", elapsed) + " s");
  if (o.pass) o.detail = "500 pairs x d in {1,2,3} exact, 200 saturation pairs exact, " + fmt("%.2f", elapsed) + " s";
  return o;
}

// 4. Learning-rate schedule against the closed form.
Outcome lr_schedule() {
  Outcome o;
  const auto cfg = train::OptimConfig::published(20000);
  const double base = cfg.base_lr, ratio = cfg.warmup_ratio, warm = cfg.warmup_iters, max = cfg.max_iters;
  auto warm_form = [&](double t) { return base * (1.0 - (1.0 - t / warm) * (1.0 - ratio)); };
  auto decay_form = [&](double t) { return (base - cfg.min_lr) * std::pow(1.0 - (t - warm) / (max - warm), cfg.power) + cfg.min_lr; };
  auto near = [&](double got, double want, const std::string& what) {
    o.require(std::abs(got - want) <= 1e-15, what + ": " + fmt("%.17g", got) + " vs " + fmt("%.17g", want));
  };
  o.require(cfg.base_lr == 0.0006 && cfg.warmup_iters == 1500 && cfg.power == 1.0 && cfg.warmup_ratio == 1e-6,
            "unexpected published constants");
  near(train::lr_at(0, cfg), 6e-10, "lr_at(0)");
  near(train::lr_at(1500, cfg), 0.0006, "lr_at(1500)");
  near(train::lr_at(20000, cfg), 0.0, "lr_at(max)");
  near(warm_form(1500), decay_form(1500), "branches at the warmup boundary");
  near(train::lr_at(1499, cfg), warm_form(1499), "last warmup step");
  near(train::lr_at(1501, cfg), decay_form(1501), "first decay step");
  near(train::lr_at((1500 + 20000) / 2, cfg), 0.0003, "decay midpoint");
  for (int t = 0; t <= cfg.max_iters; ++t)
    near(train::lr_at(t, cfg), t < cfg.warmup_iters ? warm_form(t) : decay_form(t), "lr_at(" + std::to_string(t) + ")");
  if (o.pass) o.detail = "endpoints, boundary, midpoint and all 20001 steps within 1e-15";
  return o;
}

model::ParameterSet<double> parameters(const std::vector<double>& w, const std::vector<double>& g) {
  model::ParameterSet<double> p;
  Tensor<double> t({w.size()}, w);
  t.zero_grad();
  std::copy(g.begin(), g.end(), t.mutable_grad().begin());
  p.add("w", t);
  return p;
}

// 5. AdamW.
Outcome adamw() {
  Outcome o;
  const train::OptimConfig cfg;
  const std::vector<double> w{1.0, -2.0, 0.5, 3.0}, g{0.1, -0.3, 0.0, 2.5};
  const double lr = 0.01;
  auto p = parameters(w, g);
  train::OptimState<double> state;
  train::adamw_step(p, state, lr, cfg);
  double worst = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double m = (1.0 - cfg.beta1) * g[i], v = (1.0 - cfg.beta2) * g[i] * g[i];
    const double m_hat = m / (1.0 - cfg.beta1), v_hat = v / (1.0 - cfg.beta2);
    const double expect = w[i] - lr * m_hat / (std::sqrt(v_hat) + cfg.eps) - lr * cfg.weight_decay * w[i];
    worst = std::max(worst, std::abs(p.at("w")[i] - expect));
  }
  o.require(worst <= 1e-12, "single step differs from the oracle by " + fmt("%.3e", worst));

  auto quad_cfg = cfg;
  quad_cfg.weight_decay = 0.0;
  auto q = parameters({1.0}, {0.0});
  train::OptimState<double> qs;
  int reached = -1;
  for (int step = 0; step < 500 && reached < 0; ++step) {
    q.at("w").mutable_grad()[0] = q.at("w")[0];  // gradient of w^2 / 2
    train::adamw_step(q, qs, lr, quad_cfg);
    if (std::abs(q.at("w")[0]) < 1e-3) reached = step + 1;
  }
  o.require(reached > 0, "|w| still " + fmt("%.3e", q.at("w")[0]) + " after 500 steps");

  auto z = parameters(w, {0.0, 0.0, 0.0, 0.0});
  train::OptimState<double> zs;
  std::vector<double> expect = w;
  for (int step = 0; step < 5; ++step) {
    train::adamw_step(z, zs, lr, cfg);
    for (std::size_t i = 0; i < w.size(); ++i) {
      expect[i] = expect[i] - lr * cfg.weight_decay * expect[i];
      o.require(z.at("w")[i] == expect[i], "zero-gradient step is not pure decay");
      o.require(zs.m[0][i] == 0.0 && zs.v[0][i] == 0.0, "zero gradient moved the moments");
    }
  }
  if (o.pass)
    o.detail = "single step " + fmt("%.1e", worst) + ", quadratic |w| < 1e-3 after " + std::to_string(reached) +
               " steps, decay-only exact";
  return o;
}

// 6. Tiling, reassembly, patch store and checkpoint round trips.
Outcome fusion_pipeline(const fs::path& work) {
  Outcome o;
  for (int stride : {256, 200, 128})
    for (int n = 1; n <= 2000; ++n) {
      data::TilingOptions opts;
      opts.stride = stride;
      const int expect = n <= 256 ? 1 : (n - 256 + stride - 1) / stride + 1;
      o.require(data::tiles_along(n, opts) == expect,
                "tiles_along(" + std::to_string(n) + ") at stride " + std::to_string(stride));
      if (stride == 256) o.require(expect == (n + 255) / 256, "ceil formula at " + std::to_string(n));
    }

  int reassembled = 0;
  for (int i = 0; i < 4; ++i) {
    const auto scene = data::render_scene(kSeed, i % 2 ? data::Domain::kB : data::Domain::kA, i);
    for (const auto& [h, w] : std::vector<std::pair<int, int>>{{512, 512}, {300, 511}, {257, 100}, {77, 480}}) {
      const auto mask = scene.mask.crop(0, 0, h, w);
      const auto image = crop_image(scene.image, h, w);
      for (int stride : {256, 200}) {
        data::TilingOptions opts;
        opts.stride = stride;
        const auto patches = data::tile_to_patches(image, mask, "scene", opts);
        o.require(static_cast<int>(patches.size()) == data::tiles_along(h, opts) * data::tiles_along(w, opts),
                  "patch count for " + std::to_string(h) + "x" + std::to_string(w));
        o.require(data::reassemble_mask(patches, h, w, opts) == mask,
                  "reassembly differs for " + std::to_string(h) + "x" + std::to_string(w));
        ++reassembled;
      }
    }
  }

  const auto corpus = work / "fusion_corpus";
  data::generate_synthetic(corpus / "a", kSeed, 6, data::Domain::kA);
  data::generate_synthetic(corpus / "b", kSeed, 6, data::Domain::kB);
  const auto adapters = data::default_adapter_dir();
  const std::vector<data::DatasetSource> sources{{corpus / "a", data::load_adapter(adapters, "synthetic-a")},
                                                 {corpus / "b", data::load_adapter(adapters, "synthetic-b")}};
  const auto first = data::fuse_datasets(sources, work / "store1", {256, kSeed, 1});
  const auto manifest = data::read_manifest(work / "store1");
  o.require(manifest.entries.size() == first.manifest.entries.size(), "manifest entry count changed on read");
  std::vector<std::pair<data::SampleRecord, data::PatchPair>> loaded;
  for (const auto& e : manifest.entries) loaded.emplace_back(e.record, data::load_patch(work / "store1", e));
  data::write_patch_store(work / "store2", loaded);
  const auto store1 = snapshot(work / "store1");
  o.require(store1 == snapshot(work / "store2"), "rewritten patch store is not byte-identical");
  // Each stored patch matches a fresh tiling of its source record.
  std::size_t checked = 0;
  for (const auto& src : sources) {
    for (const auto& rec : data::ingest(src.root, src.adapter, kSeed).records) {
      const auto [image, mask] = data::load_record(rec, src.adapter);
      for (const auto& patch : data::tile_to_patches(image, mask, rec.id)) {
        const auto it = std::find_if(loaded.begin(), loaded.end(), [&](const auto& l) {
          return l.first.dataset == rec.dataset && l.second.provenance == patch.provenance;
        });
        o.require(it != loaded.end() && it->second.image == patch.image && it->second.mask == patch.mask,
                  "stored patch differs for " + rec.id);
        ++checked;
      }
    }
  }
  o.require(checked == loaded.size(), "store has patches with no source");

  std::size_t checkpoints = 0;
  for (const auto& [config, side] : {std::pair{model::ModelConfig::tiny_preset(), 256},
                                     std::pair{model::ModelConfig::small_preset(), 64}}) {
    const auto model = model::Model::initialized(config, kSeed + checkpoints);
    const auto a = work / ("model" + std::to_string(checkpoints) + "_a.sabw");
    const auto b = work / ("model" + std::to_string(checkpoints) + "_b.sabw");
    model::save_checkpoint(a, model.config, model.params);
    const auto back = model::load_checkpoint(a);
    model::save_checkpoint(b, back.config, back.params);
    o.require(slurp(a) == slurp(b), "checkpoint round trip is not byte-identical");
    const model::Model reloaded(back.config, back.params);
    const auto image = crop_image(data::render_scene(kSeed, data::Domain::kA, 0).image, side, side);
    const auto before = model.forward(image), after = reloaded.forward(image);
    o.require(before.shape() == after.shape() &&
                  std::memcmp(before.data().data(), after.data().data(), before.numel() * sizeof(float)) == 0,
              "forward outputs differ after reload");
    ++checkpoints;
  }
  if (o.pass)
    o.detail = "tile counts over 3 strides x 2000 sizes, " + std::to_string(reassembled) + " reassemblies, " +
               std::to_string(store1.size()) + " store files, " + std::to_string(checkpoints) + " checkpoints";
  return o;
}

// Shared corpus for criteria 7 to 9: synthetic A and B fused into one store.
struct Corpus {
  fs::path root;
  fs::path store;
  bool ready = false;
  double seconds = 0.0;
};

Corpus& corpus(const fs::path& work) {
  static Corpus c;
  if (c.ready) return c;
  const auto t0 = Clock::now();
  c.root = work / "corpus";
  c.store = c.root / "store";
  const auto seed = std::to_string(kSeed);
  if (cli({"synth", "--seed", seed, "--scenes", "30", "--out", (c.root / "scenes").string()}) != 0 ||
      cli({"fuse", "--seed", seed, "--out", c.root.string(), "--source",
           "synthetic-a=" + (c.root / "scenes" / "synthetic-a").string(), "--source",
           "synthetic-b=" + (c.root / "scenes" / "synthetic-b").string()}) != 0)
    throw Error("could not build the synthetic corpus");
  c.seconds = seconds_since(t0);
  c.ready = true;
  return c;
}

// 7. Desk-scale end-to-end run.
Outcome end_to_end(const fs::path& work) {
  Outcome o;
  const auto t0 = Clock::now();
  const auto& c = corpus(work);
  auto train = [&](const std::string& name) {
    return cli({"train", "--seed", std::to_string(kSeed), "--out", (work / name).string(), "--store", c.store.string(),
                "--dataset", "synthetic-a", "--iters", "300", "--batch", "8", "--model", "tiny"});
  };
  if (train("e2e_run1") != 0) throw Error("training failed");
  const auto ckpt = work / "e2e_run1" / "checkpoints" / "train_final.sabw";
  if (cli({"eval", "--out", (work / "e2e_run1").string(), "--checkpoint", ckpt.string(), "--manifest",
           c.store.string(), "--dataset", "synthetic-a", "--split", "test"}) != 0)
    throw Error("evaluation failed");
  const double elapsed = seconds_since(t0) + c.seconds;
  const auto report = eval::report_from_jsonl(slurp(work / "e2e_run1" / "reports" / "eval.jsonl"));
  const auto& row = report.row("synthetic-a");
  const double iou = row.iou.value_or(0.0), biou = row.biou.value_or(0.0);
  o.require(row.samples > 0, "no held-out patches");
  o.require(iou >= 0.85, "IoU " + fmt("%.4f", iou) + " < 0.85");
  o.require(biou >= 0.5, "BIoU " + fmt("%.4f", biou) + " < 0.5");
  o.require(elapsed < 600.0, "pipeline took " + fmt("%.0f", elapsed) + " s");

  if (train("e2e_run2") != 0) throw Error("second training run failed");
  const auto log1 = slurp(work / "e2e_run1" / "logs" / "train_loss.csv");
  o.require(log1 == slurp(work / "e2e_run2" / "logs" / "train_loss.csv"), "loss log differs on re-run");
  o.require(slurp(ckpt) == slurp(work / "e2e_run2" / "checkpoints" / "train_final.sabw"),
            "final checkpoint differs on re-run");
  const auto lines = std::count(log1.begin(), log1.end(), '\n');
  o.require(lines == 301, "loss log has " + std::to_string(lines) + " lines");
  if (o.pass)
    o.detail = "IoU " + fmt("%.4f", iou) + " BIoU " + fmt("%.4f", biou) + " on " + std::to_string(row.samples) +
               " test patches, " + fmt("%.0f", elapsed) + " s, loss log identical on re-run";
  return o;
}

bool table_row_ok(const std::string& line) {
  static const std::regex row(R"(^\S.*\S  +(\d\.\d{4}|n/a)  +(\d\.\d{4}|n/a)$)");
  return std::regex_match(line, row);
}

bool header_ok(const std::string& line) {
  static const std::regex header(R"(^Model/Dataset +IOU +BIOU$)");
  return std::regex_match(line, header);
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) out.push_back(line);
  return out;
}

// 8. Ablation harness.
Outcome ablation(const fs::path& work) {
  Outcome o;
  const auto& c = corpus(work);
  const auto out = work / "ablate";
  if (cli({"ablate", "--seed", std::to_string(kSeed), "--out", out.string(), "--store", c.store.string(), "--iters",
           "150", "--batch", "8"}) != 0)
    throw Error("ablate failed");
  const auto table = lines_of(slurp(out / "reports" / "ablation.txt"));
  o.require(table.size() == 4, "ablation table has " + std::to_string(table.size()) + " lines");
  if (table.size() == 4) {
    o.require(header_ok(table[0]), "bad header: " + table[0]);
    o.require(table[1].rfind("self ", 0) == 0 && table_row_ok(table[1]), "bad self row: " + table[1]);
    o.require(table[2].rfind("fusion ", 0) == 0 && table_row_ok(table[2]), "bad fusion row: " + table[2]);
    o.require(std::regex_match(table[3], std::regex(R"(^delta \(fusion-self\) +[+-]\d\.\d{4} +[+-]\d\.\d{4}$)")),
              "bad delta row: " + table[3]);
  }
  std::optional<double> delta_iou;
  std::map<std::string, eval::ReportRow> rows;
  for (const auto& line : lines_of(slurp(out / "reports" / "ablation.jsonl"))) {
    if (line.find("\"type\":\"delta\"") != std::string::npos) {
      const auto at = line.find("\"iou\":");
      if (at != std::string::npos) delta_iou = std::stod(line.substr(at + 6));
    }
  }
  std::string rows_only;
  for (const auto& line : lines_of(slurp(out / "reports" / "ablation.jsonl")))
    if (line.find("\"type\":\"delta\"") == std::string::npos) rows_only += line + "\n";
  const auto report = eval::report_from_jsonl(rows_only);
  const auto& self = report.row("self");
  const auto& fusion = report.row("fusion");
  const auto manifest = data::read_manifest(c.store);
  const auto test_a = manifest.select(data::Split::kTest, {"synthetic-a"}).size();
  o.require(self.samples + self.skipped == test_a && fusion.samples + fusion.skipped == test_a,
            "rows were not scored on the synthetic-a test split");
  o.require(self.counts.union_ > 0 && fusion.counts.union_ > 0, "empty test set");
  o.require(delta_iou.has_value(), "no delta record");
  if (delta_iou && self.iou && fusion.iou)
    o.require(std::abs(*delta_iou - (*fusion.iou - *self.iou)) < 1e-12, "delta is not fusion - self");
  if (o.pass)
    o.detail = "self " + eval::format_score(self.iou) + " fusion " + eval::format_score(fusion.iou) + " delta " +
               fmt("%+.4f", delta_iou.value_or(0.0)) + " IoU on " + std::to_string(test_a) + " shared test patches";
  return o;
}

// 9. Report and overlay fidelity.
Outcome report_overlay(const fs::path& work) {
  Outcome o;
  const auto& c = corpus(work);
  const auto out = work / "report";
  std::string printed;
  if (cli({"eval", "--out", out.string(), "--stub", "gt-echo", "--manifest", c.store.string(), "--split", "test"},
          &printed) != 0)
    throw Error("gt-echo eval failed");
  const auto report = eval::report_from_jsonl(slurp(out / "reports" / "eval.jsonl"));
  o.require(report.rows.size() == 2, "expected one row per synthetic domain");
  for (const auto& row : report.rows)
    o.require(row.iou == 1.0 && row.biou == 1.0, "gt-echo row " + row.label + " is not 1.0");
  const auto table = lines_of(slurp(out / "reports" / "eval.txt"));
  o.require(!table.empty() && header_ok(table[0]), "bad table header");
  o.require(table.size() == report.rows.size() + 1, "table is not header plus one line per row");
  for (std::size_t i = 1; i < table.size(); ++i) {
    o.require(table_row_ok(table[i]), "bad table row: " + table[i]);
    o.require(table[i].size() > 14 && table[i].substr(table[i].size() - 14) == "1.0000  1.0000",
              "gt-echo row does not print 1.0000: " + table[i]);
  }
  o.require(printed.find(slurp(out / "reports" / "eval.txt")) != std::string::npos, "table was not printed");

  // An all-background prediction overlays nothing, so each overlay is the patch itself.
  const auto blank = work / "report_blank";
  if (cli({"eval", "--out", blank.string(), "--stub", "all-background", "--manifest", c.store.string(), "--split",
           "test", "--alpha", "0.5"}) != 0)
    throw Error("all-background eval failed");
  const auto manifest = data::read_manifest(c.store);
  std::size_t overlays = 0;
  for (const auto* e : manifest.select(data::Split::kTest)) {
    const auto patch = data::load_patch(c.store, *e);
    const auto file = blank / "overlays" / e->record.dataset / (fs::path(e->image_file).stem().string() + ".ppm");
    o.require(data::read_rgb(file) == patch.image, "overlay differs from its patch: " + file.string());
    for (double alpha : {0.0, 0.25, 1.0})
      o.require(eval::render_overlay(patch.image, Mask(patch.image.width, patch.image.height), alpha) == patch.image,
                "empty-mask overlay is not the identity");
    ++overlays;
  }
  o.require(overlays > 0, "no test patches");
  if (o.pass)
    o.detail = std::to_string(report.rows.size()) + " rows at 1.0000/1.0000, " + std::to_string(overlays) +
               " identity overlays, 4-decimal Model/IOU/BIOU table";
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path work = fs::temp_directory_path() / "buildseg_acceptance";
  fs::remove_all(work);
  fs::create_directories(work);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gradient suite", gradient_suite},
      {"attention correctness", attention},
      {"metric oracle equivalence", metric_oracle},
      {"lr schedule", lr_schedule},
      {"adamw", adamw},
      {"fusion pipeline", [&] { return fusion_pipeline(work); }},
      {"end-to-end desk run", [&] { return end_to_end(work); }},
      {"ablation harness", [&] { return ablation(work); }},
      {"report/overlay fidelity", [&] { return report_overlay(work); }},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int number = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.contains(number)) continue;
    const auto t0 = Clock::now();
    Outcome outcome;
    try {
      outcome = criteria[i].second();
    } catch (const std::exception& e) {
      outcome = Outcome{false, std::string("error: ") + e.what()};
    }
    if (!outcome.pass) ++failures;
    std::printf("%s [%d] %s: %s (%.1f s)\n", outcome.pass ? "PASS" : "FAIL", number, criteria[i].first.c_str(),
                outcome.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  fs::remove_all(work);
  return failures == 0 ? 0 : 1;
}
