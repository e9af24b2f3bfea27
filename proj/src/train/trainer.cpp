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

#include "buildseg/train/trainer.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include "buildseg/core/error.h"
#include "buildseg/core/rng.h"
#include "buildseg/data/tiling.h"
#include "buildseg/metrics/loss.h"
#include "buildseg/model/checkpoint.h"
#include "buildseg/tensor/ops.h"

namespace buildseg::train {
namespace {

namespace fs = std::filesystem;

template <typename V>
void shuffle(std::vector<V>& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
    std::swap(items[i - 1], items[j]);
  }
}

// Endless epoch-wise shuffled stream of indices.
class IndexStream {
 public:
  IndexStream(std::vector<std::size_t> items, Rng& rng) : items_(std::move(items)), rng_(&rng) {}
  std::size_t next() {
    if (pos_ == 0) shuffle(items_, *rng_);
    const auto out = items_[pos_];
    pos_ = (pos_ + 1) % items_.size();
    return out;
  }

 private:
  std::vector<std::size_t> items_;
  Rng* rng_;
  std::size_t pos_ = 0;
};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Example flipped(const Example& e) {
  Example out{data::flip_horizontal(e.image), data::flip_horizontal(e.mask), e.valid, e.dataset, e.name, e.id};
  // The valid region is anchored top-left; mirrored it sits at the right edge.
  out.valid.col = e.image.width - (e.valid.col + e.valid.width);
  return out;
}

}  // namespace

std::vector<Example> load_examples(const fs::path& store_root, const data::Manifest& manifest, data::Split split,
                                   const std::set<std::string>& datasets) {
  std::vector<Example> out;
  for (const auto* entry : manifest.select(split, datasets)) {
    auto patch = data::load_patch(store_root, *entry);
    out.push_back(
        Example{std::move(patch.image), std::move(patch.mask), entry->provenance.valid, entry->record.dataset,
                entry->image_file, entry->record.id});
  }
  return out;
}

StepResult train_step(model::Model& model, std::span<const Example* const> batch, OptimState<float>& state,
                      const OptimConfig& cfg) {
  if (batch.empty()) throw ConfigError("empty training batch");
  const int t = static_cast<int>(state.t);
  StepResult result;
  result.lr = lr_at(t, cfg);

  // Per-example backward keeps only one graph alive; gradients are summed here.
  std::vector<std::vector<float>> accum;
  for (const auto& [name, p] : model.params) accum.emplace_back(p.numel(), 0.0f);
  const float inv_batch = 1.0f / static_cast<float>(batch.size());
  for (const Example* ex : batch) {
    tensor::Tape<float> tape;
    auto watched = model.params.watched(tape);
    const auto logits = model::model_forward(model::image_to_tensor<float>(ex->image), model.config, watched);
    const auto loss = metrics::cross_entropy(logits, ex->mask, ex->valid);
    const double value = loss.item();
    if (!std::isfinite(value)) throw NumericError("non-finite loss on " + ex->name);
    result.loss += value / static_cast<double>(batch.size());
    tape.backward(tensor::scale(loss, inv_batch));
    std::size_t i = 0;
    for (const auto& [name, p] : model.params) {
      if (p.has_grad()) {
        const auto g = p.grad();
        for (std::size_t k = 0; k < g.size(); ++k) accum[i][k] += g[k];
      }
      ++i;
    }
  }
  std::size_t i = 0;
  for (auto& [name, p] : model.params) {
    p.zero_grad();
    std::copy(accum[i].begin(), accum[i].end(), p.mutable_grad().begin());
    ++i;
  }
  adamw_step(model.params, state, result.lr, cfg);
  return result;
}

TrainResult train_loop(model::Model& model, const std::vector<Example>& corpus, const TrainOptions& options,
                       const ProgressFn& progress) {
  const auto& cfg = options.optim;
  cfg.validate();
  if (corpus.empty()) throw ConfigError("training corpus is empty");

  std::map<std::string, std::vector<std::size_t>> by_dataset;
  for (std::size_t i = 0; i < corpus.size(); ++i) by_dataset[corpus[i].dataset].push_back(i);
  if (options.mode == Mode::kSelf && by_dataset.size() != 1) {
    throw ConfigError("self mode trains on one dataset, corpus has " + std::to_string(by_dataset.size()));
  }

  Rng rng(derive_seed(cfg.seed, 0x7472));
  std::vector<std::size_t> all(corpus.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  IndexStream stream(all, rng);
  std::vector<std::string> tags;
  std::vector<IndexStream> per_dataset;
  for (const auto& [tag, idx] : by_dataset) {
    tags.push_back(tag);
    per_dataset.emplace_back(idx, rng);
  }

  TrainResult result;
  std::ofstream log;
  if (!options.out_dir.empty()) {
    fs::create_directories(options.out_dir / "logs");
    fs::create_directories(options.out_dir / "checkpoints");
    result.loss_log = options.out_dir / "logs" / (options.run_name + "_loss.csv");
    log.open(result.loss_log, std::ios::binary | std::ios::trunc);
    if (!log) throw IoError("cannot write " + result.loss_log.string());
    log << "iter,lr,loss";
    for (const auto& tag : tags) log << ",n_" << tag;
    log << '\n';
  }
  auto save = [&](const std::string& label) {
    if (options.out_dir.empty()) return;
    const auto path = options.out_dir / "checkpoints" / (options.run_name + "_" + label + ".sabw");
    model::save_checkpoint(path, model.config, model.params);
    result.checkpoints.push_back(path);
  };

  OptimState<float> state;
  std::vector<Example> augmented(static_cast<std::size_t>(cfg.batch_size));
  std::vector<const Example*> batch(static_cast<std::size_t>(cfg.batch_size));
  for (int it = 0; it < cfg.max_iters; ++it) {
    std::map<std::string, int> mix;
    for (std::size_t b = 0; b < batch.size(); ++b) {
      std::size_t idx;
      if (options.balanced && per_dataset.size() > 1) {
        idx = per_dataset[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(per_dataset.size()) - 1))]
                  .next();
      } else {
        idx = stream.next();
      }
      const Example& ex = corpus[idx];
      ++mix[ex.dataset];
      if (options.hflip && rng.uniform() < 0.5) {
        augmented[b] = flipped(ex);
        batch[b] = &augmented[b];
      } else {
        batch[b] = &ex;
      }
    }
    const auto step = train_step(model, batch, state, cfg);
    result.losses.push_back(step.loss);
    if (log.is_open()) {
      log << it << ',' << fmt(step.lr) << ',' << fmt(step.loss);
      for (const auto& tag : tags) log << ',' << mix[tag];
      log << '\n';
    }
    if (progress) progress(it, step);
    if (options.checkpoint_every > 0 && (it + 1) % options.checkpoint_every == 0 && it + 1 < cfg.max_iters) {
      char label[32];
      std::snprintf(label, sizeof(label), "iter%06d", it + 1);
      save(label);
    }
  }
  save("final");
  if (log.is_open()) {
    log.flush();
    if (!log) throw IoError("cannot write " + result.loss_log.string());
  }
  return result;
}

}  // namespace buildseg::train
