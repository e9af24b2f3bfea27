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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <cstring>
#include <numeric>

#include <gtest/gtest.h>

#include "buildseg/core/error.h"
#include "buildseg/core/rng.h"
#include "buildseg/model/attention.h"
#include "buildseg/model/checkpoint.h"
#include "buildseg/model/segformer.h"
#include "buildseg/tensor/gradcheck.h"
#include "buildseg/tensor/ops.h"

namespace buildseg::model {
namespace {

using tensor::Tensor;

Tensor<double> random_tensor(Rng& rng, tensor::Shape shape, double std = 1.0) {
  std::vector<double> v(tensor::shape_numel(shape));
  for (auto& x : v) x = std * rng.normal();
  return Tensor<double>(std::move(shape), std::move(v));
}

Tensor<double> eye(std::size_t n) {
  Tensor<double> t({n, n});
  for (std::size_t i = 0; i < n; ++i) t.mutable_data()[i * n + i] = 1.0;
  return t;
}

AttentionParams<double> identity_attention(std::size_t d) {
  const Tensor<double> zero({d});
  return {eye(d), zero, eye(d), zero, eye(d), zero, eye(d), zero, {}, {}};
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

TEST(AttentionTest, SingleKeyReturnsItsValue) {
  const Tensor<double> q({2, 3}, {1, 2, 3, -1, 0, 4});
  const Tensor<double> k({1, 3}, {0.5, 0.5, 0.5});
  const Tensor<double> v({1, 2}, {7, -3});
  const auto out = scaled_dot_attention(q, k, v);
  EXPECT_EQ(out.shape(), (tensor::Shape{2, 2}));
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_NEAR(out[i * 2], 7.0, 1e-12);
    EXPECT_NEAR(out[i * 2 + 1], -3.0, 1e-12);
  }
  // Equal scores average the values.
  const auto avg = scaled_dot_attention(Tensor<double>({1, 2}), Tensor<double>({2, 2}),
                                        Tensor<double>({2, 1}, {2.0, 4.0}));
  EXPECT_NEAR(avg.item(), 3.0, 1e-12);
  EXPECT_THROW(scaled_dot_attention(q, Tensor<double>({1, 2}), v), ShapeError);
}

TEST(AttentionTest, IdentityProjectionMatchesPlainAttention) {
  Rng rng(3);
  for (int i = 0; i < 20; ++i) {
    const auto x = random_tensor(rng, {6, 4});
    const auto mha = multi_head_attention(x, identity_attention(4), 1, 1, 2, 3);
    const auto ref = scaled_dot_attention(x, x, x);
    EXPECT_LE(max_abs_diff(mha.data(), ref.data()), 1e-6);
  }
}

TEST(AttentionTest, TwoHeadsMatchStraightLineReference) {
  Rng rng(11);
  const std::size_t n = 3, d = 4, heads = 2, dh = 2;
  const auto x = random_tensor(rng, {n, d});
  AttentionParams<double> p{random_tensor(rng, {d, d}), random_tensor(rng, {d}), random_tensor(rng, {d, d}),
                            random_tensor(rng, {d}),    random_tensor(rng, {d, d}), random_tensor(rng, {d}),
                            random_tensor(rng, {d, d}), random_tensor(rng, {d}),    {},
                            {}};
  const auto out = multi_head_attention(x, p, heads, 1, 1, n);

  auto project = [&](const Tensor<double>& w, const Tensor<double>& b) {
    std::vector<double> y(n * d);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < d; ++c) {
        double s = b[c];
        for (std::size_t k = 0; k < d; ++k) s += x[r * d + k] * w[k * d + c];
        y[r * d + c] = s;
      }
    return y;
  };
  const auto q = project(p.q_weight, p.q_bias), k = project(p.k_weight, p.k_bias), v = project(p.v_weight, p.v_bias);
  std::vector<double> concat(n * d);
  for (std::size_t h = 0; h < heads; ++h) {
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> s(n);
      for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t c = 0; c < dh; ++c) s[j] += q[i * d + h * dh + c] * k[j * d + h * dh + c];
        s[j] /= std::sqrt(static_cast<double>(dh));
      }
      const double mx = *std::max_element(s.begin(), s.end());
      double z = 0;
      for (auto& e : s) z += (e = std::exp(e - mx));
      for (std::size_t c = 0; c < dh; ++c) {
        double acc = 0;
        for (std::size_t j = 0; j < n; ++j) acc += s[j] / z * v[j * d + h * dh + c];
        concat[i * d + h * dh + c] = acc;
      }
    }
  }
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < d; ++c) {
      double e = p.out_bias[c];
      for (std::size_t k2 = 0; k2 < d; ++k2) e += concat[r * d + k2] * p.out_weight[k2 * d + c];
      EXPECT_NEAR(out[r * d + c], e, 1e-12);
    }
}

TEST(AttentionTest, WeightsRowsSumToOne) {
  Rng rng(5);
  for (int i = 0; i < 20; ++i) {
    Tensor<double> w;
    scaled_dot_attention(random_tensor(rng, {5, 3}, 3.0), random_tensor(rng, {7, 3}, 3.0),
                         random_tensor(rng, {7, 2}), &w);
    for (std::size_t r = 0; r < 5; ++r) {
      double s = 0;
      for (std::size_t c = 0; c < 7; ++c) s += w[r * 7 + c];
      EXPECT_NEAR(s, 1.0, 1e-6);
    }
  }
}

TEST(AttentionTest, KeyValuePermutationInvariance) {
  Rng rng(17);
  const std::size_t m = 6;
  const auto q = random_tensor(rng, {4, 3}), k = random_tensor(rng, {m, 3}), v = random_tensor(rng, {m, 2});
  std::vector<std::size_t> perm(m);
  std::iota(perm.begin(), perm.end(), 0);
  std::reverse(perm.begin(), perm.end());
  std::swap(perm[0], perm[3]);
  Tensor<double> kp({m, 3}), vp({m, 2});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t c = 0; c < 3; ++c) kp.mutable_data()[i * 3 + c] = k[perm[i] * 3 + c];
    for (std::size_t c = 0; c < 2; ++c) vp.mutable_data()[i * 2 + c] = v[perm[i] * 2 + c];
  }
  EXPECT_LE(max_abs_diff(scaled_dot_attention(q, k, v).data(), scaled_dot_attention(q, kp, vp).data()), 1e-6);
}

TEST(SpatialReductionTest, Examples) {
  Rng rng(2);
  const auto x = random_tensor(rng, {16, 2});
  const Tensor<double> w = eye(2), b({2});
  EXPECT_EQ(spatial_reduction(x, 1, 4, 4, w, b).data().data(), x.data().data());
  const auto r = spatial_reduction(x, 2, 4, 4, w, b);
  EXPECT_EQ(r.shape(), (tensor::Shape{4, 2}));
  // Token 0 of the reduced grid averages grid cells (0,0), (0,1), (1,0), (1,1).
  const double expect = (x[0] + x[2] + x[8] + x[10]) / 4.0;
  EXPECT_NEAR(r[0], expect, 1e-12);
  EXPECT_THROW(spatial_reduction(x, 3, 4, 4, w, b), ShapeError);
  EXPECT_THROW(spatial_reduction(x, 2, 2, 4, w, b), ShapeError);
}

ModelConfig narrow_config() {
  ModelConfig c = ModelConfig::small_preset();
  for (auto& s : c.stages) {
    s.embed_dim = 8 * s.num_heads;
    s.depth = 1;
  }
  c.decoder_dim = 8;
  return c;
}

TEST(BlockTest, ZeroProjectionsGiveIdentity) {
  const auto config = ModelConfig::tiny_preset();
  auto params = init_weights<double>(config, 1);
  for (auto& [name, t] : params) {
    if (name.find("attn.proj") != std::string::npos || name.find("ffn.fc2") != std::string::npos) {
      std::fill(t.mutable_data().begin(), t.mutable_data().end(), 0.0);
    }
  }
  Rng rng(4);
  const auto x = random_tensor(rng, {64, 8});
  const auto y = transformer_block(x, config, 0, params, "stage1.block1", 8, 8);
  EXPECT_EQ(max_abs_diff(x.data(), y.data()), 0.0);
}

TEST(BlockTest, FloatGradientMatchesFiniteDifferences) {
  const auto config = ModelConfig::tiny_preset();
  const auto params64 = init_weights<double>(config, 2);
  Rng rng(6);
  const auto x64 = random_tensor(rng, {64, 8});
  const auto weights = random_tensor(rng, {64, 8});
  const auto x32 = x64.cast<float>();
  const auto params32 = params64.cast<float>();
  tensor::Tape<float> tape;
  const auto xw = tape.watch(x32);
  tape.backward(tensor::sum(tensor::mul(transformer_block(xw, config, 0, params32, "stage1.block1", 8, 8),
                                        weights.cast<float>())));
  const auto numeric = tensor::finite_diff_grad(
      [&](const Tensor<double>& in) {
        return tensor::sum(tensor::mul(transformer_block(in, config, 0, params64, "stage1.block1", 8, 8), weights))
            .item();
      },
      x64, 1e-5);
  std::vector<double> analytic(x32.grad().begin(), x32.grad().end());
  EXPECT_LE(tensor::max_relative_error(analytic, numeric.data(), 1e-3), 1e-3);
}

TEST(EncoderTest, StageSizes) {
  const auto small = ModelConfig::small_preset();
  const auto params = init_weights<float>(small, 1);
  const auto features = encoder_forward(Tensor<float>({3, 256, 256}), small, params);
  ASSERT_EQ(features.size(), 4u);
  const std::size_t sizes[] = {64, 32, 16, 8};
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(features[i].height, sizes[i]);
    EXPECT_EQ(features[i].width, sizes[i]);
    EXPECT_EQ(features[i].channels(), static_cast<std::size_t>(small.stages[i].embed_dim));
  }
  const auto narrow = narrow_config();
  const auto f2 = encoder_forward(Tensor<float>({3, 64, 64}), narrow, init_weights<float>(narrow, 1));
  const std::size_t narrow_sizes[] = {16, 8, 4, 2};
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(f2[i].height, narrow_sizes[i]);
  EXPECT_THROW(encoder_forward(Tensor<float>({3, 60, 64}), narrow, init_weights<float>(narrow, 1)), ShapeError);
  EXPECT_THROW(encoder_forward(Tensor<float>({1, 64, 64}), narrow, init_weights<float>(narrow, 1)), ShapeError);
}

TEST(DecodeHeadTest, ZeroClassifierGivesConstantPlanes) {
  const auto config = ModelConfig::tiny_preset();
  auto params = init_weights<float>(config, 3);
  auto& w = params.at("head.cls.weight");
  std::fill(w.mutable_data().begin(), w.mutable_data().end(), 0.0f);
  auto& b = params.at("head.cls.bias");
  b.mutable_data()[0] = 0.25f;
  b.mutable_data()[1] = -1.5f;
  Rng rng(1);
  const auto img = random_tensor(rng, {3, 32, 32}).cast<float>();
  const auto logits = model_forward(img, config, params);
  EXPECT_EQ(logits.shape(), (tensor::Shape{2, 32, 32}));
  for (std::size_t i = 0; i < 32 * 32; ++i) {
    EXPECT_EQ(logits[i], 0.25f);
    EXPECT_EQ(logits[1024 + i], -1.5f);
  }
  EXPECT_EQ(logits_to_mask(logits).count(), 0u);
}

TEST(ModelTest, ArgmaxTiesGoToBackground) {
  const Tensor<float> logits({2, 1, 3}, {1, 2, 0, 1, 1, 3});
  const auto mask = logits_to_mask(logits);
  EXPECT_FALSE(mask.at(0, 0));
  EXPECT_FALSE(mask.at(0, 1));
  EXPECT_TRUE(mask.at(0, 2));
}

RgbImage random_image(Rng& rng, int h, int w) {
  RgbImage img;
  img.width = w;
  img.height = h;
  img.pixels.resize(static_cast<std::size_t>(3 * h * w));
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
  return img;
}

TEST(ModelTest, ForwardIsDeterministic) {
  const auto model = Model::initialized(ModelConfig::tiny_preset(), 9);
  const auto again = Model::initialized(ModelConfig::tiny_preset(), 9);
  Rng rng(2);
  const auto img = random_image(rng, 32, 32);
  const auto a = model.forward(img), b = again.forward(img);
  EXPECT_TRUE(std::equal(a.data().begin(), a.data().end(), b.data().begin()));
}

TEST(ModelTest, FirstLayerGradientIsNonZeroAndCorrect) {
  const auto config = ModelConfig::tiny_preset();
  const auto params = init_weights<double>(config, 5);
  Rng rng(8);
  const auto img = image_to_tensor<double>(random_image(rng, 32, 32));
  const auto weights = random_tensor(rng, {2, 32, 32});
  tensor::Tape<double> tape;
  auto watched = params.watched(tape);
  tape.backward(tensor::sum(tensor::mul(model_forward(img, config, watched), weights)));
  const auto& w = params.at("stage1.patch_embed.weight");
  double norm = 0;
  for (double g : w.grad()) norm += g * g;
  EXPECT_GT(norm, 0.0);

  // Spot-check a handful of elements by central differences.
  for (std::size_t idx : {0ul, 17ul, 100ul, w.numel() - 1}) {
    auto probe = params.clone();
    auto eval = [&](double delta) {
      auto& t = probe.at("stage1.patch_embed.weight");
      const double saved = t[idx];
      t.mutable_data()[idx] = saved + delta;
      const double loss = tensor::sum(tensor::mul(model_forward(img, config, probe), weights)).item();
      t.mutable_data()[idx] = saved;
      return loss;
    };
    const double numeric = (eval(1e-5) - eval(-1e-5)) / 2e-5;
    EXPECT_NEAR(w.grad()[idx], numeric, 1e-5 * std::max(1.0, std::abs(numeric)));
  }
}

class CheckpointTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("buildseg_ckpt_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }

  static std::string read_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
  }
  static void write_bytes(const std::filesystem::path& p, const std::string& s) {
    std::ofstream(p, std::ios::binary) << s;
  }

  std::filesystem::path dir_;
};

TEST_F(CheckpointTest, RoundTripIsByteIdenticalWithEqualForward) {
  const auto model = Model::initialized(ModelConfig::tiny_preset(), 4);
  save_checkpoint(dir_ / "a.sabw", model.config, model.params);
  const auto loaded = load_checkpoint(dir_ / "a.sabw");
  EXPECT_EQ(loaded.format_version, kCheckpointVersion);
  save_checkpoint(dir_ / "b.sabw", loaded.config, loaded.params);
  EXPECT_EQ(read_bytes(dir_ / "a.sabw"), read_bytes(dir_ / "b.sabw"));

  Rng rng(3);
  const auto img = random_image(rng, 32, 32);
  const auto a = model.forward(img);
  const auto b = Model(loaded.config, loaded.params).forward(img);
  EXPECT_EQ(0, std::memcmp(a.data().data(), b.data().data(), a.numel() * sizeof(float)));
}

TEST_F(CheckpointTest, RejectsCorruptFiles) {
  const auto model = Model::initialized(ModelConfig::tiny_preset(), 4);
  save_checkpoint(dir_ / "good.sabw", model.config, model.params);
  const auto bytes = read_bytes(dir_ / "good.sabw");

  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  write_bytes(dir_ / "magic.sabw", bad_magic);
  EXPECT_THROW(load_checkpoint(dir_ / "magic.sabw"), FormatError);

  auto bad_version = bytes;
  bad_version[4] = 9;
  write_bytes(dir_ / "version.sabw", bad_version);
  EXPECT_THROW(load_checkpoint(dir_ / "version.sabw"), FormatError);

  write_bytes(dir_ / "short.sabw", bytes.substr(0, bytes.size() - 7));
  EXPECT_THROW(load_checkpoint(dir_ / "short.sabw"), FormatError);
  EXPECT_THROW(load_checkpoint(dir_ / "missing.sabw"), Error);
}

TEST_F(CheckpointTest, ShapeMismatchNamesParameter) {
  const auto model = Model::initialized(ModelConfig::tiny_preset(), 4);
  save_checkpoint(dir_ / "tiny.sabw", model.config, model.params);
  try {
    load_checkpoint_for(dir_ / "tiny.sabw", ModelConfig::small_preset());
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("stage1.patch_embed.weight"), std::string::npos) << e.what();
  }
}

TEST(InitTest, SeededTruncatedNormal) {
  const auto config = ModelConfig::small_preset();
  const auto a = init_weights<float>(config, 42), b = init_weights<float>(config, 42);
  const auto c = init_weights<float>(config, 43);
  const auto& wa = a.at("stage2.block1.ffn.fc1.weight");
  const auto& wb = b.at("stage2.block1.ffn.fc1.weight");
  ASSERT_GE(wa.numel(), 10000u);
  EXPECT_TRUE(std::equal(wa.data().begin(), wa.data().end(), wb.data().begin()));
  EXPECT_FALSE(std::equal(wa.data().begin(), wa.data().end(), c.at("stage2.block1.ffn.fc1.weight").data().begin()));
  double sq = 0, mean = 0;
  for (float v : wa.data()) {
    EXPECT_LE(std::abs(v), 0.04f + 1e-7f);
    mean += v;
    sq += double(v) * v;
  }
  mean /= static_cast<double>(wa.numel());
  const double std = std::sqrt(sq / static_cast<double>(wa.numel()) - mean * mean);
  // Truncation at two sigma shrinks the spread to about 0.88 of 0.02.
  EXPECT_NEAR(std, 0.02 * 0.88, 0.02 * 0.15);
  for (float v : a.at("stage1.norm.weight").data()) EXPECT_EQ(v, 1.0f);
  for (float v : a.at("stage1.norm.bias").data()) EXPECT_EQ(v, 0.0f);
  for (float v : a.at("head.cls.bias").data()) EXPECT_EQ(v, 0.0f);
}

}  // namespace
}  // namespace buildseg::model
