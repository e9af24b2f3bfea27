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

#include "buildseg/verify/gradcheck_suite.h"

#include <algorithm>
#include <functional>

#include "buildseg/core/rng.h"
#include "buildseg/metrics/loss.h"
#include "buildseg/model/attention.h"
#include "buildseg/model/params.h"
#include "buildseg/model/segformer.h"
#include "buildseg/tensor/gradcheck.h"
#include "buildseg/tensor/ops.h"

namespace buildseg::verify {

namespace {

using tensor::Shape;
using tensor::Tensor;

constexpr double kStep = 1e-5;
// Gradients smaller than this are compared in absolute terms; below it the
// central-difference rounding noise (~1e-11) would dominate a pure ratio.
constexpr double kScaleFloor = 1e-3;

struct Case {
  std::vector<Tensor<double>> inputs;
  std::vector<int> knobs;
  Mask target;
};

template <typename T>
using Apply = std::function<Tensor<T>(const std::vector<Tensor<T>>&, const Case&)>;

struct OpSpec {
  std::string name;
  std::function<Case(Rng&)> make;
  Apply<double> apply64;
  Apply<float> apply32;
};

template <typename Fn>
OpSpec op(std::string name, std::function<Case(Rng&)> make, Fn fn) {
  return OpSpec{std::move(name), std::move(make), Apply<double>(fn), Apply<float>(fn)};
}

int dim(Rng& rng, int lo = 1, int hi = 8) { return static_cast<int>(rng.uniform_int(lo, hi)); }

Tensor<double> random_tensor(Rng& rng, Shape shape, double spread = 1.0) {
  std::vector<double> v(tensor::shape_numel(shape));
  for (auto& x : v) x = spread * rng.normal();
  return Tensor<double>(std::move(shape), std::move(v));
}

Shape random_shape(Rng& rng) {
  Shape s(static_cast<std::size_t>(dim(rng, 1, 3)));
  for (auto& d : s) d = static_cast<std::size_t>(dim(rng, 1, 4));
  return s;
}

std::size_t z(int v) { return static_cast<std::size_t>(v); }

template <typename T>
std::vector<Tensor<T>> convert(const std::vector<Tensor<double>>& in) {
  std::vector<Tensor<T>> out;
  for (const auto& t : in) out.push_back(t.template cast<T>());
  return out;
}

// Gradient of sum(apply(inputs) * weights) with respect to every input,
// computed by the tape in precision T and reported in double.
template <typename T>
std::vector<std::vector<double>> analytic(const Apply<T>& apply, const Case& c, const Tensor<double>& weights) {
  tensor::Tape<T> tape;
  auto leaves = convert<T>(c.inputs);
  std::vector<Tensor<T>> watched;
  for (const auto& leaf : leaves) watched.push_back(tape.watch(leaf));
  auto loss = tensor::sum(tensor::mul(apply(watched, c), weights.template cast<T>()));
  tape.backward(loss);
  std::vector<std::vector<double>> grads;
  for (const auto& leaf : leaves) {
    std::vector<double> g(leaf.numel(), 0.0);
    if (leaf.has_grad()) std::copy(leaf.grad().begin(), leaf.grad().end(), g.begin());
    grads.push_back(std::move(g));
  }
  return grads;
}

GradCheckResult check_op(const OpSpec& spec, std::uint64_t seed, int cases) {
  GradCheckResult result{spec.name, cases, 0.0, 0.0, false};
  for (int i = 0; i < cases; ++i) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    const Case c = spec.make(rng);
    const auto probe = spec.apply64(c.inputs, c);
    const auto weights = random_tensor(rng, probe.shape());

    // Error is measured over the gradient with respect to all arguments at once.
    std::vector<double> a64, a32, numeric;
    for (const auto& g : analytic(spec.apply64, c, weights)) a64.insert(a64.end(), g.begin(), g.end());
    for (const auto& g : analytic(spec.apply32, c, weights)) a32.insert(a32.end(), g.begin(), g.end());
    for (std::size_t k = 0; k < c.inputs.size(); ++k) {
      auto f = [&](const Tensor<double>& x) {
        auto inputs = c.inputs;
        inputs[k] = x;
        const auto out = spec.apply64(inputs, c);
        double total = 0.0;
        for (std::size_t j = 0; j < out.numel(); ++j) total += out[j] * weights[j];
        return total;
      };
      const auto g = tensor::richardson_diff_grad(f, c.inputs[k], kStep);
      numeric.insert(numeric.end(), g.data().begin(), g.data().end());
    }
    result.max_error_64 = std::max(result.max_error_64, tensor::max_relative_error(a64, numeric, kScaleFloor));
    result.max_error_32 = std::max(result.max_error_32, tensor::max_relative_error(a32, numeric, kScaleFloor));
  }
  result.passed = result.max_error_64 <= kTolerance64 && result.max_error_32 <= kTolerance32;
  return result;
}

std::vector<OpSpec> op_specs() {
  std::vector<OpSpec> specs;
  specs.push_back(op(
      "matmul",
      [](Rng& r) {
        const int m = dim(r), k = dim(r), n = dim(r);
        return Case{{random_tensor(r, {z(m), z(k)}), random_tensor(r, {z(k), z(n)})}, {}, {}};
      },
      [](const auto& in, const Case&) { return tensor::matmul(in[0], in[1]); }));
  specs.push_back(op(
      "transpose", [](Rng& r) { return Case{{random_tensor(r, {z(dim(r)), z(dim(r))})}, {}, {}}; },
      [](const auto& in, const Case&) { return tensor::transpose(in[0]); }));
  specs.push_back(op(
      "reshape", [](Rng& r) { return Case{{random_tensor(r, {z(dim(r)), z(dim(r))})}, {}, {}}; },
      [](const auto& in, const Case&) { return tensor::reshape(in[0], {in[0].dim(1), in[0].dim(0)}); }));
  specs.push_back(op(
      "add",
      [](Rng& r) {
        const auto s = random_shape(r);
        return Case{{random_tensor(r, s), random_tensor(r, s)}, {}, {}};
      },
      [](const auto& in, const Case&) { return tensor::add(in[0], in[1]); }));
  specs.push_back(op(
      "add_scalar", [](Rng& r) { return Case{{random_tensor(r, random_shape(r))}, {dim(r, -9, 9)}, {}}; },
      [](const auto& in, const Case& c) {
        using T = typename std::decay_t<decltype(in[0])>::value_type;
        return tensor::add(in[0], static_cast<T>(c.knobs[0] / 7.0));
      }));
  specs.push_back(op(
      "mul",
      [](Rng& r) {
        const auto s = random_shape(r);
        return Case{{random_tensor(r, s), random_tensor(r, s)}, {}, {}};
      },
      [](const auto& in, const Case&) { return tensor::mul(in[0], in[1]); }));
  specs.push_back(op(
      "scale", [](Rng& r) { return Case{{random_tensor(r, random_shape(r))}, {dim(r, -9, 9)}, {}}; },
      [](const auto& in, const Case& c) {
        using T = typename std::decay_t<decltype(in[0])>::value_type;
        return tensor::scale(in[0], static_cast<T>(c.knobs[0] / 7.0));
      }));
  specs.push_back(op(
      "add_bias",
      [](Rng& r) {
        const int n = dim(r), d = dim(r);
        return Case{{random_tensor(r, {z(n), z(d)}), random_tensor(r, {z(d)})}, {}, {}};
      },
      [](const auto& in, const Case&) { return tensor::add_bias(in[0], in[1]); }));
  specs.push_back(op(
      "sum", [](Rng& r) { return Case{{random_tensor(r, random_shape(r))}, {}, {}}; },
      [](const auto& in, const Case&) { return tensor::sum(in[0]); }));
  specs.push_back(op(
      "mean", [](Rng& r) { return Case{{random_tensor(r, random_shape(r))}, {}, {}}; },
      [](const auto& in, const Case&) { return tensor::mean(in[0]); }));
  specs.push_back(op(
      "softmax_rows", [](Rng& r) { return Case{{random_tensor(r, {z(dim(r)), z(dim(r))}, 3.0)}, {}, {}}; },
      [](const auto& in, const Case&) { return tensor::softmax_rows(in[0]); }));
  specs.push_back(op(
      "layer_norm",
      [](Rng& r) {
        const int n = dim(r), d = dim(r, 2, 8);
        auto gamma = random_tensor(r, {z(d)}, 0.5);
        for (auto& v : gamma.mutable_data()) v += 1.0;
        return Case{{random_tensor(r, {z(n), z(d)}, 2.0), gamma, random_tensor(r, {z(d)})}, {}, {}};
      },
      [](const auto& in, const Case&) { return tensor::layer_norm(in[0], in[1], in[2]); }));
  specs.push_back(op(
      "gelu", [](Rng& r) { return Case{{random_tensor(r, random_shape(r), 2.0)}, {}, {}}; },
      [](const auto& in, const Case&) { return tensor::gelu(in[0]); }));

  auto conv_case = [](Rng& r, bool with_kernels) {
    const int c = dim(r, 1, 3), k = dim(r, 1, 3), stride = dim(r, 1, 3), pad = dim(r, 0, 2);
    const int h = dim(r, std::max(1, k - 2 * pad), 8), w = dim(r, std::max(1, k - 2 * pad), 8);
    Case out{{random_tensor(r, {z(c), z(h), z(w)})}, {k, stride, pad}, {}};
    if (with_kernels) out.inputs.push_back(random_tensor(r, {z(dim(r, 1, 4)), z(c), z(k), z(k)}));
    return out;
  };
  specs.push_back(op(
      "im2col", [conv_case](Rng& r) { return conv_case(r, false); },
      [](const auto& in, const Case& c) { return tensor::im2col(in[0], z(c.knobs[0]), z(c.knobs[1]), z(c.knobs[2])); }));
  specs.push_back(op(
      "conv2d", [conv_case](Rng& r) { return conv_case(r, true); },
      [](const auto& in, const Case& c) { return tensor::conv2d(in[0], in[1], z(c.knobs[1]), z(c.knobs[2])); }));
  specs.push_back(op(
      "bilinear_resize",
      [](Rng& r) {
        return Case{{random_tensor(r, {z(dim(r, 1, 2)), z(dim(r, 1, 6)), z(dim(r, 1, 6))})},
                    {dim(r), dim(r), dim(r, 0, 1)},
                    {}};
      },
      [](const auto& in, const Case& c) {
        return tensor::bilinear_resize(in[0], z(c.knobs[0]), z(c.knobs[1]), c.knobs[2] == 1);
      }));
  specs.push_back(op(
      "avg_pool2d",
      [](Rng& r) {
        const int ratio = dim(r, 1, 3);
        return Case{{random_tensor(r, {z(dim(r, 1, 2)), z(ratio * dim(r, 1, 2)), z(ratio * dim(r, 1, 2))})},
                    {ratio},
                    {}};
      },
      [](const auto& in, const Case& c) { return tensor::avg_pool2d(in[0], z(c.knobs[0])); }));
  specs.push_back(op(
      "concat",
      [](Rng& r) {
        Shape base = {z(dim(r, 1, 4)), z(dim(r, 1, 4)), z(dim(r, 1, 4))};
        const int axis = dim(r, 0, 2);
        Case c{{}, {axis}, {}};
        const int parts = dim(r, 2, 3);
        for (int i = 0; i < parts; ++i) {
          Shape s = base;
          s[z(axis)] = z(dim(r, 1, 3));
          c.inputs.push_back(random_tensor(r, s));
        }
        return c;
      },
      [](const auto& in, const Case& c) { return tensor::concat(in, z(c.knobs[0])); }));
  specs.push_back(op(
      "slice",
      [](Rng& r) {
        Shape s = {z(dim(r, 1, 4)), z(dim(r, 1, 6)), z(dim(r, 1, 4))};
        const int axis = dim(r, 0, 2);
        const int extent = static_cast<int>(s[z(axis)]);
        const int start = dim(r, 0, extent - 1);
        return Case{{random_tensor(r, s)}, {axis, start, dim(r, 1, extent - start)}, {}};
      },
      [](const auto& in, const Case& c) {
        return tensor::slice(in[0], z(c.knobs[0]), z(c.knobs[1]), z(c.knobs[2]));
      }));
  specs.push_back(op(
      "cross_entropy",
      [](Rng& r) {
        const int h = dim(r, 1, 6), w = dim(r, 1, 6);
        std::vector<std::uint8_t> labels(z(h * w));
        for (auto& v : labels) v = r.uniform() < 0.5 ? 1 : 0;
        const int vh = dim(r, 1, h), vw = dim(r, 1, w);
        return Case{{random_tensor(r, {2, z(h), z(w)}, 2.0)}, {vh, vw}, Mask(w, h, std::move(labels))};
      },
      [](const auto& in, const Case& c) {
        return metrics::cross_entropy(in[0], c.target, Rect{0, 0, c.knobs[0], c.knobs[1]});
      }));
  specs.push_back(op(
      "scaled_dot_attention",
      [](Rng& r) {
        const int n = dim(r), m = dim(r), dk = dim(r), dv = dim(r);
        return Case{
            {random_tensor(r, {z(n), z(dk)}), random_tensor(r, {z(m), z(dk)}), random_tensor(r, {z(m), z(dv)})},
            {},
            {}};
      },
      [](const auto& in, const Case&) { return model::scaled_dot_attention(in[0], in[1], in[2]); }));
  specs.push_back(op(
      "spatial_reduction",
      [](Rng& r) {
        const int ratio = dim(r, 1, 2), h = ratio * dim(r, 1, 3), w = ratio * dim(r, 1, 3), d = dim(r, 1, 6);
        return Case{{random_tensor(r, {z(h * w), z(d)}), random_tensor(r, {z(d), z(d)}), random_tensor(r, {z(d)})},
                    {ratio, h, w},
                    {}};
      },
      [](const auto& in, const Case& c) {
        return model::spatial_reduction(in[0], z(c.knobs[0]), z(c.knobs[1]), z(c.knobs[2]), in[1], in[2]);
      }));
  specs.push_back(op(
      "multi_head_attention",
      [](Rng& r) {
        const int heads = dim(r, 1, 2), d = heads * dim(r, 1, 4), ratio = dim(r, 1, 2);
        const int h = ratio * dim(r, 1, 2), w = ratio * dim(r, 1, 2);
        Case c{{random_tensor(r, {z(h * w), z(d)})}, {heads, ratio, h, w}, {}};
        for (int i = 0; i < 5; ++i) {
          c.inputs.push_back(random_tensor(r, {z(d), z(d)}, 0.7));
          c.inputs.push_back(random_tensor(r, {z(d)}, 0.3));
        }
        return c;
      },
      [](const auto& in, const Case& c) {
        using T = typename std::decay_t<decltype(in[0])>::value_type;
        model::AttentionParams<T> p{in[1], in[2], in[3], in[4], in[5], in[6], in[7], in[8], in[9], in[10]};
        return model::multi_head_attention(in[0], p, z(c.knobs[0]), z(c.knobs[1]), z(c.knobs[2]), z(c.knobs[3]));
      }));
  return specs;
}

}  // namespace

std::vector<GradCheckResult> run_op_gradchecks(std::uint64_t seed, int cases) {
  std::vector<GradCheckResult> results;
  std::uint64_t stream = 0;
  for (const auto& spec : op_specs()) results.push_back(check_op(spec, derive_seed(seed, stream++), cases));
  return results;
}

ModelGradCheckResult run_model_gradcheck(std::uint64_t seed) {
  constexpr std::size_t kSide = 32;
  const auto config = model::ModelConfig::tiny_preset();
  Rng rng(seed);

  // Non-degenerate weights so every parameter carries signal.
  auto params = model::init_weights<double>(config, seed);
  for (const auto& spec : model::parameter_specs(config)) {
    for (auto& v : params.at(spec.name).mutable_data()) {
      switch (spec.kind) {
        case model::ParamKind::kWeight: v = 0.3 * rng.normal(); break;
        case model::ParamKind::kNormGamma: v = 1.0 + 0.1 * rng.normal(); break;
        default: v = 0.1 * rng.normal(); break;
      }
    }
  }
  const auto img = random_tensor(rng, {3, kSide, kSide});
  std::vector<std::uint8_t> labels(kSide * kSide);
  for (std::size_t r = 0; r < kSide; ++r)
    for (std::size_t c = 0; c < kSide; ++c) labels[r * kSide + c] = (r > 8 && r < 22 && c > 5 && c < 27) ? 1 : 0;
  const Mask target(kSide, kSide, std::move(labels));

  auto loss_of = [&](const model::ParameterSet<double>& p) {
    return metrics::cross_entropy(model::model_forward(img, config, p), target);
  };
  {
    tensor::Tape<double> tape;
    tape.backward(loss_of(params.watched(tape)));
  }
  auto params32 = params.cast<float>();
  {
    tensor::Tape<float> tape;
    tape.backward(metrics::cross_entropy(
        model::model_forward(img.cast<float>(), config, params32.watched(tape)), target));
  }

  ModelGradCheckResult result;
  for (auto& [name, t] : params) {
    const std::vector<double> grad(t.grad().begin(), t.grad().end());
    std::vector<double> numeric(t.numel());
    auto values = t.mutable_data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double original = values[i];
      values[i] = original + kStep;
      const double plus = loss_of(params).item();
      values[i] = original - kStep;
      const double minus = loss_of(params).item();
      values[i] = original;
      numeric[i] = (plus - minus) / (2.0 * kStep);
    }
    const auto& g32 = params32.at(name).grad();
    result.max_error_32 = std::max(result.max_error_32, tensor::max_relative_error(
                                                            std::vector<double>(g32.begin(), g32.end()), numeric, kScaleFloor));
    const double err = tensor::max_relative_error(grad, numeric, kScaleFloor);
    if (err >= result.max_error) {
      result.max_error = err;
      result.worst_parameter = name;
    }
    ++result.parameters;
    result.elements += t.numel();
  }
  result.passed = result.max_error <= kModelTolerance && result.max_error_32 <= kTolerance32;
  return result;
}

}  // namespace buildseg::verify
