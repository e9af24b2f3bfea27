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

#include "buildseg/tensor/ops.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "buildseg/core/error.h"

namespace buildseg::tensor {

namespace {

template <typename T>
using Grads = std::span<const std::span<T>>;

template <typename T>
void require_finite(const Tensor<T>& t, const char* kind) {
  for (const T v : t.data()) {
    if (!std::isfinite(v)) throw NumericError(std::string("non-finite value produced by ") + kind);
  }
}

// Checks the forward result, then links it to the inputs' tape.
template <typename T>
Tensor<T> finish(const char* kind, const std::vector<Tensor<T>>& inputs, Tensor<T> out,
                 typename Tape<T>::BackwardFn backward) {
  require_finite(out, kind);
  Tape<T>* tape = common_tape(inputs);
  if (!tape) return out;
  return tape->record(kind, inputs, std::move(out), std::move(backward));
}

void require_rank(const Shape& s, std::size_t rank, const char* kind) {
  if (s.size() != rank) {
    throw ShapeError(std::string(kind) + " expects rank " + std::to_string(rank) + ", got " + shape_str(s));
  }
}

void require_same(const Shape& a, const Shape& b, const char* kind) {
  if (a != b) throw ShapeError(std::string(kind) + ": shape mismatch " + shape_str(a) + " vs " + shape_str(b));
}

// C[m x n] += A[m x k] * B[k x n]
template <typename T>
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c) {
  for (std::size_t i = 0; i < m; ++i) {
    T* crow = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = a[i * k + p];
      if (av == T{0}) continue;
      const T* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// C[m x k] += A[m x n] * B[k x n]^T, via an explicit B^T so the inner loop
// runs over contiguous outputs instead of a serial dot product.
template <typename T>
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c) {
  std::vector<T> bt(n * k);
  for (std::size_t p = 0; p < k; ++p)
    for (std::size_t j = 0; j < n; ++j) bt[j * k + p] = b[p * n + j];
  gemm_nn(m, k, n, a, bt.data(), c);
}

// C[k x n] += A[m x k]^T * B[m x n]
template <typename T>
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c) {
  for (std::size_t i = 0; i < m; ++i) {
    const T* brow = b + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = a[i * k + p];
      if (av == T{0}) continue;
      T* crow = c + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// Splits a shape around `axis` into (outer, extent, inner) element counts.
struct AxisSplit {
  std::size_t outer = 1;
  std::size_t extent = 1;
  std::size_t inner = 1;
};

AxisSplit split_axis(const Shape& s, std::size_t axis) {
  AxisSplit out;
  for (std::size_t i = 0; i < axis; ++i) out.outer *= s[i];
  out.extent = s[axis];
  for (std::size_t i = axis + 1; i < s.size(); ++i) out.inner *= s[i];
  return out;
}

struct LerpTap {
  std::size_t lo;
  std::size_t hi;
  double frac;
};

std::vector<LerpTap> resize_taps(std::size_t in, std::size_t out, bool align_corners) {
  std::vector<LerpTap> taps(out);
  for (std::size_t i = 0; i < out; ++i) {
    double src;
    if (align_corners) {
      src = out > 1 ? static_cast<double>(i) * static_cast<double>(in - 1) / static_cast<double>(out - 1) : 0.0;
    } else {
      src = (static_cast<double>(i) + 0.5) * static_cast<double>(in) / static_cast<double>(out) - 0.5;
    }
    src = std::clamp(src, 0.0, static_cast<double>(in - 1));
    const auto lo = static_cast<std::size_t>(std::floor(src));
    const std::size_t hi = std::min(lo + 1, in - 1);
    taps[i] = LerpTap{lo, hi, src - static_cast<double>(lo)};
  }
  return taps;
}

}  // namespace

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  require_rank(a.shape(), 2, "matmul");
  require_rank(b.shape(), 2, "matmul");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    throw ShapeError("matmul: inner dimensions disagree, " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  }
  Tensor<T> out({m, n});
  gemm_nn(m, n, k, a.data().data(), b.data().data(), out.mutable_data().data());
  return finish<T>("matmul", {a, b}, std::move(out), [a, b, m, n, k](std::span<const T> g, Grads<T> in) {
    if (!in[0].empty()) gemm_nt(m, n, k, g.data(), b.data().data(), in[0].data());
    if (!in[1].empty()) gemm_tn(m, n, k, a.data().data(), g.data(), in[1].data());
  });
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& a) {
  require_rank(a.shape(), 2, "transpose");
  const std::size_t m = a.dim(0), n = a.dim(1);
  Tensor<T> out({n, m});
  auto o = out.mutable_data();
  const auto x = a.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) o[j * m + i] = x[i * n + j];
  return finish<T>("transpose", {a}, std::move(out), [m, n](std::span<const T> g, Grads<T> in) {
    if (in[0].empty()) return;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) in[0][i * n + j] += g[j * m + i];
  });
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& a, Shape shape) {
  if (shape_numel(shape) != a.numel()) {
    throw ShapeError("reshape: " + shape_str(a.shape()) + " cannot become " + shape_str(shape));
  }
  Tensor<T> out(std::move(shape), std::vector<T>(a.data().begin(), a.data().end()));
  return finish<T>("reshape", {a}, std::move(out), [](std::span<const T> g, Grads<T> in) {
    if (in[0].empty()) return;
    for (std::size_t i = 0; i < g.size(); ++i) in[0][i] += g[i];
  });
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  require_same(a.shape(), b.shape(), "add");
  Tensor<T> out(a.shape());
  auto o = out.mutable_data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = a[i] + b[i];
  return finish<T>("add", {a, b}, std::move(out), [](std::span<const T> g, Grads<T> in) {
    for (const auto& dst : in) {
      if (dst.empty()) continue;
      for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
    }
  });
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, T b) {
  Tensor<T> out(a.shape());
  auto o = out.mutable_data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = a[i] + b;
  return finish<T>("add_scalar", {a}, std::move(out), [](std::span<const T> g, Grads<T> in) {
    if (in[0].empty()) return;
    for (std::size_t i = 0; i < g.size(); ++i) in[0][i] += g[i];
  });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  require_same(a.shape(), b.shape(), "mul");
  Tensor<T> out(a.shape());
  auto o = out.mutable_data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = a[i] * b[i];
  return finish<T>("mul", {a, b}, std::move(out), [a, b](std::span<const T> g, Grads<T> in) {
    if (!in[0].empty())
      for (std::size_t i = 0; i < g.size(); ++i) in[0][i] += g[i] * b[i];
    if (!in[1].empty())
      for (std::size_t i = 0; i < g.size(); ++i) in[1][i] += g[i] * a[i];
  });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor) {
  Tensor<T> out(a.shape());
  auto o = out.mutable_data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = a[i] * factor;
  return finish<T>("scale", {a}, std::move(out), [factor](std::span<const T> g, Grads<T> in) {
    if (in[0].empty()) return;
    for (std::size_t i = 0; i < g.size(); ++i) in[0][i] += g[i] * factor;
  });
}

template <typename T>
Tensor<T> add_bias(const Tensor<T>& x, const Tensor<T>& bias) {
  if (x.rank() == 0 || bias.rank() != 1 || bias.dim(0) != x.shape().back()) {
    throw ShapeError("add_bias: bias " + shape_str(bias.shape()) + " does not match " + shape_str(x.shape()));
  }
  const std::size_t d = bias.dim(0);
  const std::size_t rows = x.numel() / d;
  Tensor<T> out(x.shape());
  auto o = out.mutable_data();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < d; ++j) o[r * d + j] = x[r * d + j] + bias[j];
  return finish<T>("add_bias", {x, bias}, std::move(out), [rows, d](std::span<const T> g, Grads<T> in) {
    if (!in[0].empty())
      for (std::size_t i = 0; i < g.size(); ++i) in[0][i] += g[i];
    if (!in[1].empty())
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < d; ++j) in[1][j] += g[r * d + j];
  });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
  T acc{0};
  for (const T v : x.data()) acc += v;
  return finish<T>("sum", {x}, Tensor<T>::scalar(acc), [](std::span<const T> g, Grads<T> in) {
    if (in[0].empty()) return;
    for (auto& v : in[0]) v += g[0];
  });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& x) {
  if (x.numel() == 0) throw ShapeError("mean of an empty tensor");
  T acc{0};
  for (const T v : x.data()) acc += v;
  const T inv = T{1} / static_cast<T>(x.numel());
  return finish<T>("mean", {x}, Tensor<T>::scalar(acc * inv), [inv](std::span<const T> g, Grads<T> in) {
    if (in[0].empty()) return;
    for (auto& v : in[0]) v += g[0] * inv;
  });
}

template <typename T>
Tensor<T> softmax_rows(const Tensor<T>& x) {
  if (x.rank() == 0 || x.shape().back() == 0) throw ShapeError("softmax_rows needs a non-empty last axis");
  const std::size_t n = x.shape().back();
  const std::size_t rows = x.numel() / n;
  Tensor<T> out(x.shape());
  auto y = out.mutable_data();
  const auto xs = x.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const T* in = xs.data() + r * n;
    T* o = y.data() + r * n;
    const T peak = *std::max_element(in, in + n);
    T total{0};
    for (std::size_t j = 0; j < n; ++j) {
      o[j] = std::exp(in[j] - peak);
      total += o[j];
    }
    const T inv = T{1} / total;
    for (std::size_t j = 0; j < n; ++j) o[j] *= inv;
  }
  Tensor<T> saved = out;
  return finish<T>("softmax_rows", {x}, std::move(out), [saved, rows, n](std::span<const T> g, Grads<T> in) {
    if (in[0].empty()) return;
    const auto y = saved.data();
    for (std::size_t r = 0; r < rows; ++r) {
      const T* yr = y.data() + r * n;
      const T* gr = g.data() + r * n;
      T dot{0};
      for (std::size_t j = 0; j < n; ++j) dot += gr[j] * yr[j];
      T* dst = in[0].data() + r * n;
      for (std::size_t j = 0; j < n; ++j) dst[j] += yr[j] * (gr[j] - dot);
    }
  });
}

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, T eps) {
  if (x.rank() == 0 || x.shape().back() == 0) throw ShapeError("layer_norm needs a non-empty last axis");
  const std::size_t d = x.shape().back();
  if (gamma.shape() != Shape{d} || beta.shape() != Shape{d}) {
    throw ShapeError("layer_norm: gamma/beta must be [" + std::to_string(d) + "], got " + shape_str(gamma.shape()) +
                     " and " + shape_str(beta.shape()));
  }
  const std::size_t rows = x.numel() / d;
  Tensor<T> out(x.shape());
  std::vector<T> normalized(x.numel());
  std::vector<T> inv_std(rows);
  auto y = out.mutable_data();
  const auto xs = x.data();
  for (std::size_t r = 0; r < rows; ++r) {
    // Row statistics in double: with |mean| >> std the rounding of a float
    // mean is amplified by |mean| / std in every normalized value.
    const T* in = xs.data() + r * d;
    double mu = 0.0;
    for (std::size_t j = 0; j < d; ++j) mu += in[j];
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) var += (in[j] - mu) * (in[j] - mu);
    var /= static_cast<double>(d);
    const double inv = 1.0 / std::sqrt(var + static_cast<double>(eps));
    inv_std[r] = static_cast<T>(inv);
    for (std::size_t j = 0; j < d; ++j) {
      const T xhat = static_cast<T>((in[j] - mu) * inv);
      normalized[r * d + j] = xhat;
      y[r * d + j] = gamma[j] * xhat + beta[j];
    }
  }
  return finish<T>(
      "layer_norm", {x, gamma, beta}, std::move(out),
      [gamma, normalized = std::move(normalized), inv_std = std::move(inv_std), rows, d](std::span<const T> g,
                                                                                         Grads<T> in) {
        std::vector<double> dxhat(d);
        for (std::size_t r = 0; r < rows; ++r) {
          const T* gr = g.data() + r * d;
          const T* xh = normalized.data() + r * d;
          if (!in[1].empty())
            for (std::size_t j = 0; j < d; ++j) in[1][j] += gr[j] * xh[j];
          if (!in[2].empty())
            for (std::size_t j = 0; j < d; ++j) in[2][j] += gr[j];
          if (in[0].empty()) continue;
          double mean_dxhat = 0.0;
          double mean_dxhat_xhat = 0.0;
          for (std::size_t j = 0; j < d; ++j) {
            dxhat[j] = static_cast<double>(gr[j]) * gamma[j];
            mean_dxhat += dxhat[j];
            mean_dxhat_xhat += dxhat[j] * xh[j];
          }
          mean_dxhat /= static_cast<double>(d);
          mean_dxhat_xhat /= static_cast<double>(d);
          T* dst = in[0].data() + r * d;
          for (std::size_t j = 0; j < d; ++j)
            dst[j] += static_cast<T>(inv_std[r] * (dxhat[j] - mean_dxhat - xh[j] * mean_dxhat_xhat));
        }
      });
}

template <typename T>
Tensor<T> gelu(const Tensor<T>& x) {
  Tensor<T> out(x.shape());
  auto y = out.mutable_data();
  const T inv_sqrt2 = static_cast<T>(1.0 / std::numbers::sqrt2);
  for (std::size_t i = 0; i < y.size(); ++i) {
    const T v = x[i];
    y[i] = v * T{0.5} * (T{1} + std::erf(v * inv_sqrt2));
  }
  return finish<T>("gelu", {x}, std::move(out), [x, inv_sqrt2](std::span<const T> g, Grads<T> in) {
    if (in[0].empty()) return;
    const T inv_sqrt_2pi = static_cast<T>(std::numbers::inv_sqrtpi / std::numbers::sqrt2);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const T v = x[i];
      const T cdf = T{0.5} * (T{1} + std::erf(v * inv_sqrt2));
      const T pdf = inv_sqrt_2pi * std::exp(T{-0.5} * v * v);
      in[0][i] += g[i] * (cdf + v * pdf);
    }
  });
}

std::size_t conv_output_size(std::size_t input, std::size_t kernel, std::size_t stride, std::size_t pad) {
  if (kernel < 1 || stride < 1) throw ShapeError("convolution kernel and stride must be >= 1");
  const auto padded = static_cast<long long>(input + 2 * pad);
  const auto k = static_cast<long long>(kernel);
  if (padded < k) {
    throw ShapeError("convolution output would be empty: input " + std::to_string(input) + ", kernel " +
                     std::to_string(kernel) + ", pad " + std::to_string(pad));
  }
  return static_cast<std::size_t>((padded - k) / static_cast<long long>(stride)) + 1;
}

template <typename T>
Tensor<T> im2col(const Tensor<T>& x, std::size_t kernel, std::size_t stride, std::size_t pad) {
  require_rank(x.shape(), 3, "im2col");
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  const std::size_t oh = conv_output_size(h, kernel, stride, pad);
  const std::size_t ow = conv_output_size(w, kernel, stride, pad);
  const std::size_t cols = oh * ow;
  Tensor<T> out({c * kernel * kernel, cols});
  auto o = out.mutable_data();
  const auto xs = x.data();
  // Visits every (row, source) pair; shared by forward gather and backward scatter.
  auto for_each_tap = [=](auto&& fn) {
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t ki = 0; ki < kernel; ++ki)
        for (std::size_t kj = 0; kj < kernel; ++kj) {
          const std::size_t row = (ch * kernel + ki) * kernel + kj;
          for (std::size_t oy = 0; oy < oh; ++oy) {
            const auto iy = static_cast<long long>(oy * stride + ki) - static_cast<long long>(pad);
            if (iy < 0 || iy >= static_cast<long long>(h)) continue;
            for (std::size_t ox = 0; ox < ow; ++ox) {
              const auto ix = static_cast<long long>(ox * stride + kj) - static_cast<long long>(pad);
              if (ix < 0 || ix >= static_cast<long long>(w)) continue;
              fn(row * cols + oy * ow + ox, (ch * h + static_cast<std::size_t>(iy)) * w + static_cast<std::size_t>(ix));
            }
          }
        }
  };
  for_each_tap([&](std::size_t dst, std::size_t src) { o[dst] = xs[src]; });
  return finish<T>("im2col", {x}, std::move(out), [for_each_tap](std::span<const T> g, Grads<T> in) {
    if (in[0].empty()) return;
    T* dst = in[0].data();
    for_each_tap([&](std::size_t col, std::size_t src) { dst[src] += g[col]; });
  });
}

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& kernels, std::size_t stride, std::size_t pad) {
  require_rank(x.shape(), 3, "conv2d");
  require_rank(kernels.shape(), 4, "conv2d kernels");
  if (kernels.dim(1) != x.dim(0) || kernels.dim(2) != kernels.dim(3)) {
    throw ShapeError("conv2d: kernels " + shape_str(kernels.shape()) + " incompatible with input " +
                     shape_str(x.shape()));
  }
  const std::size_t k = kernels.dim(2);
  const std::size_t oh = conv_output_size(x.dim(1), k, stride, pad);
  const std::size_t ow = conv_output_size(x.dim(2), k, stride, pad);
  const auto cols = im2col(x, k, stride, pad);
  const auto weight = reshape(kernels, {kernels.dim(0), kernels.dim(1) * k * k});
  return reshape(matmul(weight, cols), {kernels.dim(0), oh, ow});
}

template <typename T>
Tensor<T> bilinear_resize(const Tensor<T>& x, std::size_t out_h, std::size_t out_w, bool align_corners) {
  require_rank(x.shape(), 3, "bilinear_resize");
  if (out_h < 1 || out_w < 1) throw ShapeError("bilinear_resize: output size must be >= 1");
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  if (h == 0 || w == 0) throw ShapeError("bilinear_resize of an empty image");
  const auto ty = resize_taps(h, out_h, align_corners);
  const auto tx = resize_taps(w, out_w, align_corners);
  Tensor<T> out({c, out_h, out_w});
  auto o = out.mutable_data();
  const auto xs = x.data();
  for (std::size_t ch = 0; ch < c; ++ch) {
    const T* plane = xs.data() + ch * h * w;
    for (std::size_t i = 0; i < out_h; ++i) {
      const T fy = static_cast<T>(ty[i].frac);
      const T* r0 = plane + ty[i].lo * w;
      const T* r1 = plane + ty[i].hi * w;
      for (std::size_t j = 0; j < out_w; ++j) {
        const T fx = static_cast<T>(tx[j].frac);
        // Lerp form keeps constant regions exact.
        const T top = r0[tx[j].lo] + fx * (r0[tx[j].hi] - r0[tx[j].lo]);
        const T bottom = r1[tx[j].lo] + fx * (r1[tx[j].hi] - r1[tx[j].lo]);
        o[(ch * out_h + i) * out_w + j] = top + fy * (bottom - top);
      }
    }
  }
  return finish<T>("bilinear_resize", {x}, std::move(out),
                   [ty, tx, c, h, w, out_h, out_w](std::span<const T> g, Grads<T> in) {
                     if (in[0].empty()) return;
                     for (std::size_t ch = 0; ch < c; ++ch) {
                       T* plane = in[0].data() + ch * h * w;
                       for (std::size_t i = 0; i < out_h; ++i) {
                         const T fy = static_cast<T>(ty[i].frac);
                         T* r0 = plane + ty[i].lo * w;
                         T* r1 = plane + ty[i].hi * w;
                         for (std::size_t j = 0; j < out_w; ++j) {
                           const T fx = static_cast<T>(tx[j].frac);
                           const T gv = g[(ch * out_h + i) * out_w + j];
                           r0[tx[j].lo] += gv * (T{1} - fy) * (T{1} - fx);
                           r0[tx[j].hi] += gv * (T{1} - fy) * fx;
                           r1[tx[j].lo] += gv * fy * (T{1} - fx);
                           r1[tx[j].hi] += gv * fy * fx;
                         }
                       }
                     }
                   });
}

template <typename T>
Tensor<T> avg_pool2d(const Tensor<T>& x, std::size_t r) {
  require_rank(x.shape(), 3, "avg_pool2d");
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  if (r < 1 || h % r != 0 || w % r != 0) {
    throw ShapeError("avg_pool2d: ratio " + std::to_string(r) + " does not divide " + shape_str(x.shape()));
  }
  const std::size_t oh = h / r, ow = w / r;
  const T inv = T{1} / static_cast<T>(r * r);
  Tensor<T> out({c, oh, ow});
  auto o = out.mutable_data();
  const auto xs = x.data();
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t i = 0; i < h; ++i)
      for (std::size_t j = 0; j < w; ++j) o[(ch * oh + i / r) * ow + j / r] += xs[(ch * h + i) * w + j];
  for (auto& v : o) v *= inv;
  return finish<T>("avg_pool2d", {x}, std::move(out), [c, h, w, r, oh, ow, inv](std::span<const T> g, Grads<T> in) {
    if (in[0].empty()) return;
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t i = 0; i < h; ++i)
        for (std::size_t j = 0; j < w; ++j) in[0][(ch * h + i) * w + j] += g[(ch * oh + i / r) * ow + j / r] * inv;
  });
}

template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat of zero tensors");
  const Shape& first = parts.front().shape();
  if (axis >= first.size()) throw ShapeError("concat axis out of range for " + shape_str(first));
  Shape shape = first;
  shape[axis] = 0;
  std::vector<std::size_t> extents;
  for (const auto& p : parts) {
    Shape probe = p.shape();
    if (probe.size() != first.size()) throw ShapeError("concat: rank mismatch");
    extents.push_back(probe[axis]);
    shape[axis] += probe[axis];
    probe[axis] = first[axis];
    require_same(probe, first, "concat");
  }
  const AxisSplit split = split_axis(shape, axis);
  Tensor<T> out(shape);
  auto o = out.mutable_data();
  std::size_t offset = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const auto src = parts[p].data();
    const std::size_t block = extents[p] * split.inner;
    for (std::size_t outer = 0; outer < split.outer; ++outer) {
      std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(outer * block), block,
                  o.begin() + static_cast<std::ptrdiff_t>(outer * split.extent * split.inner + offset));
    }
    offset += block;
  }
  return finish<T>("concat", parts, std::move(out), [extents, split](std::span<const T> g, Grads<T> in) {
    std::size_t offset = 0;
    for (std::size_t p = 0; p < extents.size(); ++p) {
      const std::size_t block = extents[p] * split.inner;
      if (!in[p].empty()) {
        for (std::size_t outer = 0; outer < split.outer; ++outer) {
          const T* src = g.data() + outer * split.extent * split.inner + offset;
          T* dst = in[p].data() + outer * block;
          for (std::size_t i = 0; i < block; ++i) dst[i] += src[i];
        }
      }
      offset += block;
    }
  });
}

template <typename T>
Tensor<T> slice(const Tensor<T>& x, std::size_t axis, std::size_t start, std::size_t length) {
  if (axis >= x.rank() || start + length > x.dim(axis)) {
    throw ShapeError("slice [" + std::to_string(start) + ", " + std::to_string(start + length) + ") out of range on " +
                     shape_str(x.shape()));
  }
  const AxisSplit split = split_axis(x.shape(), axis);
  Shape shape = x.shape();
  shape[axis] = length;
  Tensor<T> out(shape);
  auto o = out.mutable_data();
  const auto src = x.data();
  const std::size_t block = length * split.inner;
  for (std::size_t outer = 0; outer < split.outer; ++outer) {
    std::copy_n(src.begin() + static_cast<std::ptrdiff_t>((outer * split.extent + start) * split.inner), block,
                o.begin() + static_cast<std::ptrdiff_t>(outer * block));
  }
  return finish<T>("slice", {x}, std::move(out), [split, start, block](std::span<const T> g, Grads<T> in) {
    if (in[0].empty()) return;
    for (std::size_t outer = 0; outer < split.outer; ++outer) {
      T* dst = in[0].data() + (outer * split.extent + start) * split.inner;
      const T* s = g.data() + outer * block;
      for (std::size_t i = 0; i < block; ++i) dst[i] += s[i];
    }
  });
}

#define BUILDSEG_INSTANTIATE_OPS(T)                                                                  \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                                     \
  template Tensor<T> transpose(const Tensor<T>&);                                                    \
  template Tensor<T> reshape(const Tensor<T>&, Shape);                                               \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                        \
  template Tensor<T> add(const Tensor<T>&, T);                                                       \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                                        \
  template Tensor<T> scale(const Tensor<T>&, T);                                                     \
  template Tensor<T> add_bias(const Tensor<T>&, const Tensor<T>&);                                   \
  template Tensor<T> sum(const Tensor<T>&);                                                          \
  template Tensor<T> mean(const Tensor<T>&);                                                         \
  template Tensor<T> softmax_rows(const Tensor<T>&);                                                 \
  template Tensor<T> layer_norm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, T);            \
  template Tensor<T> gelu(const Tensor<T>&);                                                         \
  template Tensor<T> im2col(const Tensor<T>&, std::size_t, std::size_t, std::size_t);                \
  template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, std::size_t, std::size_t);           \
  template Tensor<T> bilinear_resize(const Tensor<T>&, std::size_t, std::size_t, bool);              \
  template Tensor<T> avg_pool2d(const Tensor<T>&, std::size_t);                                      \
  template Tensor<T> concat(const std::vector<Tensor<T>>&, std::size_t);                             \
  template Tensor<T> slice(const Tensor<T>&, std::size_t, std::size_t, std::size_t);

BUILDSEG_INSTANTIATE_OPS(float)
BUILDSEG_INSTANTIATE_OPS(double)

#undef BUILDSEG_INSTANTIATE_OPS

}  // namespace buildseg::tensor
