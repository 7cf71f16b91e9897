/**
 * Copyright 2026 The lidar_edge Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef LIDAR_EDGE_LAYERS_HPP_
#define LIDAR_EDGE_LAYERS_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "lidar_edge/error.hpp"
#include "lidar_edge/tensor.hpp"

namespace lidar_edge::nn {

enum class Padding { kSameZero, kValid };

/// Stride-1 convolution layer: weight (out, in, k, k), bias (out).
struct ConvLayerParams {
  Tensor weight;
  Tensor bias;
  Padding padding = Padding::kSameZero;

  ConvLayerParams() = default;
  ConvLayerParams(std::size_t out_ch, std::size_t in_ch, std::size_t k, Padding pad)
      : weight({out_ch, in_ch, k, k}), bias({out_ch}), padding(pad) {
    if (pad == Padding::kSameZero && k % 2 == 0) {
      throw DimensionError("same-zero convolution needs an odd kernel");
    }
  }

  std::size_t out_channels() const noexcept { return weight.dim(0); }
  std::size_t in_channels() const noexcept { return weight.dim(1); }
  std::size_t kernel() const noexcept { return weight.dim(2); }

  friend bool operator==(const ConvLayerParams&, const ConvLayerParams&) = default;
};

namespace detail {

struct ConvGeometry {
  std::size_t in_h, in_w, out_h, out_w, k;
  std::ptrdiff_t pad;
};

inline ConvGeometry conv_geometry(const Tensor& x, const ConvLayerParams& p) {
  if (x.rank() != 3) throw DimensionError("conv input must be (C, H, W)");
  if (p.weight.rank() != 4 || p.bias.rank() != 1 || p.bias.dim(0) != p.out_channels() ||
      p.weight.dim(2) != p.weight.dim(3)) {
    throw DimensionError("conv parameters have inconsistent shapes");
  }
  if (x.dim(0) != p.in_channels()) {
    throw DimensionError("conv input has " + std::to_string(x.dim(0)) +
                         " channels, layer expects " + std::to_string(p.in_channels()));
  }
  ConvGeometry g{x.dim(1), x.dim(2), 0, 0, p.kernel(), 0};
  if (p.padding == Padding::kSameZero) {
    g.out_h = g.in_h;
    g.out_w = g.in_w;
    g.pad = static_cast<std::ptrdiff_t>(g.k / 2);
  } else {
    if (g.k > g.in_h || g.k > g.in_w) {
      throw DimensionError("valid convolution kernel larger than input");
    }
    g.out_h = g.in_h - g.k + 1;
    g.out_w = g.in_w - g.k + 1;
  }
  return g;
}

/// Output rows/cols [lo, hi) for which input offset d stays inside [0, n).
inline std::pair<std::ptrdiff_t, std::ptrdiff_t> valid_span(std::ptrdiff_t d,
                                                            std::size_t out_n,
                                                            std::size_t in_n) {
  const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, -d);
  const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(out_n),
                                                     static_cast<std::ptrdiff_t>(in_n) - d);
  return {lo, std::max(lo, hi)};
}

}  // namespace detail

/**
 * Cross-correlation plus bias:
 *   y[o, r, c] = b[o] + sum_{i,u,v} w[o, i, u, v] * x[i, r + u - pad, c + v - pad]
 * with zeros outside the input.
 */
inline Tensor conv_forward(const Tensor& x, const ConvLayerParams& p) {
  const auto g = detail::conv_geometry(x, p);
  const std::size_t O = p.out_channels(), I = p.in_channels(), K = g.k;
  Tensor y({O, g.out_h, g.out_w});
  for (std::size_t o = 0; o < O; ++o) {
    double* yp = y.plane(o);
    std::fill(yp, yp + g.out_h * g.out_w, p.bias[o]);
    for (std::size_t i = 0; i < I; ++i) {
      const double* xp = x.plane(i);
      for (std::size_t u = 0; u < K; ++u) {
        const std::ptrdiff_t dy = static_cast<std::ptrdiff_t>(u) - g.pad;
        const auto [r0, r1] = detail::valid_span(dy, g.out_h, g.in_h);
        for (std::size_t v = 0; v < K; ++v) {
          const std::ptrdiff_t dx = static_cast<std::ptrdiff_t>(v) - g.pad;
          const auto [c0, c1] = detail::valid_span(dx, g.out_w, g.in_w);
          const double w = p.weight[((o * I + i) * K + u) * K + v];
          for (std::ptrdiff_t r = r0; r < r1; ++r) {
            double* yrow = yp + static_cast<std::size_t>(r) * g.out_w;
            const double* xrow = xp + static_cast<std::size_t>(r + dy) * g.in_w;
            for (std::ptrdiff_t c = c0; c < c1; ++c) yrow[c] += w * xrow[c + dx];
          }
        }
      }
    }
  }
  return y;
}

/// Accumulates dW and db into `grad` and returns dX.
inline Tensor conv_backward(const Tensor& x, const ConvLayerParams& p, const Tensor& dy,
                            ConvLayerParams& grad, bool need_dx = true) {
  const auto g = detail::conv_geometry(x, p);
  const std::size_t O = p.out_channels(), I = p.in_channels(), K = g.k;
  require_shape(dy, {O, g.out_h, g.out_w}, "conv_backward dy");
  Tensor dx = need_dx ? Tensor({I, g.in_h, g.in_w}) : Tensor();
  for (std::size_t o = 0; o < O; ++o) {
    const double* dyp = dy.plane(o);
    double db = 0.0;
    for (std::size_t k = 0; k < g.out_h * g.out_w; ++k) db += dyp[k];
    grad.bias[o] += db;
    for (std::size_t i = 0; i < I; ++i) {
      const double* xp = x.plane(i);
      double* dxp = need_dx ? dx.plane(i) : nullptr;
      for (std::size_t u = 0; u < K; ++u) {
        const std::ptrdiff_t ddy = static_cast<std::ptrdiff_t>(u) - g.pad;
        const auto [r0, r1] = detail::valid_span(ddy, g.out_h, g.in_h);
        for (std::size_t v = 0; v < K; ++v) {
          const std::ptrdiff_t ddx = static_cast<std::ptrdiff_t>(v) - g.pad;
          const auto [c0, c1] = detail::valid_span(ddx, g.out_w, g.in_w);
          const std::size_t widx = ((o * I + i) * K + u) * K + v;
          const double w = p.weight[widx];
          double dw = 0.0;
          for (std::ptrdiff_t r = r0; r < r1; ++r) {
            const double* dyrow = dyp + static_cast<std::size_t>(r) * g.out_w;
            const std::size_t xoff = static_cast<std::size_t>(r + ddy) * g.in_w;
            const double* xrow = xp + xoff;
            for (std::ptrdiff_t c = c0; c < c1; ++c) dw += dyrow[c] * xrow[c + ddx];
            if (dxp) {
              double* dxrow = dxp + xoff;
              for (std::ptrdiff_t c = c0; c < c1; ++c) dxrow[c + ddx] += w * dyrow[c];
            }
          }
          grad.weight[widx] += dw;
        }
      }
    }
  }
  return dx;
}

inline void relu_inplace(Tensor& t) {
  for (double& v : t.values()) v = v > 0.0 ? v : 0.0;
}

/// Gradient through ReLU given the layer's post-activation output.
inline void relu_backward_inplace(const Tensor& activated, Tensor& grad) {
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (!(activated[i] > 0.0)) grad[i] = 0.0;
  }
}

struct PoolResult {
  Tensor out;
  std::vector<std::size_t> argmax;  // flat index into the pooled input
};

/**
 * 2x2 stride-2 max pooling. Odd extents are padded on the bottom/right by
 * replication, so outputs are ceil(H/2) x ceil(W/2). Ties go to the first
 * position in row-major window order; a replicated pad cell never wins over
 * the original it copies.
 */
inline PoolResult maxpool2x2(const Tensor& x) {
  if (x.rank() != 3) throw DimensionError("maxpool input must be (C, H, W)");
  const std::size_t C = x.dim(0), H = x.dim(1), W = x.dim(2);
  const std::size_t oh = (H + 1) / 2, ow = (W + 1) / 2;
  PoolResult res{Tensor({C, oh, ow}), std::vector<std::size_t>(C * oh * ow)};
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t r = 0; r < oh; ++r) {
      const std::size_t ys[2] = {2 * r, std::min(2 * r + 1, H - 1)};
      for (std::size_t q = 0; q < ow; ++q) {
        const std::size_t xs[2] = {2 * q, std::min(2 * q + 1, W - 1)};
        std::size_t best = (c * H + ys[0]) * W + xs[0];
        double best_v = x[best];
        for (int a = 0; a < 2; ++a) {
          for (int b = 0; b < 2; ++b) {
            const std::size_t idx = (c * H + ys[a]) * W + xs[b];
            if (x[idx] > best_v) {
              best_v = x[idx];
              best = idx;
            }
          }
        }
        const std::size_t o = (c * oh + r) * ow + q;
        res.out[o] = best_v;
        res.argmax[o] = best;
      }
    }
  }
  return res;
}

inline Tensor maxpool2x2_backward(const Tensor& dy, const std::vector<std::size_t>& argmax,
                                  const std::vector<std::size_t>& input_shape) {
  if (dy.size() != argmax.size()) throw DimensionError("maxpool backward size mismatch");
  Tensor dx(input_shape);
  for (std::size_t o = 0; o < dy.size(); ++o) dx[argmax[o]] += dy[o];
  return dx;
}

/// Each pixel replicated factor x factor.
inline Tensor upsample_nearest(const Tensor& x, std::size_t factor) {
  if (factor < 1) throw ParameterError("upsample factor must be >= 1");
  if (x.rank() != 3) throw DimensionError("upsample input must be (C, H, W)");
  const std::size_t C = x.dim(0), H = x.dim(1), W = x.dim(2);
  Tensor y({C, H * factor, W * factor});
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t r = 0; r < H * factor; ++r) {
      for (std::size_t q = 0; q < W * factor; ++q) {
        y.at(c, r, q) = x.at(c, r / factor, q / factor);
      }
    }
  }
  return y;
}

/// Sums each factor x factor block of dy.
inline Tensor upsample_nearest_backward(const Tensor& dy, std::size_t factor) {
  if (factor < 1) throw ParameterError("upsample factor must be >= 1");
  const std::size_t C = dy.dim(0), H = dy.dim(1) / factor, W = dy.dim(2) / factor;
  if (H * factor != dy.dim(1) || W * factor != dy.dim(2)) {
    throw DimensionError("upsample backward extent not divisible by factor");
  }
  Tensor dx({C, H, W});
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t r = 0; r < dy.dim(1); ++r) {
      for (std::size_t q = 0; q < dy.dim(2); ++q) {
        dx.at(c, r / factor, q / factor) += dy.at(c, r, q);
      }
    }
  }
  return dx;
}

inline double sigmoid(double z) noexcept {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// Fully connected layer: weight (out, in), bias (out).
struct DenseParams {
  Tensor weight;
  Tensor bias;

  DenseParams() = default;
  DenseParams(std::size_t out, std::size_t in) : weight({out, in}), bias({out}) {}

  std::size_t out_features() const noexcept { return weight.dim(0); }
  std::size_t in_features() const noexcept { return weight.dim(1); }

  friend bool operator==(const DenseParams&, const DenseParams&) = default;
};

inline std::vector<double> dense_forward(std::span<const double> x, const DenseParams& p) {
  if (x.size() != p.in_features()) throw DimensionError("dense input length mismatch");
  std::vector<double> y(p.out_features());
  for (std::size_t o = 0; o < y.size(); ++o) {
    double acc = p.bias[o];
    const double* w = p.weight.data() + o * x.size();
    for (std::size_t i = 0; i < x.size(); ++i) acc += w[i] * x[i];
    y[o] = acc;
  }
  return y;
}

/// Accumulates dW, db into `grad`; returns dX.
inline std::vector<double> dense_backward(std::span<const double> x, const DenseParams& p,
                                          std::span<const double> dy, DenseParams& grad) {
  std::vector<double> dx(x.size(), 0.0);
  for (std::size_t o = 0; o < dy.size(); ++o) {
    grad.bias[o] += dy[o];
    const double* w = p.weight.data() + o * x.size();
    double* gw = grad.weight.data() + o * x.size();
    for (std::size_t i = 0; i < x.size(); ++i) {
      gw[i] += dy[o] * x[i];
      dx[i] += w[i] * dy[o];
    }
  }
  return dx;
}

}  // namespace lidar_edge::nn

#endif  // LIDAR_EDGE_LAYERS_HPP_
