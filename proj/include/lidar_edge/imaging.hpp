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

#ifndef LIDAR_EDGE_IMAGING_HPP_
#define LIDAR_EDGE_IMAGING_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "lidar_edge/error.hpp"
#include "lidar_edge/raster.hpp"

namespace lidar_edge {

enum class Border { kZeroPad, kReplicate, kValid };

/**
 * 2-D cross-correlation: out(r, c) = sum_{u,v} k(u, v) * img(r + u - ry, c + v - rx)
 * where (ry, rx) is the kernel center. The kernel is not flipped.
 *
 * kZeroPad and kReplicate keep the input size; kValid shrinks it by
 * (rows - 1, cols - 1) and requires the kernel to fit.
 */
template <typename Tag>
Raster<double, Tag> convolve2d(const Raster<double, Tag>& img,
                               const Kernel2D& k, Border border) {
  const auto H = static_cast<std::ptrdiff_t>(img.height());
  const auto W = static_cast<std::ptrdiff_t>(img.width());
  const auto KR = static_cast<std::ptrdiff_t>(k.rows());
  const auto KC = static_cast<std::ptrdiff_t>(k.cols());

  if (border == Border::kValid) {
    if (KR > H || KC > W) {
      throw DimensionError("convolve2d: kernel " + std::to_string(KR) + "x" +
                           std::to_string(KC) + " larger than image " +
                           std::to_string(H) + "x" + std::to_string(W) +
                           " in valid mode");
    }
    Raster<double, Tag> out(static_cast<std::size_t>(H - KR + 1),
                            static_cast<std::size_t>(W - KC + 1));
    for (std::ptrdiff_t r = 0; r <= H - KR; ++r) {
      for (std::ptrdiff_t c = 0; c <= W - KC; ++c) {
        double acc = 0.0;
        for (std::ptrdiff_t u = 0; u < KR; ++u) {
          for (std::ptrdiff_t v = 0; v < KC; ++v) {
            acc += k(u, v) * img(r + u, c + v);
          }
        }
        out(r, c) = acc;
      }
    }
    return out;
  }

  const std::ptrdiff_t ry = KR / 2;
  const std::ptrdiff_t rx = KC / 2;
  Raster<double, Tag> out(img.height(), img.width());
  for (std::ptrdiff_t r = 0; r < H; ++r) {
    for (std::ptrdiff_t c = 0; c < W; ++c) {
      double acc = 0.0;
      for (std::ptrdiff_t u = 0; u < KR; ++u) {
        const std::ptrdiff_t y = r + u - ry;
        for (std::ptrdiff_t v = 0; v < KC; ++v) {
          const std::ptrdiff_t x = c + v - rx;
          double px;
          if (border == Border::kReplicate) {
            px = img.clamped(y, x);
          } else if (y < 0 || y >= H || x < 0 || x >= W) {
            continue;
          } else {
            px = img(y, x);
          }
          acc += k(u, v) * px;
        }
      }
      out(r, c) = acc;
    }
  }
  return out;
}

/// Normalized 1-D Gaussian taps, radius ceil(3 sigma).
inline std::vector<double> gaussian_taps(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw ParameterError("gaussian sigma must be > 0");
  }
  const auto radius = static_cast<std::ptrdiff_t>(std::ceil(3.0 * sigma));
  std::vector<double> taps(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
    const double w = std::exp(-0.5 * static_cast<double>(i * i) / (sigma * sigma));
    taps[static_cast<std::size_t>(i + radius)] = w;
    sum += w;
  }
  for (double& w : taps) w /= sum;
  return taps;
}

/// Separable Gaussian blur with replicate border.
template <typename Tag>
Raster<double, Tag> gaussian_filter(const Raster<double, Tag>& img,
                                    double sigma) {
  const auto taps = gaussian_taps(sigma);
  const auto n = taps.size();
  const Kernel2D row_kernel(1, n, taps);
  const Kernel2D col_kernel(n, 1, taps);
  return convolve2d(convolve2d(img, row_kernel, Border::kReplicate), col_kernel,
                    Border::kReplicate);
}

/// Median over the (2r+1)^2 replicate-padded window.
template <typename Tag>
Raster<double, Tag> median_filter(const Raster<double, Tag>& img, int radius) {
  if (radius < 1) throw ParameterError("median radius must be >= 1");
  const auto H = static_cast<std::ptrdiff_t>(img.height());
  const auto W = static_cast<std::ptrdiff_t>(img.width());
  Raster<double, Tag> out(img.height(), img.width());
  std::vector<double> window;
  window.reserve(static_cast<std::size_t>((2 * radius + 1) * (2 * radius + 1)));
  for (std::ptrdiff_t r = 0; r < H; ++r) {
    for (std::ptrdiff_t c = 0; c < W; ++c) {
      window.clear();
      for (std::ptrdiff_t u = -radius; u <= radius; ++u) {
        for (std::ptrdiff_t v = -radius; v <= radius; ++v) {
          window.push_back(img.clamped(r + u, c + v));
        }
      }
      // Lower-middle order statistic; the window count is always odd here.
      const auto mid = window.begin() +
                       static_cast<std::ptrdiff_t>((window.size() - 1) / 2);
      std::nth_element(window.begin(), mid, window.end());
      out(r, c) = *mid;
    }
  }
  return out;
}

enum class NormalizeMode { kMinMax01, kZScore };

template <typename Tag>
Raster<double, Tag> normalize(const Raster<double, Tag>& img,
                              NormalizeMode mode) {
  Raster<double, Tag> out = img;
  auto px = out.pixels();
  if (mode == NormalizeMode::kMinMax01) {
    const auto [lo, hi] = std::minmax_element(px.begin(), px.end());
    const double a = *lo;
    const double span = *hi - *lo;
    for (double& v : px) v = span > 0.0 ? (v - a) / span : 0.0;
    // Guard against 1 + ulp from the division.
    for (double& v : px) v = std::clamp(v, 0.0, 1.0);
    return out;
  }
  // A constant image maps to zeros; the summed mean may carry rounding error
  // that would otherwise survive as tiny nonzero outputs.
  if (std::all_of(px.begin(), px.end(), [&](double v) { return v == px[0]; })) {
    std::fill(px.begin(), px.end(), 0.0);
    return out;
  }
  double mean = 0.0;
  for (double v : px) mean += v;
  mean /= static_cast<double>(px.size());
  double var = 0.0;
  for (double v : px) var += (v - mean) * (v - mean);
  var /= static_cast<double>(px.size());
  double sd = std::sqrt(var);
  if (!(sd > 0.0)) sd = 1.0;
  for (double& v : px) v = (v - mean) / sd;
  return out;
}

enum class ResizeMode { kBilinear, kNearest };

/**
 * Resize with the align-corners-false convention: output pixel center d maps
 * to source coordinate (d + 0.5) * in / out - 0.5. Nearest mode picks the
 * source pixel containing that center, which keeps label maps binary.
 */
template <typename T, typename Tag>
Raster<T, Tag> resize(const Raster<T, Tag>& img, std::size_t h, std::size_t w,
                      ResizeMode mode) {
  if (h == 0 || w == 0) throw ParameterError("resize target must be >= 1x1");
  Raster<T, Tag> out(h, w);
  const double sy = static_cast<double>(img.height()) / static_cast<double>(h);
  const double sx = static_cast<double>(img.width()) / static_cast<double>(w);
  const auto maxr = static_cast<std::ptrdiff_t>(img.height()) - 1;
  const auto maxc = static_cast<std::ptrdiff_t>(img.width()) - 1;
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      if (mode == ResizeMode::kNearest) {
        const auto y = std::min<std::ptrdiff_t>(
            static_cast<std::ptrdiff_t>(std::floor((static_cast<double>(r) + 0.5) * sy)), maxr);
        const auto x = std::min<std::ptrdiff_t>(
            static_cast<std::ptrdiff_t>(std::floor((static_cast<double>(c) + 0.5) * sx)), maxc);
        out(r, c) = img(static_cast<std::size_t>(y), static_cast<std::size_t>(x));
        continue;
      }
      if constexpr (std::is_floating_point_v<T>) {
        const double fy = std::clamp((static_cast<double>(r) + 0.5) * sy - 0.5, 0.0,
                                     static_cast<double>(maxr));
        const double fx = std::clamp((static_cast<double>(c) + 0.5) * sx - 0.5, 0.0,
                                     static_cast<double>(maxc));
        const auto y0 = static_cast<std::ptrdiff_t>(std::floor(fy));
        const auto x0 = static_cast<std::ptrdiff_t>(std::floor(fx));
        const auto y1 = std::min(y0 + 1, maxr);
        const auto x1 = std::min(x0 + 1, maxc);
        const double ty = fy - static_cast<double>(y0);
        const double tx = fx - static_cast<double>(x0);
        const double top = (1.0 - tx) * img(y0, x0) + tx * img(y0, x1);
        const double bot = (1.0 - tx) * img(y1, x0) + tx * img(y1, x1);
        out(r, c) = (1.0 - ty) * top + ty * bot;
      } else {
        throw ParameterError("bilinear resize requires a real-valued raster");
      }
    }
  }
  return out;
}

}  // namespace lidar_edge

#endif  // LIDAR_EDGE_IMAGING_HPP_
