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

#ifndef LIDAR_EDGE_CLASSICAL_HPP_
#define LIDAR_EDGE_CLASSICAL_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

#include "lidar_edge/error.hpp"
#include "lidar_edge/imaging.hpp"
#include "lidar_edge/raster.hpp"

namespace lidar_edge {

struct GradTag {};
using GradMap = Raster<double, GradTag>;

struct GradientField {
  GradMap gx;
  GradMap gy;
  GradMap magnitude;

  double max_magnitude() const {
    return *std::max_element(magnitude.pixels().begin(), magnitude.pixels().end());
  }
};

inline GradientField make_field(GradMap gx, GradMap gy) {
  GradMap mag(gx.height(), gx.width());
  for (std::size_t i = 0; i < mag.size(); ++i) {
    mag.storage()[i] = std::hypot(gx.storage()[i], gy.storage()[i]);
  }
  return {std::move(gx), std::move(gy), std::move(mag)};
}

// Correlation orientation: gx responds positively when intensity increases to
// the right, gy when it increases downward.
inline const Kernel2D& sobel_x_kernel() {
  static const Kernel2D k(3, 3, {-1, 0, 1, -2, 0, 2, -1, 0, 1});
  return k;
}
inline const Kernel2D& sobel_y_kernel() {
  static const Kernel2D k(3, 3, {-1, -2, -1, 0, 0, 0, 1, 2, 1});
  return k;
}

/**
 * Sobel gradients with replicate border. Each component is evaluated as the
 * difference of two weighted sums accumulated in the same order, which equals
 * correlation with sobel_x_kernel / sobel_y_kernel and is exactly zero on
 * flat regions.
 */
template <typename Tag>
GradientField sobel(const Raster<double, Tag>& img) {
  if (img.height() < 3 || img.width() < 3) {
    throw DimensionError("sobel needs an image of at least 3x3");
  }
  const auto H = static_cast<std::ptrdiff_t>(img.height());
  const auto W = static_cast<std::ptrdiff_t>(img.width());
  GradMap gx(img.height(), img.width()), gy(img.height(), img.width());
  for (std::ptrdiff_t r = 0; r < H; ++r) {
    for (std::ptrdiff_t c = 0; c < W; ++c) {
      auto I = [&](std::ptrdiff_t dy, std::ptrdiff_t dx) { return img.clamped(r + dy, c + dx); };
      const double right = I(-1, 1) + 2.0 * I(0, 1) + I(1, 1);
      const double left = I(-1, -1) + 2.0 * I(0, -1) + I(1, -1);
      const double down = I(1, -1) + 2.0 * I(1, 0) + I(1, 1);
      const double up = I(-1, -1) + 2.0 * I(-1, 0) + I(-1, 1);
      gx(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = right - left;
      gy(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = down - up;
    }
  }
  return make_field(std::move(gx), std::move(gy));
}

/**
 * Roberts cross, anchored at the top-left of each 2x2 block:
 *   g1(r, c) = I(r, c) - I(r+1, c+1),  g2(r, c) = I(r, c+1) - I(r+1, c).
 * The last row and column, where the block leaves the image, are zero.
 */
template <typename Tag>
GradientField roberts(const Raster<double, Tag>& img) {
  if (img.height() < 2 || img.width() < 2) {
    throw DimensionError("roberts needs an image of at least 2x2");
  }
  const std::size_t H = img.height(), W = img.width();
  GradMap g1(H, W), g2(H, W);
  for (std::size_t r = 0; r + 1 < H; ++r) {
    for (std::size_t c = 0; c + 1 < W; ++c) {
      g1(r, c) = img(r, c) - img(r + 1, c + 1);
      g2(r, c) = img(r, c + 1) - img(r + 1, c);
    }
  }
  return make_field(std::move(g1), std::move(g2));
}

/// Marks pixels with magnitude >= t * max magnitude. An all-zero field yields
/// an empty map.
inline EdgeMap threshold_magnitude(const GradientField& g, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw ParameterError("threshold must be in [0,1]");
  const double mx = g.max_magnitude();
  EdgeMap out(g.magnitude.height(), g.magnitude.width(), 0);
  if (!(mx > 0.0)) return out;
  const double cut = t * mx;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.storage()[i] = g.magnitude.storage()[i] >= cut ? 1 : 0;
  }
  return out;
}

/// Quantized gradient direction: 0 = horizontal, 1 = 45 deg (down-right),
/// 2 = vertical, 3 = 135 deg (down-left). Image rows grow downward.
inline int quantize_direction(double gx, double gy) {
  double deg = std::atan2(gy, gx) * 180.0 / std::numbers::pi;
  if (deg < 0.0) deg += 180.0;
  if (deg >= 180.0) deg -= 180.0;
  if (deg < 22.5 || deg >= 157.5) return 0;
  if (deg < 67.5) return 1;
  if (deg < 112.5) return 2;
  return 3;
}

/// Relative slack used by non-maximum suppression so that rounding noise
/// cannot decide plateau ties.
inline constexpr double kNmsRelativeTolerance = 1e-9;

/**
 * Non-maximum suppression along the quantized gradient direction. A pixel
 * survives when its magnitude is positive, strictly greater than the neighbor
 * ahead (+direction) and at least the neighbor behind. On a two-pixel plateau
 * exactly one pixel survives.
 */
inline EdgeMap non_max_suppression(const GradientField& g) {
  static constexpr std::array<std::array<int, 2>, 4> kAhead{{{0, 1}, {1, 1}, {1, 0}, {1, -1}}};
  const auto H = static_cast<std::ptrdiff_t>(g.magnitude.height());
  const auto W = static_cast<std::ptrdiff_t>(g.magnitude.width());
  const double tol = kNmsRelativeTolerance * g.max_magnitude();
  EdgeMap out(g.magnitude.height(), g.magnitude.width(), 0);
  auto mag_at = [&](std::ptrdiff_t r, std::ptrdiff_t c) {
    if (r < 0 || r >= H || c < 0 || c >= W) return 0.0;
    return g.magnitude(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
  };
  for (std::ptrdiff_t r = 0; r < H; ++r) {
    for (std::ptrdiff_t c = 0; c < W; ++c) {
      const double m = mag_at(r, c);
      if (!(m > tol)) continue;
      const auto d = kAhead[static_cast<std::size_t>(quantize_direction(
          g.gx(static_cast<std::size_t>(r), static_cast<std::size_t>(c)),
          g.gy(static_cast<std::size_t>(r), static_cast<std::size_t>(c))))];
      const double ahead = mag_at(r + d[0], c + d[1]);
      const double behind = mag_at(r - d[0], c - d[1]);
      if (m - ahead > tol && m - behind >= -tol) {
        out(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = 1;
      }
    }
  }
  return out;
}

struct CannyParams {
  double sigma = 1.0;
  double low = 0.1;   // fraction of max gradient magnitude
  double high = 0.2;  // fraction of max gradient magnitude

  void validate() const {
    if (!(sigma > 0.0)) throw ParameterError("canny sigma must be > 0");
    if (!(low >= 0.0 && low < high && high <= 1.0)) {
      throw ParameterError("canny thresholds must satisfy 0 <= low < high <= 1");
    }
  }
};

/// Double threshold plus 8-connected hysteresis over NMS survivors.
inline EdgeMap hysteresis(const GradientField& g, const EdgeMap& nms, double low,
                          double high) {
  const double mx = g.max_magnitude();
  const std::size_t H = nms.height(), W = nms.width();
  EdgeMap out(H, W, 0);
  if (!(mx > 0.0)) return out;
  const double lo = low * mx, hi = high * mx;
  std::vector<std::size_t> work;
  for (std::size_t i = 0; i < nms.size(); ++i) {
    if (nms.storage()[i] && g.magnitude.storage()[i] >= hi) {
      out.storage()[i] = 1;
      work.push_back(i);
    }
  }
  while (!work.empty()) {
    const std::size_t i = work.back();
    work.pop_back();
    const auto r = static_cast<std::ptrdiff_t>(i / W);
    const auto c = static_cast<std::ptrdiff_t>(i % W);
    for (std::ptrdiff_t dr = -1; dr <= 1; ++dr) {
      for (std::ptrdiff_t dc = -1; dc <= 1; ++dc) {
        const auto rr = r + dr, cc = c + dc;
        if ((dr == 0 && dc == 0) || rr < 0 || cc < 0 ||
            rr >= static_cast<std::ptrdiff_t>(H) || cc >= static_cast<std::ptrdiff_t>(W)) {
          continue;
        }
        const auto j = static_cast<std::size_t>(rr) * W + static_cast<std::size_t>(cc);
        if (!out.storage()[j] && nms.storage()[j] && g.magnitude.storage()[j] >= lo) {
          out.storage()[j] = 1;
          work.push_back(j);
        }
      }
    }
  }
  return out;
}

/// Gaussian blur, Sobel gradients, NMS, then hysteresis at fractions of the
/// maximum magnitude.
template <typename Tag>
EdgeMap canny(const Raster<double, Tag>& img, const CannyParams& p) {
  p.validate();
  const auto g = sobel(gaussian_filter(img, p.sigma));
  return hysteresis(g, non_max_suppression(g), p.low, p.high);
}

}  // namespace lidar_edge

#endif  // LIDAR_EDGE_CLASSICAL_HPP_
