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

#ifndef LIDAR_EDGE_LIDAR_HPP_
#define LIDAR_EDGE_LIDAR_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

#include "lidar_edge/binary_io.hpp"
#include "lidar_edge/error.hpp"
#include "lidar_edge/raster.hpp"
#include "lidar_edge/rng.hpp"

namespace lidar_edge {

inline constexpr double kSpeedOfLight = 299'792'458.0;  // m/s

/// Round-trip time of flight to one-way distance: d = c * tof / 2.
inline double tof_to_distance(double tof_seconds, double c = kSpeedOfLight) {
  if (!(tof_seconds >= 0.0)) {
    throw ParameterError("time of flight must be >= 0");
  }
  return c * tof_seconds / 2.0;
}

struct LidarConfig {
  double c = kSpeedOfLight;
  double h_fov = std::numbers::pi / 2.0;  // radians
  double v_fov = std::numbers::pi / 6.0;  // radians
  std::size_t height = 64;
  std::size_t width = 64;
  double max_range = 80.0;   // meters
  double noise_sigma = 0.3;  // meters
  double dropout_prob = 0.01;

  void validate() const {
    const bool finite = std::isfinite(c) && std::isfinite(h_fov) &&
                        std::isfinite(v_fov) && std::isfinite(max_range) &&
                        std::isfinite(noise_sigma) && std::isfinite(dropout_prob);
    if (!finite) throw ParameterError("lidar config fields must be finite");
    if (!(max_range > 0.0)) throw ParameterError("max_range must be > 0");
    if (!(noise_sigma >= 0.0)) throw ParameterError("noise_sigma must be >= 0");
    if (!(dropout_prob >= 0.0 && dropout_prob < 1.0)) {
      throw ParameterError("dropout_prob must be in [0, 1)");
    }
    if (height == 0 || width == 0) {
      throw ParameterError("beam grid must be at least 1x1");
    }
    if (!(h_fov > 0.0) || !(v_fov > 0.0)) {
      throw ParameterError("fields of view must be > 0");
    }
  }
};

struct RangeTag {};
using RangeRaster = Raster<double, RangeTag>;

/// Distances along the beam grid. No-return beams carry exactly max_range.
struct RangeImage {
  LidarConfig config;
  RangeRaster ranges;

  std::size_t height() const noexcept { return ranges.height(); }
  std::size_t width() const noexcept { return ranges.width(); }
  double operator()(std::size_t r, std::size_t c) const noexcept {
    return ranges(r, c);
  }
};

// Scene primitives live in beam-grid pixel coordinates: x = column, y = row,
// pixel (r, c) has its center at (c + 0.5, r + 0.5).
struct Disk {
  double cx, cy, radius, range;
};
struct Rect {
  double x0, y0, x1, y1, range;  // covers x0 <= x < x1, y0 <= y < y1
};
struct HalfPlane {
  double px, py, angle, range;  // covers points with (p - anchor) . n > 0
};
using Primitive = std::variant<Disk, Rect, HalfPlane>;

struct Scene {
  std::vector<Primitive> primitives;
  double background_range = 60.0;
};

inline double primitive_range(const Primitive& p) {
  return std::visit([](const auto& q) { return q.range; }, p);
}

inline bool covers(const Primitive& p, double x, double y) {
  return std::visit(
      [&](const auto& q) -> bool {
        using T = std::decay_t<decltype(q)>;
        if constexpr (std::is_same_v<T, Disk>) {
          const double dx = x - q.cx, dy = y - q.cy;
          return dx * dx + dy * dy <= q.radius * q.radius;
        } else if constexpr (std::is_same_v<T, Rect>) {
          return x >= q.x0 && x < q.x1 && y >= q.y0 && y < q.y1;
        } else {
          return std::cos(q.angle) * (x - q.px) + std::sin(q.angle) * (y - q.py) > 0.0;
        }
      },
      p);
}

/**
 * Edge labels from range discontinuities. A pixel is marked when its largest
 * 4-neighbor jump exceeds `delta` and it is the nearer side of that jump.
 * Among equal largest jumps the neighbor with the smaller linear index wins.
 */
inline EdgeMap ground_truth_edges(const RangeRaster& rng, double delta) {
  if (!(delta > 0.0)) throw ParameterError("edge delta must be > 0");
  const std::size_t H = rng.height(), W = rng.width();
  EdgeMap out(H, W, 0);
  for (std::size_t r = 0; r < H; ++r) {
    for (std::size_t c = 0; c < W; ++c) {
      const double v = rng(r, c);
      double best = -1.0;
      double best_range = 0.0;
      // Neighbors in increasing linear index: up, left, right, down.
      auto consider = [&](std::size_t rr, std::size_t cc) {
        const double d = std::abs(v - rng(rr, cc));
        if (d > delta && d > best) {
          best = d;
          best_range = rng(rr, cc);
        }
      };
      if (r > 0) consider(r - 1, c);
      if (c > 0) consider(r, c - 1);
      if (c + 1 < W) consider(r, c + 1);
      if (r + 1 < H) consider(r + 1, c);
      if (best > 0.0 && v < best_range) out(r, c) = 1;
    }
  }
  return out;
}

inline EdgeMap ground_truth_edges(const RangeImage& rng, double delta) {
  return ground_truth_edges(rng.ranges, delta);
}

struct RenderResult {
  RangeImage range;  // with sensor noise and dropout
  EdgeMap edges;     // from the clean ranges
};

/// Smallest range a noisy return may take.
inline constexpr double kMinReturnRange = 1e-3;

/**
 * Rasterizes `scene`: each beam takes the nearest covering primitive, else the
 * background. Labels are derived from the clean raster; then each pixel, in
 * row-major order, receives Gaussian range noise followed by a dropout draw.
 * Both draws happen for every pixel regardless of the configured levels.
 */
inline RenderResult render_scene(const Scene& scene, const LidarConfig& cfg,
                                 std::uint64_t seed, double delta = 0.5) {
  cfg.validate();
  const std::size_t H = cfg.height, W = cfg.width;
  RangeRaster clean(H, W, std::min(scene.background_range, cfg.max_range));
  for (std::size_t r = 0; r < H; ++r) {
    for (std::size_t c = 0; c < W; ++c) {
      const double x = static_cast<double>(c) + 0.5;
      const double y = static_cast<double>(r) + 0.5;
      double best = clean(r, c);
      for (const auto& p : scene.primitives) {
        if (covers(p, x, y)) best = std::min(best, primitive_range(p));
      }
      clean(r, c) = best;
    }
  }
  RenderResult out{RangeImage{cfg, clean}, ground_truth_edges(clean, delta)};
  SplitMix64 g(seed);
  for (double& v : out.range.ranges.pixels()) {
    const double n = g.normal();
    const double u = g.uniform();
    v = std::clamp(v + cfg.noise_sigma * n, kMinReturnRange, cfg.max_range);
    if (u < cfg.dropout_prob) v = cfg.max_range;
  }
  return out;
}

/// Near returns are bright: v = 1 - range / max_range, clamped to [0, 1].
inline GrayImage range_to_intensity(const RangeImage& rng) {
  GrayImage out(rng.height(), rng.width());
  const double m = rng.config.max_range;
  std::transform(rng.ranges.pixels().begin(), rng.ranges.pixels().end(),
                 out.pixels().begin(),
                 [m](double r) { return std::clamp(1.0 - r / m, 0.0, 1.0); });
  return out;
}

struct Point3 {
  double x, y, z;
};
using PointCloud = std::vector<Point3>;

struct BeamAngles {
  double azimuth;
  double elevation;
};

/// Uniform angular grid centered on the optical axis. Column 0 looks left
/// (+azimuth), row 0 looks up (+elevation).
inline BeamAngles beam_angles(const LidarConfig& cfg, std::size_t row,
                              std::size_t col) {
  const double H = static_cast<double>(cfg.height);
  const double W = static_cast<double>(cfg.width);
  return {((W - 1.0) / 2.0 - static_cast<double>(col)) * cfg.h_fov / W,
          ((H - 1.0) / 2.0 - static_cast<double>(row)) * cfg.v_fov / H};
}

inline Point3 spherical_to_cartesian(double r, double azimuth, double elevation) {
  return {r * std::cos(elevation) * std::cos(azimuth),
          r * std::cos(elevation) * std::sin(azimuth), r * std::sin(elevation)};
}

/// One point per returned beam; no-return pixels (range == max_range) are
/// omitted.
inline PointCloud range_image_to_point_cloud(const RangeImage& rng) {
  PointCloud cloud;
  cloud.reserve(rng.ranges.size());
  for (std::size_t r = 0; r < rng.height(); ++r) {
    for (std::size_t c = 0; c < rng.width(); ++c) {
      const double d = rng(r, c);
      if (d >= rng.config.max_range) continue;
      const auto a = beam_angles(rng.config, r, c);
      cloud.push_back(spherical_to_cartesian(d, a.azimuth, a.elevation));
    }
  }
  return cloud;
}

// LRI1: "LRI1", u32 height, u32 width, f32 max_range, then height*width f32
// ranges, all little-endian, row-major.

inline std::vector<char> encode_lri(std::size_t height, std::size_t width,
                                    double max_range,
                                    std::span<const double> values) {
  io::ByteWriter w;
  w.raw("LRI1");
  w.u32(static_cast<std::uint32_t>(height));
  w.u32(static_cast<std::uint32_t>(width));
  w.f32(static_cast<float>(max_range));
  for (double v : values) w.f32(static_cast<float>(v));
  return w.bytes();
}

inline std::vector<char> encode_lri(const RangeImage& rng) {
  return encode_lri(rng.height(), rng.width(), rng.config.max_range,
                    rng.ranges.pixels());
}

/// A ProbMap stored as LRI1 carries max_range = 1.
inline std::vector<char> encode_lri(const ProbMap& p) {
  return encode_lri(p.height(), p.width(), 1.0, p.pixels());
}

inline RangeImage decode_lri(std::span<const char> bytes,
                             LidarConfig base = LidarConfig{}) {
  io::ByteReader<FormatError> rd(bytes);
  if (rd.raw(4) != "LRI1") throw FormatError("LRI1: bad magic");
  const std::uint32_t h = rd.u32();
  const std::uint32_t w = rd.u32();
  const float max_range = rd.f32();
  if (h == 0 || w == 0) throw FormatError("LRI1: zero dimension");
  if (rd.remaining() != static_cast<std::size_t>(h) * w * 4) {
    throw FormatError("LRI1: payload size does not match header");
  }
  std::vector<double> v(static_cast<std::size_t>(h) * w);
  for (double& x : v) x = rd.f32();
  base.height = h;
  base.width = w;
  base.max_range = max_range;
  if (!std::isfinite(base.max_range) || !(base.max_range > 0.0)) {
    throw FormatError("LRI1: max_range must be positive and finite");
  }
  if (!all_finite(v)) throw FormatError("LRI1: non-finite sample");
  return RangeImage{base, RangeRaster(h, w, std::move(v))};
}

inline void write_lri(const std::filesystem::path& path, const RangeImage& r) {
  io::write_file(path, encode_lri(r));
}
inline void write_lri(const std::filesystem::path& path, const ProbMap& p) {
  io::write_file(path, encode_lri(p));
}

inline RangeImage read_lri(const std::filesystem::path& path) {
  const auto bytes = io::read_file(path);
  try {
    return decode_lri(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace lidar_edge

#endif  // LIDAR_EDGE_LIDAR_HPP_
