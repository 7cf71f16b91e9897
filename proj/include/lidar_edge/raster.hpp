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

#ifndef LIDAR_EDGE_RASTER_HPP_
#define LIDAR_EDGE_RASTER_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lidar_edge/error.hpp"

namespace lidar_edge {

/// Closed range [lo, hi] used for sampled parameters.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool ordered() const noexcept { return std::isfinite(lo) && std::isfinite(hi) && lo <= hi; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

struct GrayTag {};
struct ProbTag {};
struct EdgeTag {};

/**
 * Row-major single-channel raster. The tag parameter makes intensity images,
 * probability maps and binary edge maps distinct types even though two of them
 * share a pixel type.
 */
template <typename T, typename Tag>
class Raster {
 public:
  using value_type = T;

  Raster() = default;

  Raster(std::size_t height, std::size_t width, T fill = T{})
      : height_(height), width_(width), data_(height * width, fill) {
    if (height == 0 || width == 0) {
      throw DimensionError("raster dimensions must be positive, got " +
                           std::to_string(height) + "x" +
                           std::to_string(width));
    }
  }

  Raster(std::size_t height, std::size_t width, std::vector<T> data)
      : height_(height), width_(width), data_(std::move(data)) {
    if (height == 0 || width == 0) {
      throw DimensionError("raster dimensions must be positive");
    }
    if (data_.size() != height * width) {
      throw DimensionError("raster data length " +
                           std::to_string(data_.size()) + " != " +
                           std::to_string(height) + "x" +
                           std::to_string(width));
    }
  }

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(std::size_t r, std::size_t c) noexcept {
    return data_[r * width_ + c];
  }
  const T& operator()(std::size_t r, std::size_t c) const noexcept {
    return data_[r * width_ + c];
  }

  /// Replicate-border read for signed coordinates.
  const T& clamped(std::ptrdiff_t r, std::ptrdiff_t c) const noexcept {
    r = std::clamp<std::ptrdiff_t>(r, 0, static_cast<std::ptrdiff_t>(height_) - 1);
    c = std::clamp<std::ptrdiff_t>(c, 0, static_cast<std::ptrdiff_t>(width_) - 1);
    return data_[static_cast<std::size_t>(r) * width_ + static_cast<std::size_t>(c)];
  }

  std::span<T> pixels() noexcept { return data_; }
  std::span<const T> pixels() const noexcept { return data_; }
  std::vector<T>& storage() noexcept { return data_; }
  const std::vector<T>& storage() const noexcept { return data_; }

  bool same_shape(std::size_t h, std::size_t w) const noexcept {
    return height_ == h && width_ == w;
  }
  template <typename U, typename UTag>
  bool same_shape(const Raster<U, UTag>& o) const noexcept {
    return height_ == o.height() && width_ == o.width();
  }

  friend bool operator==(const Raster& a, const Raster& b) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<T> data_;
};

/// Intensities, nominally in [0, 1].
using GrayImage = Raster<double, GrayTag>;
/// Probabilities in [0, 1].
using ProbMap = Raster<double, ProbTag>;
/// Binary labels, 1 = edge.
using EdgeMap = Raster<std::uint8_t, EdgeTag>;

template <typename A, typename B>
void require_same_shape(const A& a, const B& b, const char* what) {
  if (!a.same_shape(b.height(), b.width())) {
    throw DimensionError(std::string(what) + ": shape mismatch " +
                         std::to_string(a.height()) + "x" +
                         std::to_string(a.width()) + " vs " +
                         std::to_string(b.height()) + "x" +
                         std::to_string(b.width()));
  }
}

inline bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(),
                     [](double x) { return std::isfinite(x); });
}

inline void validate(const GrayImage& img) {
  if (!all_finite(img.pixels())) {
    throw ParameterError("GrayImage contains non-finite values");
  }
}

inline void validate(const ProbMap& p) {
  for (double v : p.pixels()) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw ParameterError("ProbMap value outside [0,1]");
    }
  }
}

inline void validate(const EdgeMap& e) {
  for (auto v : e.pixels()) {
    if (v > 1) throw ParameterError("EdgeMap value outside {0,1}");
  }
}

inline std::size_t count_edges(const EdgeMap& e) {
  return static_cast<std::size_t>(
      std::count(e.pixels().begin(), e.pixels().end(), std::uint8_t{1}));
}

template <typename OutTag, typename InTag>
Raster<double, OutTag> retag(const Raster<double, InTag>& in) {
  return Raster<double, OutTag>(in.height(), in.width(), in.storage());
}

/**
 * Center-anchored correlation kernel with odd extents.
 */
class Kernel2D {
 public:
  Kernel2D(std::size_t rows, std::size_t cols, std::vector<double> weights)
      : rows_(rows), cols_(cols), weights_(std::move(weights)) {
    if (rows % 2 == 0 || cols % 2 == 0) {
      throw DimensionError("kernel extents must be odd, got " +
                           std::to_string(rows) + "x" + std::to_string(cols));
    }
    if (weights_.size() != rows * cols) {
      throw DimensionError("kernel weight count does not match extents");
    }
    if (!all_finite(weights_)) {
      throw ParameterError("kernel weights must be finite");
    }
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double operator()(std::size_t r, std::size_t c) const noexcept {
    return weights_[r * cols_ + c];
  }
  std::span<const double> weights() const noexcept { return weights_; }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> weights_;
};

}  // namespace lidar_edge

#endif  // LIDAR_EDGE_RASTER_HPP_
