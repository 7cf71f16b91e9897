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

#ifndef LIDAR_EDGE_TENSOR_HPP_
#define LIDAR_EDGE_TENSOR_HPP_

#include <algorithm>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "lidar_edge/error.hpp"
#include "lidar_edge/raster.hpp"

namespace lidar_edge::nn {

/// Dense row-major array of doubles. Activations are (C, H, W); conv weights
/// are (out, in, kh, kw).
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0)
      : shape_(std::move(shape)), data_(element_count(shape_), fill) {}

  Tensor(std::initializer_list<std::size_t> shape, double fill = 0.0)
      : Tensor(std::vector<std::size_t>(shape), fill) {}

  Tensor(std::vector<std::size_t> shape, std::vector<double> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != element_count(shape_)) {
      throw DimensionError("tensor data length does not match shape " + shape_string());
    }
  }

  static Tensor zeros_like(const Tensor& t) { return Tensor(t.shape_); }

  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t i) const noexcept { return shape_[i]; }
  const std::vector<std::size_t>& shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return data_.size(); }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }
  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }

  // Rank-3 (C, H, W) access.
  double& at(std::size_t c, std::size_t y, std::size_t x) noexcept {
    return data_[(c * shape_[1] + y) * shape_[2] + x];
  }
  double at(std::size_t c, std::size_t y, std::size_t x) const noexcept {
    return data_[(c * shape_[1] + y) * shape_[2] + x];
  }
  double* plane(std::size_t c) noexcept { return data_.data() + c * shape_[1] * shape_[2]; }
  const double* plane(std::size_t c) const noexcept {
    return data_.data() + c * shape_[1] * shape_[2];
  }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  std::string shape_string() const {
    std::string s = "(";
    for (std::size_t i = 0; i < shape_.size(); ++i) {
      if (i) s += ", ";
      s += std::to_string(shape_[i]);
    }
    return s + ")";
  }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  static std::size_t element_count(const std::vector<std::size_t>& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                           std::multiplies<>());
  }

  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

inline void require_shape(const Tensor& t, const std::vector<std::size_t>& shape,
                          const char* what) {
  if (t.shape() != shape) {
    throw DimensionError(std::string(what) + ": got shape " + t.shape_string() +
                         ", expected " + Tensor(shape).shape_string());
  }
}

/// y += a * x elementwise.
inline void axpy(double a, const Tensor& x, Tensor& y) {
  if (x.shape() != y.shape()) throw DimensionError("axpy shape mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

/// (1, H, W) tensor from a single-channel image.
template <typename Tag>
Tensor from_raster(const Raster<double, Tag>& img) {
  return Tensor({1, img.height(), img.width()}, img.storage());
}

}  // namespace lidar_edge::nn

#endif  // LIDAR_EDGE_TENSOR_HPP_
