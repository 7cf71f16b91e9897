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

#ifndef LIDAR_EDGE_PATCH_NET_HPP_
#define LIDAR_EDGE_PATCH_NET_HPP_

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "lidar_edge/error.hpp"
#include "lidar_edge/layers.hpp"
#include "lidar_edge/raster.hpp"
#include "lidar_edge/rng.hpp"
#include "lidar_edge/tensor.hpp"

namespace lidar_edge::nn {

inline constexpr std::size_t kPatchSize = 28;

// LeNet-style chain: 28 -conv5-> 24 -pool-> 12 -conv5-> 8 -pool-> 4.
struct PatchArch {
  std::size_t conv1_channels = 8;
  std::size_t conv2_channels = 16;
  std::size_t hidden = 64;

  std::size_t flat_length() const noexcept { return 16 * conv2_channels; }

  void validate() const {
    if (conv1_channels == 0 || conv2_channels == 0 || hidden == 0) {
      throw ParameterError("patch net: layer widths must be >= 1");
    }
  }
  friend bool operator==(const PatchArch&, const PatchArch&) = default;
};

struct PatchNetParams {
  PatchArch arch;
  ConvLayerParams conv1;
  ConvLayerParams conv2;
  DenseParams fc1;
  DenseParams fc2;
  double dropout_rate = 0.5;

  static PatchNetParams zeros(const PatchArch& arch, double dropout_rate = 0.5) {
    arch.validate();
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
      throw ParameterError("patch net: dropout rate must be in [0,1)");
    }
    PatchNetParams p;
    p.arch = arch;
    p.conv1 = ConvLayerParams(arch.conv1_channels, 1, 5, Padding::kValid);
    p.conv2 = ConvLayerParams(arch.conv2_channels, arch.conv1_channels, 5, Padding::kValid);
    p.fc1 = DenseParams(arch.hidden, arch.flat_length());
    p.fc2 = DenseParams(1, arch.hidden);
    p.dropout_rate = dropout_rate;
    return p;
  }

  template <typename Self, typename F>
  static void visit(Self& self, F&& f) {
    f(std::string("conv1.weight"), self.conv1.weight);
    f(std::string("conv1.bias"), self.conv1.bias);
    f(std::string("conv2.weight"), self.conv2.weight);
    f(std::string("conv2.bias"), self.conv2.bias);
    f(std::string("fc1.weight"), self.fc1.weight);
    f(std::string("fc1.bias"), self.fc1.bias);
    f(std::string("fc2.weight"), self.fc2.weight);
    f(std::string("fc2.bias"), self.fc2.bias);
  }
  template <typename F>
  void for_each_tensor(F&& f) {
    visit(*this, std::forward<F>(f));
  }
  template <typename F>
  void for_each_tensor(F&& f) const {
    visit(*this, std::forward<F>(f));
  }

  friend bool operator==(const PatchNetParams&, const PatchNetParams&) = default;
};

struct PatchTrace {
  Tensor input;
  Tensor a1;  // conv1 + ReLU, (c1, 24, 24)
  PoolResult p1;
  Tensor a2;  // conv2 + ReLU, (c2, 8, 8)
  PoolResult p2;
  std::vector<double> h;     // fc1 + ReLU + dropout
  std::vector<double> mask;  // dropout scale per hidden unit (0 or 1/(1-rate))
  double logit = 0.0;
  double prob = 0.5;
};

/// Full forward pass keeping activations. Dropout is drawn from SplitMix64(seed)
/// only when train_mode is set.
inline PatchTrace forward_patch_trace(const PatchNetParams& p, const Tensor& patch,
                                      bool train_mode, std::uint64_t seed) {
  require_shape(patch, {1, kPatchSize, kPatchSize}, "forward_patch input");
  PatchTrace t;
  t.input = patch;
  t.a1 = conv_forward(patch, p.conv1);
  relu_inplace(t.a1);
  t.p1 = maxpool2x2(t.a1);
  t.a2 = conv_forward(t.p1.out, p.conv2);
  relu_inplace(t.a2);
  t.p2 = maxpool2x2(t.a2);
  t.h = dense_forward(t.p2.out.values(), p.fc1);
  t.mask.assign(t.h.size(), 1.0);
  if (train_mode && p.dropout_rate > 0.0) {
    SplitMix64 g(seed);
    const double keep_scale = 1.0 / (1.0 - p.dropout_rate);
    for (double& m : t.mask) m = g.uniform() < p.dropout_rate ? 0.0 : keep_scale;
  }
  for (std::size_t i = 0; i < t.h.size(); ++i) {
    t.h[i] = (t.h[i] > 0.0 ? t.h[i] : 0.0) * t.mask[i];
  }
  t.logit = dense_forward(t.h, p.fc2)[0];
  t.prob = sigmoid(t.logit);
  return t;
}

/// Edge probability of the patch's center pixel.
inline double forward_patch(const PatchNetParams& p, const Tensor& patch, bool train_mode,
                            std::uint64_t seed) {
  return forward_patch_trace(p, patch, train_mode, seed).prob;
}

/// Fault injection for verifying the gradient checker.
struct PatchBackwardHooks {
  // Negates the gradient conv2 hands back to the first pooling layer.
  bool negate_pool_path = false;
};

/// Accumulates parameter gradients given d loss / d prob.
inline void backward_patch(const PatchNetParams& p, const PatchTrace& t, double d_prob,
                           PatchNetParams& grads, const PatchBackwardHooks& hooks = {}) {
  const double dz = d_prob * t.prob * (1.0 - t.prob);
  auto dh = dense_backward(t.h, p.fc2, std::vector<double>{dz}, grads.fc2);
  for (std::size_t i = 0; i < dh.size(); ++i) {
    dh[i] = t.h[i] > 0.0 ? dh[i] * t.mask[i] : 0.0;
  }
  const auto dflat = dense_backward(t.p2.out.values(), p.fc1, dh, grads.fc1);
  Tensor dp2(t.p2.out.shape(), dflat);
  Tensor da2 = maxpool2x2_backward(dp2, t.p2.argmax, t.a2.shape());
  relu_backward_inplace(t.a2, da2);
  Tensor dp1 = conv_backward(t.p1.out, p.conv2, da2, grads.conv2);
  if (hooks.negate_pool_path) {
    for (double& v : dp1.values()) v = -v;
  }
  Tensor da1 = maxpool2x2_backward(dp1, t.p1.argmax, t.a1.shape());
  relu_backward_inplace(t.a1, da1);
  conv_backward(t.input, p.conv1, da1, grads.conv1, false);
}

/// kPatchSize x kPatchSize window whose center (offset 14) sits on (r, c);
/// out-of-frame samples replicate the border.
template <typename Tag>
Tensor extract_patch(const Raster<double, Tag>& img, std::size_t r, std::size_t c) {
  constexpr auto half = static_cast<std::ptrdiff_t>(kPatchSize / 2);
  Tensor out({1, kPatchSize, kPatchSize});
  for (std::size_t y = 0; y < kPatchSize; ++y) {
    for (std::size_t x = 0; x < kPatchSize; ++x) {
      out.at(0, y, x) = img.clamped(static_cast<std::ptrdiff_t>(r + y) - half,
                                    static_cast<std::ptrdiff_t>(c + x) - half);
    }
  }
  return out;
}

/// Sliding-window detection: one patch forward per pixel.
template <typename Tag>
ProbMap detect_patch(const PatchNetParams& p, const Raster<double, Tag>& img) {
  ProbMap out(img.height(), img.width(), 0.0);
  for (std::size_t r = 0; r < img.height(); ++r) {
    for (std::size_t c = 0; c < img.width(); ++c) {
      out(r, c) = forward_patch(p, extract_patch(img, r, c), false, 0);
    }
  }
  return out;
}

}  // namespace lidar_edge::nn

#endif  // LIDAR_EDGE_PATCH_NET_HPP_
