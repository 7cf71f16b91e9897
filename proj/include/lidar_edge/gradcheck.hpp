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

#ifndef LIDAR_EDGE_GRADCHECK_HPP_
#define LIDAR_EDGE_GRADCHECK_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "lidar_edge/losses.hpp"
#include "lidar_edge/nested_net.hpp"
#include "lidar_edge/optim.hpp"
#include "lidar_edge/patch_net.hpp"
#include "lidar_edge/rng.hpp"

namespace lidar_edge::nn {

inline constexpr double kGradCheckStep = 1e-5;
inline constexpr double kGradCheckTolerance = 1e-4;
// Denominator floor: below this magnitude both gradients count as zero-ish and
// the error is effectively absolute.
inline constexpr double kGradCheckFloor = 1e-6;

struct TensorCheck {
  std::string name;
  std::size_t size = 0;
  double max_rel_error = 0.0;
  bool pass = false;
};

struct GradCheckReport {
  std::string model;
  double tolerance = kGradCheckTolerance;
  std::vector<TensorCheck> tensors;

  bool pass() const {
    return std::all_of(tensors.begin(), tensors.end(), [](const auto& t) { return t.pass; });
  }
  double max_rel_error() const {
    double m = 0.0;
    for (const auto& t : tensors) m = std::max(m, t.max_rel_error);
    return m;
  }
};

inline double relative_error(double analytic, double numeric) {
  const double d = std::max({std::abs(analytic), std::abs(numeric), kGradCheckFloor});
  return std::abs(analytic - numeric) / d;
}

/// Compares `grads` with central differences of `loss` over every element of
/// every tensor in `params`.
template <typename Params>
GradCheckReport compare_with_finite_differences(Params params, const Params& grads,
                                                const std::function<double(const Params&)>& loss,
                                                double tolerance, std::string model) {
  GradCheckReport rep{std::move(model), tolerance, {}};
  auto ps = tensor_list(params);
  const auto gs = tensor_list(grads);
  const auto names = tensor_names(params);
  for (std::size_t k = 0; k < ps.size(); ++k) {
    TensorCheck tc{names[k], ps[k]->size(), 0.0, true};
    for (std::size_t i = 0; i < ps[k]->size(); ++i) {
      double& w = (*ps[k])[i];
      const double keep = w;
      w = keep + kGradCheckStep;
      const double up = loss(params);
      w = keep - kGradCheckStep;
      const double down = loss(params);
      w = keep;
      const double numeric = (up - down) / (2.0 * kGradCheckStep);
      const double err = relative_error((*gs[k])[i], numeric);
      if (!(err <= tc.max_rel_error)) tc.max_rel_error = err;  // NaN sticks
    }
    tc.pass = tc.max_rel_error <= tolerance;
    rep.tensors.push_back(tc);
  }
  return rep;
}

namespace detail {

inline void fill_random(Tensor& t, SplitMix64& g, double bound) {
  for (double& v : t.values()) v = g.uniform(-bound, bound);
}

}  // namespace detail

/**
 * Random tiny nested instance: every weight, bias and head uniform in
 * [-0.5, 0.5], alpha a random simplex point, random input and label. The loss
 * is the configured total loss; alpha is probed off the simplex.
 */
inline GradCheckReport grad_check_nested(const NestedArch& arch, std::uint64_t seed,
                                         double tolerance = kGradCheckTolerance,
                                         const BackwardHooks& hooks = {},
                                         const LossConfig& base_cfg = {}) {
  arch.validate();
  if (arch.input_height > 8 || arch.input_width > 8) {
    throw ParameterError("grad_check expects a tiny instance (input <= 8x8)");
  }
  SplitMix64 g(seed);
  auto p = NestedNetParams::zeros(arch);
  p.for_each_tensor([&](const std::string&, Tensor& t) { detail::fill_random(t, g, 0.5); });
  double sum = 0.0;
  for (double& a : p.alpha.values()) sum += (a = 0.1 + g.uniform());
  for (double& a : p.alpha.values()) a /= sum;

  Tensor x({1, arch.input_height, arch.input_width});
  for (double& v : x.values()) v = g.uniform(-1.0, 1.0);
  EdgeMap label(arch.input_height, arch.input_width, 0);
  for (auto& v : label.pixels()) v = g.bernoulli(0.3) ? 1 : 0;
  LossConfig cfg = base_cfg;
  cfg.side_weights.assign(arch.stages, 0.0);
  for (double& l : cfg.side_weights) l = 0.5 + g.uniform();

  const auto trace = detail::forward_nested(p, x, false);
  const auto analytic = backward_nested(p, trace, label, cfg, hooks);
  std::function<double(const NestedNetParams&)> loss = [&](const NestedNetParams& q) {
    return total_loss(detail::forward_nested(q, x, false), label, cfg).value;
  };
  return compare_with_finite_differences(p, analytic.grads, loss, tolerance, "nested");
}

/// Random patch instance in train mode with a fixed dropout mask.
inline GradCheckReport grad_check_patch(const PatchArch& arch, std::uint64_t seed,
                                        double tolerance = kGradCheckTolerance,
                                        const PatchBackwardHooks& hooks = {}) {
  SplitMix64 g(seed);
  auto p = PatchNetParams::zeros(arch, 0.5);
  p.for_each_tensor([&](const std::string&, Tensor& t) { detail::fill_random(t, g, 0.3); });
  Tensor x({1, kPatchSize, kPatchSize});
  for (double& v : x.values()) v = g.uniform(-1.0, 1.0);
  const double y = g.bernoulli(0.5) ? 1.0 : 0.0;
  const std::uint64_t mask_seed = g.next();

  auto loss_of = [&](double prob) {
    const double pc = std::clamp(prob, kBceEpsilon, 1.0 - kBceEpsilon);
    return -(y * std::log(pc) + (1.0 - y) * std::log(1.0 - pc));
  };
  const auto t = forward_patch_trace(p, x, true, mask_seed);
  const double pc = std::clamp(t.prob, kBceEpsilon, 1.0 - kBceEpsilon);
  const double d_prob = pc == t.prob ? (y > 0.5 ? -1.0 / pc : 1.0 / (1.0 - pc)) : 0.0;
  auto grads = PatchNetParams::zeros(arch, 0.5);
  backward_patch(p, t, d_prob, grads, hooks);
  std::function<double(const PatchNetParams&)> loss = [&](const PatchNetParams& q) {
    return loss_of(forward_patch_trace(q, x, true, mask_seed).prob);
  };
  return compare_with_finite_differences(p, grads, loss, tolerance, "patch");
}

/// Default tiny architectures used by the gradcheck command.
inline NestedArch tiny_nested_arch() { return NestedArch{2, {2, 2}, 8, 8}; }
inline PatchArch tiny_patch_arch() { return PatchArch{2, 3, 4}; }

}  // namespace lidar_edge::nn

#endif  // LIDAR_EDGE_GRADCHECK_HPP_
