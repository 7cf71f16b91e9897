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

#ifndef LIDAR_EDGE_NESTED_NET_HPP_
#define LIDAR_EDGE_NESTED_NET_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lidar_edge/error.hpp"
#include "lidar_edge/layers.hpp"
#include "lidar_edge/losses.hpp"
#include "lidar_edge/raster.hpp"
#include "lidar_edge/tensor.hpp"

namespace lidar_edge::nn {

/// Tolerance for the fusion weights' sum-to-one constraint.
inline constexpr double kSimplexTolerance = 1e-9;

struct NestedArch {
  std::size_t stages = 3;
  std::vector<std::size_t> widths{8, 16, 32};
  std::size_t input_height = 64;
  std::size_t input_width = 64;

  std::size_t scale(std::size_t stage) const noexcept { return std::size_t{1} << stage; }

  void validate() const {
    if (stages < 1) throw ParameterError("nested net needs at least one stage");
    if (widths.size() != stages) {
      throw ParameterError("nested net: " + std::to_string(stages) + " stages but " +
                           std::to_string(widths.size()) + " widths");
    }
    for (auto w : widths) {
      if (w == 0) throw ParameterError("nested net: channel widths must be >= 1");
    }
    const std::size_t f = scale(stages - 1);
    if (input_height == 0 || input_width == 0 || input_height % f || input_width % f) {
      throw ParameterError("nested net: input " + std::to_string(input_height) + "x" +
                           std::to_string(input_width) + " not divisible by " +
                           std::to_string(f));
    }
  }

  friend bool operator==(const NestedArch&, const NestedArch&) = default;
};

/// Two 3x3 same-zero convolutions, each followed by ReLU.
struct StageParams {
  ConvLayerParams first;
  ConvLayerParams second;
  friend bool operator==(const StageParams&, const StageParams&) = default;
};

/**
 * Learnable state of the nested detector. Stage s runs at 1 / 2^s of the input
 * resolution; head s is a 1x1 convolution to one logit channel; alpha holds the
 * fusion weights and stays on the probability simplex.
 */
struct NestedNetParams {
  NestedArch arch;
  std::vector<StageParams> stages;
  std::vector<ConvLayerParams> heads;
  Tensor alpha;

  /// All-zero parameters with the layout implied by `arch`.
  static NestedNetParams zeros(const NestedArch& arch) {
    arch.validate();
    NestedNetParams p;
    p.arch = arch;
    std::size_t in = 1;
    for (std::size_t s = 0; s < arch.stages; ++s) {
      const std::size_t w = arch.widths[s];
      p.stages.push_back({ConvLayerParams(w, in, 3, Padding::kSameZero),
                          ConvLayerParams(w, w, 3, Padding::kSameZero)});
      p.heads.emplace_back(1, w, 1, Padding::kSameZero);
      in = w;
    }
    p.alpha = Tensor({arch.stages});
    return p;
  }

  /// Visits every tensor in serialization order with a stable name.
  template <typename Self, typename F>
  static void visit(Self& self, F&& f) {
    for (std::size_t s = 0; s < self.stages.size(); ++s) {
      const std::string pre = "stage" + std::to_string(s + 1);
      f(pre + ".conv1.weight", self.stages[s].first.weight);
      f(pre + ".conv1.bias", self.stages[s].first.bias);
      f(pre + ".conv2.weight", self.stages[s].second.weight);
      f(pre + ".conv2.bias", self.stages[s].second.bias);
    }
    for (std::size_t s = 0; s < self.heads.size(); ++s) {
      const std::string pre = "side" + std::to_string(s + 1);
      f(pre + ".weight", self.heads[s].weight);
      f(pre + ".bias", self.heads[s].bias);
    }
    f(std::string("alpha"), self.alpha);
  }
  template <typename F>
  void for_each_tensor(F&& f) {
    visit(*this, std::forward<F>(f));
  }
  template <typename F>
  void for_each_tensor(F&& f) const {
    visit(*this, std::forward<F>(f));
  }

  friend bool operator==(const NestedNetParams&, const NestedNetParams&) = default;
};

inline bool on_simplex(std::span<const double> w, double tol = kSimplexTolerance) {
  double sum = 0.0;
  for (double v : w) {
    if (!(v >= 0.0) || !std::isfinite(v)) return false;
    sum += v;
  }
  return std::abs(sum - 1.0) <= tol;
}

/// Euclidean projection onto {w >= 0, sum w = 1} (sort-and-threshold).
inline void project_to_simplex(std::span<double> w) {
  if (w.empty()) return;
  std::vector<double> u(w.begin(), w.end());
  std::sort(u.begin(), u.end(), std::greater<>());
  double css = 0.0, theta = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    css += u[j];
    const double t = (css - 1.0) / static_cast<double>(j + 1);
    if (u[j] - t > 0.0) theta = t;
  }
  for (double& v : w) v = std::max(v - theta, 0.0);
}

struct SideOutput {
  Tensor logits;  // (1, h, w) at the stage resolution
  ProbMap prob;   // at the input resolution
};

inline SideOutput side_output_with_logits(const Tensor& feature, const ConvLayerParams& head,
                                          std::size_t factor) {
  if (head.out_channels() != 1 || head.kernel() != 1) {
    throw DimensionError("side head must be a 1x1 convolution with one output channel");
  }
  SideOutput out{conv_forward(feature, head), ProbMap()};
  const Tensor up = upsample_nearest(out.logits, factor);
  std::vector<double> prob(up.size());
  for (std::size_t i = 0; i < up.size(); ++i) prob[i] = sigmoid(up[i]);
  out.prob = ProbMap(up.dim(1), up.dim(2), std::move(prob));
  return out;
}

/// sigmoid(upsample(head * feature + b)): one side probability map.
inline ProbMap side_output(const Tensor& feature, const ConvLayerParams& head,
                           std::size_t factor) {
  return side_output_with_logits(feature, head, factor).prob;
}

namespace detail {

inline ProbMap weighted_sum(std::span<const ProbMap> sides, std::span<const double> alpha) {
  if (sides.empty() || sides.size() != alpha.size()) {
    throw ParameterError("fuse_sides: need one weight per side map");
  }
  for (const auto& s : sides) require_same_shape(s, sides[0], "fuse_sides");
  ProbMap out(sides[0].height(), sides[0].width(), 0.0);
  for (std::size_t i = 0; i < sides.size(); ++i) {
    const auto& src = sides[i].storage();
    auto& dst = out.storage();
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += alpha[i] * src[k];
  }
  return out;
}

}  // namespace detail

/// Pixelwise convex combination sum_i alpha_i * side_i.
inline ProbMap fuse_sides(std::span<const ProbMap> sides, std::span<const double> alpha) {
  if (!on_simplex(alpha)) throw ParameterError("fuse_sides: weights are not on the simplex");
  ProbMap out = detail::weighted_sum(sides, alpha);
  // Rounding can push a convex combination an ulp past 1.
  for (double& v : out.pixels()) v = std::min(v, 1.0);
  return out;
}

/// Everything backward_nested needs from a forward pass.
struct ForwardTrace {
  std::vector<Tensor> stage_inputs;  // input to each stage's first conv
  std::vector<Tensor> hidden;        // after first conv + ReLU
  std::vector<Tensor> outputs;       // after second conv + ReLU
  std::vector<std::vector<std::size_t>> pool_argmax;  // [s] pools outputs[s-1]; [0] empty
  std::vector<Tensor> side_logits;
  std::vector<ProbMap> sides;
  ProbMap fused;
};

namespace detail {

// strict = false skips the simplex check on alpha so finite differences can
// probe it off the constraint set.
inline ForwardTrace forward_nested(const NestedNetParams& p, const Tensor& x, bool strict) {
  const auto& a = p.arch;
  require_shape(x, {1, a.input_height, a.input_width}, "forward_nested input");
  if (p.stages.size() != a.stages || p.heads.size() != a.stages ||
      p.alpha.size() != a.stages) {
    throw DimensionError("nested parameters do not match their architecture");
  }
  ForwardTrace t;
  for (std::size_t s = 0; s < a.stages; ++s) {
    if (s == 0) {
      t.stage_inputs.push_back(x);
      t.pool_argmax.emplace_back();
    } else {
      auto pooled = maxpool2x2(t.outputs.back());
      t.stage_inputs.push_back(std::move(pooled.out));
      t.pool_argmax.push_back(std::move(pooled.argmax));
    }
    Tensor h = conv_forward(t.stage_inputs.back(), p.stages[s].first);
    relu_inplace(h);
    Tensor o = conv_forward(h, p.stages[s].second);
    relu_inplace(o);
    t.hidden.push_back(std::move(h));
    t.outputs.push_back(std::move(o));
    auto side = side_output_with_logits(t.outputs.back(), p.heads[s], a.scale(s));
    t.side_logits.push_back(std::move(side.logits));
    t.sides.push_back(std::move(side.prob));
  }
  t.fused = strict ? fuse_sides(t.sides, p.alpha.values())
                   : weighted_sum(t.sides, p.alpha.values());
  return t;
}

}  // namespace detail

/**
 * Forward pass. The network has no stochastic layers, so `train_mode` and
 * `seed` do not change the result; they are accepted for interface parity with
 * the patch classifier.
 */
inline ForwardTrace forward_nested(const NestedNetParams& p, const Tensor& x,
                                   bool train_mode = false, std::uint64_t seed = 0) {
  (void)train_mode;
  (void)seed;
  return detail::forward_nested(p, x, true);
}

/// Loss-gradient inputs for backward: d L / d side_i and d L / d fused, row-major.
struct OutputGrads {
  std::vector<std::vector<double>> d_sides;
  std::vector<double> d_fused;
};

/// Fault injection for verifying the gradient checker.
struct BackwardHooks {
  // Negates the gradient handed from stage s to stage s-1 through the pool.
  bool negate_pool_path = false;
};

/**
 * Reverse-mode pass. Accumulates (+=) into `grads`, which must have the layout
 * of `p`. The alpha gradient is taken with respect to the stored weights; the
 * simplex projection happens later, in the optimizer.
 */
inline void backward_nested(const NestedNetParams& p, const ForwardTrace& t,
                            const OutputGrads& g, NestedNetParams& grads,
                            const BackwardHooks& hooks = {}) {
  const std::size_t S = p.arch.stages;
  if (t.sides.size() != S || g.d_sides.size() != S || t.outputs.size() != S) {
    throw DimensionError("backward_nested: trace does not match the parameters");
  }
  const std::size_t n = t.fused.size();
  if (g.d_fused.size() != n) throw DimensionError("backward_nested: bad fused gradient");

  for (std::size_t s = 0; s < S; ++s) {
    const auto& side = t.sides[s].storage();
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) acc += g.d_fused[k] * side[k];
    grads.alpha[s] += acc;
  }

  Tensor carry;  // gradient w.r.t. outputs[s] arriving from stage s+1
  for (std::size_t si = S; si-- > 0;) {
    const auto& side = t.sides[si].storage();
    if (g.d_sides[si].size() != n) throw DimensionError("backward_nested: bad side gradient");
    Tensor dz_full({1, t.sides[si].height(), t.sides[si].width()});
    const double a = p.alpha[si];
    for (std::size_t k = 0; k < n; ++k) {
      const double dp = g.d_sides[si][k] + a * g.d_fused[k];
      dz_full[k] = dp * side[k] * (1.0 - side[k]);
    }
    const Tensor dz = upsample_nearest_backward(dz_full, p.arch.scale(si));
    Tensor d_out = conv_backward(t.outputs[si], p.heads[si], dz, grads.heads[si]);
    if (si + 1 < S) axpy(1.0, carry, d_out);
    relu_backward_inplace(t.outputs[si], d_out);
    Tensor d_hidden = conv_backward(t.hidden[si], p.stages[si].second, d_out,
                                    grads.stages[si].second);
    relu_backward_inplace(t.hidden[si], d_hidden);
    Tensor d_in = conv_backward(t.stage_inputs[si], p.stages[si].first, d_hidden,
                                grads.stages[si].first, si > 0);
    if (si > 0) {
      carry = maxpool2x2_backward(d_in, t.pool_argmax[si], t.outputs[si - 1].shape());
      if (hooks.negate_pool_path) {
        for (double& v : carry.values()) v = -v;
      }
    }
  }
}

inline TotalLoss total_loss(const ForwardTrace& t, const EdgeMap& label, const LossConfig& cfg) {
  return total_loss(std::span<const ProbMap>(t.sides), t.fused, label, cfg);
}

struct LossAndGrads {
  TotalLoss loss;
  NestedNetParams grads;
};

/// Total loss of one labeled image and its gradient for every parameter.
inline LossAndGrads backward_nested(const NestedNetParams& p, const ForwardTrace& t,
                                    const EdgeMap& label, const LossConfig& cfg,
                                    const BackwardHooks& hooks = {}) {
  LossAndGrads out{total_loss(t, label, cfg), NestedNetParams::zeros(p.arch)};
  backward_nested(p, t, OutputGrads{out.loss.d_sides, out.loss.d_fused}, out.grads, hooks);
  return out;
}

}  // namespace lidar_edge::nn

#endif  // LIDAR_EDGE_NESTED_NET_HPP_
