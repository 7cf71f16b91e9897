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

#ifndef LIDAR_EDGE_LOSSES_HPP_
#define LIDAR_EDGE_LOSSES_HPP_

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "lidar_edge/error.hpp"
#include "lidar_edge/raster.hpp"

namespace lidar_edge {

/// Probabilities are clamped to [eps, 1 - eps] before taking logs.
inline constexpr double kBceEpsilon = 1e-7;

struct LossResult {
  double value = 0.0;
  std::vector<double> grad;  // d value / d pred, row-major
};

/**
 * Mean binary cross-entropy. With class balancing, positives are weighted by
 * the negative fraction and negatives by the positive fraction of this label
 * map; all-positive or all-negative maps fall back to unit weights.
 */
inline LossResult bce_loss(const ProbMap& pred, const EdgeMap& label, bool class_balance) {
  require_same_shape(pred, label, "bce_loss");
  const std::size_t n = pred.size();
  double w_pos = 1.0, w_neg = 1.0;
  if (class_balance) {
    const auto pos = static_cast<double>(count_edges(label));
    const double total = static_cast<double>(n);
    if (pos > 0.0 && pos < total) {
      w_pos = (total - pos) / total;
      w_neg = pos / total;
    }
  }
  LossResult out{0.0, std::vector<double>(n, 0.0)};
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double p = pred.storage()[i];
    const double pc = std::clamp(p, kBceEpsilon, 1.0 - kBceEpsilon);
    const bool inside = pc == p;
    if (label.storage()[i]) {
      out.value -= w_pos * std::log(pc);
      if (inside) out.grad[i] = -w_pos / pc * inv_n;
    } else {
      out.value -= w_neg * std::log(1.0 - pc);
      if (inside) out.grad[i] = w_neg / (1.0 - pc) * inv_n;
    }
  }
  out.value *= inv_n;
  return out;
}

inline LossResult mse_loss(const ProbMap& pred, const EdgeMap& label) {
  require_same_shape(pred, label, "mse_loss");
  const std::size_t n = pred.size();
  LossResult out{0.0, std::vector<double>(n, 0.0)};
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double d = pred.storage()[i] - static_cast<double>(label.storage()[i]);
    out.value += d * d;
    out.grad[i] = 2.0 * d * inv_n;
  }
  out.value *= inv_n;
  return out;
}

enum class LossKind { kBce, kMse };

struct LossConfig {
  LossKind kind = LossKind::kBce;
  bool class_balance = true;
  std::vector<double> side_weights{1.0, 1.0, 1.0};  // one lambda per side output
};

inline LossResult pixel_loss(const ProbMap& pred, const EdgeMap& label, const LossConfig& cfg) {
  return cfg.kind == LossKind::kBce ? bce_loss(pred, label, cfg.class_balance)
                                    : mse_loss(pred, label);
}

struct TotalLoss {
  double value = 0.0;
  std::vector<double> side_terms;  // unweighted per-side losses
  double fuse_term = 0.0;
  std::vector<std::vector<double>> d_sides;  // d value / d side map, lambda applied
  std::vector<double> d_fused;
};

/// L = sum_i lambda_i * loss(side_i, Y) + loss(fused, Y).
inline TotalLoss total_loss(std::span<const ProbMap> sides, const ProbMap& fused,
                            const EdgeMap& label, const LossConfig& cfg) {
  if (cfg.side_weights.size() != sides.size()) {
    throw ConfigError("side loss weights: expected " + std::to_string(sides.size()) +
                      " values, got " + std::to_string(cfg.side_weights.size()));
  }
  TotalLoss t;
  for (std::size_t i = 0; i < sides.size(); ++i) {
    const double lambda = cfg.side_weights[i];
    if (!(lambda >= 0.0)) throw ConfigError("side loss weights must be >= 0");
    auto r = pixel_loss(sides[i], label, cfg);
    t.side_terms.push_back(r.value);
    t.value += lambda * r.value;
    for (double& g : r.grad) g *= lambda;
    t.d_sides.push_back(std::move(r.grad));
  }
  auto f = pixel_loss(fused, label, cfg);
  t.fuse_term = f.value;
  t.value += f.value;
  t.d_fused = std::move(f.grad);
  return t;
}

}  // namespace lidar_edge

#endif  // LIDAR_EDGE_LOSSES_HPP_
