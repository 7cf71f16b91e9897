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

#ifndef LIDAR_EDGE_OPTIM_HPP_
#define LIDAR_EDGE_OPTIM_HPP_

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "lidar_edge/error.hpp"
#include "lidar_edge/nested_net.hpp"
#include "lidar_edge/patch_net.hpp"
#include "lidar_edge/rng.hpp"
#include "lidar_edge/tensor.hpp"

namespace lidar_edge::nn {

template <typename Params>
std::vector<Tensor*> tensor_list(Params& p) {
  std::vector<Tensor*> out;
  p.for_each_tensor([&](const std::string&, Tensor& t) { out.push_back(&t); });
  return out;
}

template <typename Params>
std::vector<const Tensor*> tensor_list(const Params& p) {
  std::vector<const Tensor*> out;
  p.for_each_tensor([&](const std::string&, const Tensor& t) { out.push_back(&t); });
  return out;
}

template <typename Params>
std::vector<std::string> tensor_names(const Params& p) {
  std::vector<std::string> out;
  p.for_each_tensor([&](const std::string& n, const Tensor&) { out.push_back(n); });
  return out;
}

namespace detail {

inline void fill_uniform(Tensor& t, double bound, SplitMix64& g) {
  for (double& v : t.values()) v = g.uniform(-bound, bound);
}

inline double he_bound(std::size_t fan_in) { return std::sqrt(6.0 / static_cast<double>(fan_in)); }

}  // namespace detail

/**
 * He-uniform conv weights (bound sqrt(6 / fan_in)), zero biases, zero side
 * heads (every side map starts at 0.5), alpha = 1/S. Weights are drawn from
 * SplitMix64(seed) in serialization order.
 */
inline NestedNetParams init_params(const NestedArch& arch, std::uint64_t seed) {
  auto p = NestedNetParams::zeros(arch);
  SplitMix64 g(seed);
  for (auto& st : p.stages) {
    for (ConvLayerParams* c : {&st.first, &st.second}) {
      const std::size_t fan_in = c->in_channels() * c->kernel() * c->kernel();
      detail::fill_uniform(c->weight, detail::he_bound(fan_in), g);
    }
  }
  p.alpha.fill(1.0 / static_cast<double>(arch.stages));
  return p;
}

/// He-uniform for the ReLU-fed layers; fc2 feeds the sigmoid and gets
/// Glorot-uniform (bound sqrt(6 / (fan_in + fan_out))).
inline PatchNetParams init_params(const PatchArch& arch, std::uint64_t seed,
                                  double dropout_rate = 0.5) {
  auto p = PatchNetParams::zeros(arch, dropout_rate);
  SplitMix64 g(seed);
  detail::fill_uniform(p.conv1.weight, detail::he_bound(25), g);
  detail::fill_uniform(p.conv2.weight, detail::he_bound(25 * arch.conv1_channels), g);
  detail::fill_uniform(p.fc1.weight, detail::he_bound(arch.flat_length()), g);
  detail::fill_uniform(p.fc2.weight, std::sqrt(6.0 / static_cast<double>(arch.hidden + 1)), g);
  return p;
}

enum class OptimizerKind { kSgd, kAdam, kRmsprop };

inline const char* to_string(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::kSgd: return "sgd";
    case OptimizerKind::kAdam: return "adam";
    case OptimizerKind::kRmsprop: return "rmsprop";
  }
  return "?";
}

inline OptimizerKind parse_optimizer(const std::string& s) {
  if (s == "sgd") return OptimizerKind::kSgd;
  if (s == "adam") return OptimizerKind::kAdam;
  if (s == "rmsprop") return OptimizerKind::kRmsprop;
  throw ConfigError("unknown optimizer '" + s + "' (expected sgd, adam or rmsprop)");
}

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kAdam;
  double learning_rate = 1e-2;
  double momentum = 0.9;  // sgd
  double beta1 = 0.9;     // adam
  double beta2 = 0.999;
  double epsilon = 1e-8;  // adam and rmsprop
  double rho = 0.9;       // rmsprop

  void validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
      throw ConfigError("learning_rate must be > 0");
    }
    if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must be in [0,1)");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
      throw ConfigError("adam betas must be in [0,1)");
    }
    if (!(rho >= 0.0 && rho < 1.0)) throw ConfigError("rho must be in [0,1)");
    if (!(epsilon > 0.0)) throw ConfigError("epsilon must be > 0");
  }
};

/// Slot tensors mirror the parameter list: velocity (sgd), first and second
/// moments (adam), squared-gradient average (rmsprop, in `second`).
struct OptimizerState {
  std::vector<Tensor> first;
  std::vector<Tensor> second;
  std::uint64_t step = 0;
};

template <typename Params>
OptimizerState make_optimizer_state(const Params& p) {
  OptimizerState s;
  for (const Tensor* t : tensor_list(p)) {
    s.first.push_back(Tensor::zeros_like(*t));
    s.second.push_back(Tensor::zeros_like(*t));
  }
  return s;
}

/// One update. Nested parameters get alpha projected back onto the simplex.
template <typename Params>
void optimizer_step(Params& params, const Params& grads, OptimizerState& st,
                    const OptimizerConfig& cfg) {
  auto ps = tensor_list(params);
  const auto gs = tensor_list(grads);
  if (ps.size() != gs.size() || st.first.size() != ps.size() || st.second.size() != ps.size()) {
    throw DimensionError("optimizer: parameter, gradient and state lists differ");
  }
  ++st.step;
  const double eta = cfg.learning_rate;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(st.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(st.step));
  for (std::size_t k = 0; k < ps.size(); ++k) {
    Tensor& p = *ps[k];
    const Tensor& g = *gs[k];
    Tensor& m = st.first[k];
    Tensor& v = st.second[k];
    if (g.shape() != p.shape() || m.shape() != p.shape()) {
      throw DimensionError("optimizer: shape mismatch at tensor " + std::to_string(k));
    }
    for (std::size_t i = 0; i < p.size(); ++i) {
      switch (cfg.kind) {
        case OptimizerKind::kSgd:
          m[i] = cfg.momentum * m[i] - eta * g[i];
          p[i] += m[i];
          break;
        case OptimizerKind::kAdam: {
          m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
          v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
          const double mh = m[i] / bc1, vh = v[i] / bc2;
          p[i] -= eta * mh / (std::sqrt(vh) + cfg.epsilon);
          break;
        }
        case OptimizerKind::kRmsprop:
          v[i] = cfg.rho * v[i] + (1.0 - cfg.rho) * g[i] * g[i];
          p[i] -= eta * g[i] / (std::sqrt(v[i]) + cfg.epsilon);
          break;
      }
    }
  }
  if constexpr (requires { params.alpha; }) project_to_simplex(params.alpha.values());
}

}  // namespace lidar_edge::nn

#endif  // LIDAR_EDGE_OPTIM_HPP_
