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

#ifndef LIDAR_EDGE_CONFIG_HPP_
#define LIDAR_EDGE_CONFIG_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lidar_edge/augment.hpp"
#include "lidar_edge/binary_io.hpp"
#include "lidar_edge/classical.hpp"
#include "lidar_edge/compare.hpp"
#include "lidar_edge/dataset.hpp"
#include "lidar_edge/error.hpp"
#include "lidar_edge/json_fields.hpp"
#include "lidar_edge/lidar.hpp"
#include "lidar_edge/nested_net.hpp"
#include "lidar_edge/patch_net.hpp"
#include "lidar_edge/trainer.hpp"

namespace lidar_edge {

inline constexpr int kConfigVersion = 1;

enum class ModelVariant { kNested, kPatch };

struct DatasetConfig {
  std::size_t n = 280;
  double delta = 0.5;  // meters; range jump that counts as an edge
  std::uint64_t seed = 2026;
  std::array<double, 3> ratios{0.70, 0.15, 0.15};
  ScenePolicy policy;
};

struct ModelConfig {
  ModelVariant variant = ModelVariant::kNested;
  std::vector<std::size_t> widths{8, 16, 32};  // one per stage
  nn::PatchArch patch;
};

struct EvalConfig {
  int tolerance = 0;
  std::size_t n_thresholds = 101;
  std::vector<std::string> detectors{"canny", "sobel", "roberts", "cnn"};
};

struct PathsConfig {
  std::string out_dir = "out";
  std::string model = "model.ledm";              // relative to out_dir
  std::string patch_model = "patch_model.ledm";  // relative to out_dir

  std::filesystem::path out() const { return out_dir; }
  std::filesystem::path dataset() const { return out() / "dataset"; }
  std::filesystem::path manifest() const { return dataset() / "manifest.jsonl"; }
  std::filesystem::path model_path() const { return out() / model; }
  std::filesystem::path patch_model_path() const { return out() / patch_model; }
};

struct Config {
  LidarConfig lidar;
  DatasetConfig dataset;
  ModelConfig model;
  nn::TrainConfig train;
  ClassicalConfig classical;
  EvalConfig eval;
  PathsConfig paths;

  nn::NestedArch nested_arch() const {
    return nn::NestedArch{model.widths.size(), model.widths, lidar.height, lidar.width};
  }

  /// Cross-field checks; raises ConfigError naming the key.
  void validate() const {
    auto wrap = [](const char* section, auto&& fn) {
      try {
        fn();
      } catch (const ParameterError& e) {
        throw ConfigError(std::string(section) + ": " + e.what());
      }
    };
    wrap("lidar", [&] { lidar.validate(); });
    wrap("dataset.policy", [&] { dataset.policy.validate(lidar); });
    if (dataset.n < 1) throw ConfigError("dataset.n must be >= 1");
    if (!(dataset.delta > 0.0)) throw ConfigError("dataset.delta must be > 0");
    double sum = 0.0;
    for (double r : dataset.ratios) {
      if (!(r >= 0.0)) throw ConfigError("dataset.ratios must be nonnegative");
      sum += r;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("dataset.ratios must sum to 1");
    wrap("model", [&] { nested_arch().validate(); });
    wrap("model.patch", [&] { model.patch.validate(); });
    train.validate(model.variant == ModelVariant::kNested ? model.widths.size() : 0);
    wrap("classical.canny", [&] { classical.canny.validate(); });
    for (double t : {classical.sobel_threshold, classical.roberts_threshold}) {
      if (!(t >= 0.0 && t <= 1.0)) throw ConfigError("classical thresholds must be in [0,1]");
    }
    if (eval.tolerance < 0) throw ConfigError("eval.tolerance must be >= 0");
    if (eval.n_thresholds < 2) throw ConfigError("eval.n_thresholds must be >= 2");
    if (paths.out_dir.empty()) throw ConfigError("paths.out_dir must not be empty");
  }
};

inline const char* to_string(ModelVariant v) {
  return v == ModelVariant::kNested ? "nested" : "patch";
}

inline ModelVariant parse_variant(const std::string& s) {
  if (s == "nested") return ModelVariant::kNested;
  if (s == "patch") return ModelVariant::kPatch;
  throw ConfigError("unknown model variant '" + s + "' (expected nested or patch)");
}

inline const char* to_string(LossKind k) { return k == LossKind::kBce ? "bce" : "mse"; }

inline LossKind parse_loss(const std::string& s) {
  if (s == "bce") return LossKind::kBce;
  if (s == "mse") return LossKind::kMse;
  throw ConfigError("unknown loss '" + s + "' (expected bce or mse)");
}

inline Json to_json(const Config& c) {
  Json j;
  j["config_version"] = kConfigVersion;
  auto& l = j["lidar"];
  l["c"] = c.lidar.c;
  l["h_fov"] = c.lidar.h_fov;
  l["v_fov"] = c.lidar.v_fov;
  l["height"] = c.lidar.height;
  l["width"] = c.lidar.width;
  l["max_range"] = c.lidar.max_range;
  l["noise_sigma"] = c.lidar.noise_sigma;
  l["dropout_prob"] = c.lidar.dropout_prob;

  auto& d = j["dataset"];
  d["n"] = c.dataset.n;
  d["delta"] = c.dataset.delta;
  d["seed"] = c.dataset.seed;
  d["ratios"] = c.dataset.ratios;
  auto& p = d["policy"];
  const auto& pol = c.dataset.policy;
  p["min_primitives"] = pol.min_primitives;
  p["max_primitives"] = pol.max_primitives;
  p["kind_weights"] = pol.kind_weights;
  p["disk_radius"] = to_json(pol.disk_radius);
  p["rect_size"] = to_json(pol.rect_size);
  p["primitive_range"] = to_json(pol.primitive_range);
  p["background_range"] = to_json(pol.background_range);
  p["halfplane_margin"] = pol.halfplane_margin;

  auto& m = j["model"];
  m["variant"] = to_string(c.model.variant);
  m["widths"] = c.model.widths;
  m["patch"]["conv1_channels"] = c.model.patch.conv1_channels;
  m["patch"]["conv2_channels"] = c.model.patch.conv2_channels;
  m["patch"]["hidden"] = c.model.patch.hidden;

  auto& t = j["train"];
  const auto& tc = c.train;
  t["epochs"] = tc.epochs;
  t["batch_size"] = tc.batch_size;
  t["optimizer"] = nn::to_string(tc.optimizer.kind);
  t["learning_rate"] = tc.optimizer.learning_rate;
  t["momentum"] = tc.optimizer.momentum;
  t["beta1"] = tc.optimizer.beta1;
  t["beta2"] = tc.optimizer.beta2;
  t["epsilon"] = tc.optimizer.epsilon;
  t["rho"] = tc.optimizer.rho;
  t["loss"] = to_string(tc.loss.kind);
  t["class_balance"] = tc.loss.class_balance;
  t["side_weights"] = tc.loss.side_weights;
  t["patience"] = tc.patience;
  t["seed"] = tc.seed;
  t["threads"] = tc.threads;
  t["dropout_rate"] = tc.dropout_rate;
  t["patches_per_class"] = tc.patches_per_class;

  j["augment"] = to_json(tc.augment);

  auto& cl = j["classical"];
  cl["canny_sigma"] = c.classical.canny.sigma;
  cl["canny_low"] = c.classical.canny.low;
  cl["canny_high"] = c.classical.canny.high;
  cl["sobel_threshold"] = c.classical.sobel_threshold;
  cl["roberts_threshold"] = c.classical.roberts_threshold;
  cl["tune_on_val"] = c.classical.tune_on_val;

  auto& e = j["eval"];
  e["tolerance"] = c.eval.tolerance;
  e["n_thresholds"] = c.eval.n_thresholds;
  e["detectors"] = c.eval.detectors;

  auto& pa = j["paths"];
  pa["out_dir"] = c.paths.out_dir;
  pa["model"] = c.paths.model;
  pa["patch_model"] = c.paths.patch_model;
  return j;
}

/**
 * Parses a config document over the defaults. Every section and key is
 * optional except config_version; unknown keys are errors.
 */
inline Config parse_config(const Json& doc) {
  Config c;
  JsonFields root(doc, "");
  int version = 0;
  if (!root.has("config_version")) throw ConfigError("missing key config_version");
  root.get("config_version", version);
  if (version != kConfigVersion) {
    throw ConfigError("config_version " + std::to_string(version) + " is not supported (expected " +
                      std::to_string(kConfigVersion) + ")");
  }

  root.child("lidar")
      .get("c", c.lidar.c)
      .get("h_fov", c.lidar.h_fov)
      .get("v_fov", c.lidar.v_fov)
      .get("height", c.lidar.height)
      .get("width", c.lidar.width)
      .get("max_range", c.lidar.max_range)
      .get("noise_sigma", c.lidar.noise_sigma)
      .get("dropout_prob", c.lidar.dropout_prob)
      .finish();

  {
    auto d = root.child("dataset");
    std::vector<double> ratios(c.dataset.ratios.begin(), c.dataset.ratios.end());
    d.get("n", c.dataset.n).get("delta", c.dataset.delta).get("seed", c.dataset.seed);
    d.get("ratios", ratios);
    if (ratios.size() != 3) throw ConfigError("dataset.ratios must have 3 entries");
    std::copy(ratios.begin(), ratios.end(), c.dataset.ratios.begin());
    auto& pol = c.dataset.policy;
    std::vector<double> kw(pol.kind_weights.begin(), pol.kind_weights.end());
    d.child("policy")
        .get("min_primitives", pol.min_primitives)
        .get("max_primitives", pol.max_primitives)
        .get("kind_weights", kw)
        .get("disk_radius", pol.disk_radius)
        .get("rect_size", pol.rect_size)
        .get("primitive_range", pol.primitive_range)
        .get("background_range", pol.background_range)
        .get("halfplane_margin", pol.halfplane_margin)
        .finish();
    if (kw.size() != 3) throw ConfigError("dataset.policy.kind_weights must have 3 entries");
    std::copy(kw.begin(), kw.end(), pol.kind_weights.begin());
    d.finish();
  }

  {
    auto m = root.child("model");
    std::string variant = to_string(c.model.variant);
    m.get("variant", variant).get("widths", c.model.widths);
    c.model.variant = parse_variant(variant);
    m.child("patch")
        .get("conv1_channels", c.model.patch.conv1_channels)
        .get("conv2_channels", c.model.patch.conv2_channels)
        .get("hidden", c.model.patch.hidden)
        .finish();
    m.finish();
  }

  {
    auto t = root.child("train");
    auto& tc = c.train;
    std::string opt = nn::to_string(tc.optimizer.kind), loss = to_string(tc.loss.kind);
    // Side weights follow the stage count unless given explicitly.
    tc.loss.side_weights.assign(c.model.widths.size(), 1.0);
    t.get("epochs", tc.epochs)
        .get("batch_size", tc.batch_size)
        .get("optimizer", opt)
        .get("learning_rate", tc.optimizer.learning_rate)
        .get("momentum", tc.optimizer.momentum)
        .get("beta1", tc.optimizer.beta1)
        .get("beta2", tc.optimizer.beta2)
        .get("epsilon", tc.optimizer.epsilon)
        .get("rho", tc.optimizer.rho)
        .get("loss", loss)
        .get("class_balance", tc.loss.class_balance)
        .get("side_weights", tc.loss.side_weights)
        .get("patience", tc.patience)
        .get("seed", tc.seed)
        .get("threads", tc.threads)
        .get("dropout_rate", tc.dropout_rate)
        .get("patches_per_class", tc.patches_per_class)
        .finish();
    tc.optimizer.kind = nn::parse_optimizer(opt);
    tc.loss.kind = parse_loss(loss);
  }

  read_fields(root.child("augment"), c.train.augment);

  root.child("classical")
      .get("canny_sigma", c.classical.canny.sigma)
      .get("canny_low", c.classical.canny.low)
      .get("canny_high", c.classical.canny.high)
      .get("sobel_threshold", c.classical.sobel_threshold)
      .get("roberts_threshold", c.classical.roberts_threshold)
      .get("tune_on_val", c.classical.tune_on_val)
      .finish();

  root.child("eval")
      .get("tolerance", c.eval.tolerance)
      .get("n_thresholds", c.eval.n_thresholds)
      .get("detectors", c.eval.detectors)
      .finish();

  root.child("paths")
      .get("out_dir", c.paths.out_dir)
      .get("model", c.paths.model)
      .get("patch_model", c.paths.patch_model)
      .finish();

  root.finish();
  return c;
}

inline Config load_config(const std::filesystem::path& path) {
  Json doc;
  try {
    doc = Json::parse(io::read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": invalid JSON: " + e.what());
  }
  return parse_config(doc);
}

}  // namespace lidar_edge

#endif  // LIDAR_EDGE_CONFIG_HPP_
