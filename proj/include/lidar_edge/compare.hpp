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

#ifndef LIDAR_EDGE_COMPARE_HPP_
#define LIDAR_EDGE_COMPARE_HPP_

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lidar_edge/classical.hpp"
#include "lidar_edge/dataset.hpp"
#include "lidar_edge/error.hpp"
#include "lidar_edge/eval.hpp"
#include "lidar_edge/nested_net.hpp"
#include "lidar_edge/patch_net.hpp"
#include "lidar_edge/trainer.hpp"

namespace lidar_edge {

enum class Detector { kCanny, kSobel, kRoberts, kCnn, kPatchCnn };

inline const char* to_string(Detector d) {
  switch (d) {
    case Detector::kCanny: return "canny";
    case Detector::kSobel: return "sobel";
    case Detector::kRoberts: return "roberts";
    case Detector::kCnn: return "cnn";
    case Detector::kPatchCnn: return "patchcnn";
  }
  return "canny";
}

/// Row label used in the comparison table.
inline const char* display_name(Detector d) {
  switch (d) {
    case Detector::kCanny: return "Canny";
    case Detector::kSobel: return "Sobel";
    case Detector::kRoberts: return "Roberts";
    case Detector::kCnn: return "CNN";
    case Detector::kPatchCnn: return "PatchCNN";
  }
  return "Canny";
}

inline Detector parse_detector(const std::string& s) {
  for (auto d : {Detector::kCanny, Detector::kSobel, Detector::kRoberts, Detector::kCnn,
                 Detector::kPatchCnn}) {
    if (s == to_string(d)) return d;
  }
  throw ConfigError("unknown algorithm '" + s +
                    "' (expected canny, sobel, roberts, cnn or patchcnn)");
}

struct ClassicalConfig {
  CannyParams canny;
  double sobel_threshold = 0.25;   // fraction of the per-image max magnitude
  double roberts_threshold = 0.25;
  bool tune_on_val = true;  // grid-search every threshold on the val split
};

/// Gradient magnitude divided by its per-image maximum (all zero if flat).
inline ProbMap normalized_magnitude(const GradientField& g) {
  ProbMap out(g.magnitude.height(), g.magnitude.width(), 0.0);
  const double mx = g.max_magnitude();
  if (!(mx > 0.0)) return out;
  for (std::size_t i = 0; i < out.size(); ++i) out.storage()[i] = g.magnitude.storage()[i] / mx;
  return out;
}

inline std::vector<double> canny_high_grid() {
  std::vector<double> v;
  for (int k = 1; k <= 19; ++k) v.push_back(k / 20.0);
  return v;
}

inline std::vector<double> canny_ratio_grid() { return {0.2, 0.4, 0.6, 0.8}; }

namespace detail {

struct CannyStage {
  GradientField field;
  EdgeMap nms;
};

inline std::vector<CannyStage> canny_stages(std::span<const Sample> set, double sigma,
                                            std::size_t threads) {
  std::vector<CannyStage> out(set.size());
  nn::detail::parallel_for(set.size(), threads, [&](std::size_t i) {
    auto g = sobel(gaussian_filter(set[i].image, sigma));
    auto nms = non_max_suppression(g);
    out[i] = {std::move(g), std::move(nms)};
  });
  return out;
}

inline std::vector<EdgeMap> truths_of(std::span<const Sample> set) {
  std::vector<EdgeMap> t;
  t.reserve(set.size());
  for (const auto& s : set) t.push_back(s.label);
  return t;
}

}  // namespace detail

/**
 * Canny thresholds maximizing pooled F1 on `val` at fixed sigma: high over
 * canny_high_grid(), low = ratio * high over canny_ratio_grid(). The first
 * strict maximum wins (high ascending, then ratio ascending).
 */
inline CannyParams tune_canny(std::span<const Sample> val, double sigma, int tolerance = 0,
                              std::size_t threads = 0) {
  const auto stages = detail::canny_stages(val, sigma, threads);
  const auto truths = detail::truths_of(val);
  CannyParams best{sigma, 0.1, 0.2};
  double best_f1 = -1.0;
  for (double high : canny_high_grid()) {
    for (double ratio : canny_ratio_grid()) {
      std::vector<ConfusionMatrix> cms(val.size());
      nn::detail::parallel_for(val.size(), threads, [&](std::size_t i) {
        cms[i] = confusion(hysteresis(stages[i].field, stages[i].nms, ratio * high, high),
                           truths[i], tolerance);
      });
      ConfusionMatrix total;
      for (const auto& c : cms) total += c;
      const double f = metrics(total).f1;
      if (f > best_f1) {
        best_f1 = f;
        best = CannyParams{sigma, ratio * high, high};
      }
    }
  }
  return best;
}

struct DetectorModels {
  const nn::NestedNetParams* nested = nullptr;
  const nn::PatchNetParams* patch = nullptr;
};

struct CompareSettings {
  ClassicalConfig classical;
  int tolerance = 0;
  std::size_t n_thresholds = 101;
  std::size_t threads = 0;
};

struct DetectorRoc {
  std::string algorithm;
  std::vector<RocPoint> points;
};

struct Comparison {
  std::vector<MetricsReport> rows;
  std::vector<DetectorRoc> rocs;  // score-map detectors only (not Canny)
};

namespace detail {

/// Score maps for the detectors that produce one.
inline std::vector<ProbMap> score_maps(Detector d, std::span<const Sample> set,
                                       const DetectorModels& models, std::size_t threads) {
  std::vector<ProbMap> out(set.size());
  nn::detail::parallel_for(set.size(), threads, [&](std::size_t i) {
    const auto& img = set[i].image;
    switch (d) {
      case Detector::kSobel: out[i] = normalized_magnitude(sobel(img)); break;
      case Detector::kRoberts: out[i] = normalized_magnitude(roberts(img)); break;
      case Detector::kCnn: out[i] = nn::predict_nested(*models.nested, img).fused; break;
      case Detector::kPatchCnn: out[i] = nn::predict_patch(*models.patch, img); break;
      case Detector::kCanny: throw ParameterError("canny has no score map");
    }
  });
  return out;
}

inline ConfusionMatrix pooled_at(std::span<const ProbMap> maps, std::span<const EdgeMap> truths,
                                 double t, int tolerance, std::size_t threads) {
  std::vector<ConfusionMatrix> cms(maps.size());
  nn::detail::parallel_for(maps.size(), threads, [&](std::size_t i) {
    cms[i] = confusion(binarize(maps[i], t), truths[i], tolerance);
  });
  ConfusionMatrix total;
  for (const auto& c : cms) total += c;
  return total;
}

/// Grid threshold with the best pooled F1 (ties to the smaller threshold).
/// Strict matching reuses the histogram sweep; tolerance matching scans.
inline ThresholdChoice tune_threshold(std::span<const ProbMap> maps,
                                      std::span<const EdgeMap> truths, std::size_t n,
                                      int tolerance, std::size_t threads) {
  if (tolerance == 0) return best_f1_threshold(maps, truths, n);
  ThresholdChoice best{1.0, -1.0};
  for (double t : threshold_grid(n)) {
    const double f = metrics(pooled_at(maps, truths, t, tolerance, threads)).f1;
    if (f >= best.f1) best = {t, f};
  }
  return best;
}

}  // namespace detail

/**
 * One pooled MetricsReport per detector over `test`, in the order given.
 * Thresholds are tuned on `val` when settings.classical.tune_on_val is set;
 * otherwise classical detectors use the configured values and score-map
 * networks use 0.5. The threshold column holds Canny's high threshold or the
 * binarization threshold.
 */
inline Comparison compare_detectors(std::span<const Sample> test, std::span<const Sample> val,
                                    std::span<const Detector> detectors,
                                    const CompareSettings& settings,
                                    const DetectorModels& models = {}) {
  if (detectors.empty()) throw ConfigError("detector list is empty");
  if (test.empty()) throw ConfigError("test split is empty");
  const bool tune = settings.classical.tune_on_val;
  if (tune && val.empty()) throw ConfigError("threshold tuning needs a nonempty val split");
  const auto test_truths = detail::truths_of(test);
  const auto val_truths = detail::truths_of(val);
  const std::size_t th = settings.threads;

  Comparison out;
  for (Detector d : detectors) {
    if (d == Detector::kCnn && !models.nested) throw ConfigError("cnn needs a nested model");
    if (d == Detector::kPatchCnn && !models.patch) throw ConfigError("patchcnn needs a patch model");
    MetricsReport row;
    if (d == Detector::kCanny) {
      const CannyParams p = tune ? tune_canny(val, settings.classical.canny.sigma,
                                              settings.tolerance, th)
                                 : settings.classical.canny;
      p.validate();
      std::vector<ConfusionMatrix> cms(test.size());
      nn::detail::parallel_for(test.size(), th, [&](std::size_t i) {
        cms[i] = confusion(canny(test[i].image, p), test_truths[i], settings.tolerance);
      });
      ConfusionMatrix total;
      for (const auto& c : cms) total += c;
      row = metrics(total);
      row.threshold = p.high;
    } else {
      double t = 0.5;
      if (d == Detector::kSobel && !tune) t = settings.classical.sobel_threshold;
      if (d == Detector::kRoberts && !tune) t = settings.classical.roberts_threshold;
      if (tune) {
        const auto val_maps = detail::score_maps(d, val, models, th);
        t = detail::tune_threshold(val_maps, val_truths, settings.n_thresholds,
                                   settings.tolerance, th)
                .threshold;
      }
      const auto maps = detail::score_maps(d, test, models, th);
      row = metrics(detail::pooled_at(maps, test_truths, t, settings.tolerance, th));
      row.threshold = t;
      out.rocs.push_back({to_string(d), roc(maps, test_truths, settings.n_thresholds)});
    }
    row.algorithm = display_name(d);
    out.rows.push_back(row);
  }
  return out;
}

}  // namespace lidar_edge

#endif  // LIDAR_EDGE_COMPARE_HPP_
