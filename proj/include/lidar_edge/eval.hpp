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

#ifndef LIDAR_EDGE_EVAL_HPP_
#define LIDAR_EDGE_EVAL_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <span>
#include <string>
#include <vector>

#include "lidar_edge/error.hpp"
#include "lidar_edge/raster.hpp"

namespace lidar_edge {

struct ConfusionMatrix {
  std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;

  std::uint64_t total() const noexcept { return tp + fp + fn + tn; }
  ConfusionMatrix& operator+=(const ConfusionMatrix& o) noexcept {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    tn += o.tn;
    return *this;
  }
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

/**
 * Pixel counts of pred against truth. With tolerance r > 0 a prediction is a
 * true positive when it can be paired with a distinct truth pixel within
 * Chebyshev distance r. Pairing is greedy in two row-major passes: first every
 * exact coincidence, then each remaining prediction takes the nearest free
 * truth pixel (ties to the first in row-major order).
 */
inline ConfusionMatrix confusion(const EdgeMap& pred, const EdgeMap& truth, int tolerance = 0) {
  require_same_shape(pred, truth, "confusion");
  if (tolerance < 0) throw ParameterError("confusion tolerance must be >= 0");
  ConfusionMatrix cm;
  const auto& p = pred.storage();
  const auto& t = truth.storage();
  if (tolerance == 0) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      const bool a = p[i] != 0, b = t[i] != 0;
      if (a && b) ++cm.tp;
      else if (a) ++cm.fp;
      else if (b) ++cm.fn;
      else ++cm.tn;
    }
    return cm;
  }
  const auto H = static_cast<std::ptrdiff_t>(pred.height());
  const auto W = static_cast<std::ptrdiff_t>(pred.width());
  std::vector<char> pred_done(p.size(), 0), truth_used(t.size(), 0);
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] && t[i]) {
      pred_done[i] = truth_used[i] = 1;
      ++cm.tp;
    }
  }
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!p[i] || pred_done[i]) continue;
    const auto r = static_cast<std::ptrdiff_t>(i) / W, c = static_cast<std::ptrdiff_t>(i) % W;
    std::ptrdiff_t best = -1, best_d = tolerance + 1;
    for (auto rr = std::max<std::ptrdiff_t>(r - tolerance, 0);
         rr <= std::min<std::ptrdiff_t>(r + tolerance, H - 1); ++rr) {
      for (auto cc = std::max<std::ptrdiff_t>(c - tolerance, 0);
           cc <= std::min<std::ptrdiff_t>(c + tolerance, W - 1); ++cc) {
        const auto j = static_cast<std::size_t>(rr * W + cc);
        if (!t[j] || truth_used[j]) continue;
        const auto d = std::max(std::abs(rr - r), std::abs(cc - c));
        if (d < best_d) {
          best_d = d;
          best = static_cast<std::ptrdiff_t>(j);
        }
      }
    }
    if (best >= 0) {
      truth_used[static_cast<std::size_t>(best)] = 1;
      ++cm.tp;
    } else {
      ++cm.fp;
    }
  }
  std::uint64_t truth_pos = 0;
  for (auto v : t) truth_pos += v != 0;
  cm.fn = truth_pos - cm.tp;
  cm.tn = p.size() - cm.tp - cm.fp - cm.fn;
  return cm;
}

struct MetricsReport {
  std::string algorithm;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double threshold = 0.0;  // binarization threshold, or NaN when not applicable
};

inline double f1_score(double precision, double recall) {
  const double d = precision + recall;
  return d > 0.0 ? 2.0 * precision * recall / d : 0.0;
}

inline MetricsReport metrics(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw ParameterError("metrics of an empty confusion matrix");
  MetricsReport m;
  const auto d = [](std::uint64_t v) { return static_cast<double>(v); };
  m.accuracy = d(cm.tp + cm.tn) / d(cm.total());
  m.precision = cm.tp + cm.fp ? d(cm.tp) / d(cm.tp + cm.fp) : 0.0;
  m.recall = cm.tp + cm.fn ? d(cm.tp) / d(cm.tp + cm.fn) : 0.0;
  m.f1 = f1_score(m.precision, m.recall);
  m.threshold = std::nan("");
  return m;
}

/// Pixels with prob >= t are positive.
inline EdgeMap binarize(const ProbMap& p, double t) {
  EdgeMap out(p.height(), p.width(), 0);
  for (std::size_t i = 0; i < p.size(); ++i) out.storage()[i] = p.storage()[i] >= t ? 1 : 0;
  return out;
}

inline ConfusionMatrix pooled_confusion(std::span<const EdgeMap> preds,
                                        std::span<const EdgeMap> truths, int tolerance = 0) {
  if (preds.size() != truths.size()) throw DimensionError("prediction/truth sets differ in size");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < preds.size(); ++i) cm += confusion(preds[i], truths[i], tolerance);
  return cm;
}

/// n equally spaced thresholds k / (n - 1), listed from 1 down to 0.
inline std::vector<double> threshold_grid(std::size_t n) {
  if (n < 2) throw ParameterError("need at least 2 thresholds");
  std::vector<double> t(n);
  for (std::size_t k = 0; k < n; ++k) {
    t[k] = static_cast<double>(n - 1 - k) / static_cast<double>(n - 1);
  }
  return t;
}

/**
 * Confusion matrix at every grid threshold (descending), pooled over the set.
 * Counts come from one histogram pass: a pixel is positive at threshold t iff
 * prob >= t.
 */
inline std::vector<ConfusionMatrix> threshold_sweep(std::span<const ProbMap> probs,
                                                    std::span<const EdgeMap> truths,
                                                    std::size_t n_thresholds) {
  threshold_grid(n_thresholds);  // validates n
  if (probs.size() != truths.size() || probs.empty()) {
    throw DimensionError("probability and truth sets must be aligned and nonempty");
  }
  const std::size_t n = n_thresholds;
  // bucket[k]: pixels whose highest satisfied grid index (ascending order) is k
  std::vector<std::uint64_t> pos_bucket(n, 0), neg_bucket(n, 0);
  std::uint64_t pos_total = 0, neg_total = 0;
  auto asc = [n](std::size_t a) { return static_cast<double>(a) / static_cast<double>(n - 1); };
  for (std::size_t i = 0; i < probs.size(); ++i) {
    require_same_shape(probs[i], truths[i], "threshold_sweep");
    for (std::size_t k = 0; k < probs[i].size(); ++k) {
      const double p = probs[i].storage()[k];
      const bool y = truths[i].storage()[k] != 0;
      (y ? pos_total : neg_total) += 1;
      if (!(p >= 0.0)) continue;  // negative at every threshold
      auto j = static_cast<std::size_t>(std::min(std::floor(p * static_cast<double>(n - 1)),
                                                 static_cast<double>(n - 1)));
      // Grid values are exact quotients; nudge j so that grid_asc[j] <= p < grid_asc[j+1].
      while (j + 1 < n && asc(j + 1) <= p) ++j;
      while (j > 0 && asc(j) > p) --j;
      (y ? pos_bucket : neg_bucket)[j] += 1;
    }
  }
  std::vector<ConfusionMatrix> out(n);
  std::uint64_t tp = 0, fp = 0;
  for (std::size_t d = 0; d < n; ++d) {
    const std::size_t a = n - 1 - d;  // ascending index of grid[d]
    tp += pos_bucket[a];
    fp += neg_bucket[a];
    out[d] = ConfusionMatrix{tp, fp, pos_total - tp, neg_total - fp};
  }
  return out;
}

struct RocPoint {
  double threshold;
  double tpr;
  double fpr;
};

inline std::vector<RocPoint> roc(std::span<const ProbMap> probs, std::span<const EdgeMap> truths,
                                 std::size_t n_thresholds) {
  const auto grid = threshold_grid(n_thresholds);
  const auto sweep = threshold_sweep(probs, truths, n_thresholds);
  std::vector<RocPoint> out;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const auto& c = sweep[k];
    const double P = static_cast<double>(c.tp + c.fn), N = static_cast<double>(c.fp + c.tn);
    out.push_back({grid[k], P > 0 ? static_cast<double>(c.tp) / P : 0.0,
                   N > 0 ? static_cast<double>(c.fp) / N : 0.0});
  }
  return out;
}

struct ThresholdChoice {
  double threshold = 0.5;
  double f1 = 0.0;
};

/// Argmax of pooled F1 over the grid; ties go to the smaller threshold.
inline ThresholdChoice best_f1_threshold(std::span<const ProbMap> probs,
                                         std::span<const EdgeMap> truths,
                                         std::size_t n_thresholds) {
  const auto grid = threshold_grid(n_thresholds);
  const auto sweep = threshold_sweep(probs, truths, n_thresholds);
  ThresholdChoice best{grid[0], -1.0};
  for (std::size_t k = 0; k < grid.size(); ++k) {  // descending: >= keeps the smaller one
    const double f = metrics(sweep[k]).f1;
    if (f >= best.f1) best = {grid[k], f};
  }
  return best;
}

inline std::string format_fixed(double v, int decimals = 4) {
  if (std::isnan(v)) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

inline std::string comparison_csv(std::span<const MetricsReport> rows) {
  std::string out = "algorithm,accuracy,precision,recall,f1,threshold\n";
  for (const auto& r : rows) {
    out += r.algorithm + "," + format_fixed(r.accuracy) + "," + format_fixed(r.precision) + "," +
           format_fixed(r.recall) + "," + format_fixed(r.f1) + "," + format_fixed(r.threshold) +
           "\n";
  }
  return out;
}

/// Aligned text table in the column order Algorithm, Accuracy, Precision,
/// Recall, F1-score.
inline std::string comparison_table(std::span<const MetricsReport> rows) {
  std::size_t name_w = std::string("Algorithm").size();
  for (const auto& r : rows) name_w = std::max(name_w, r.algorithm.size());
  auto pad = [](std::string s, std::size_t w, bool right) {
    if (s.size() >= w) return s;
    return right ? std::string(w - s.size(), ' ') + s : s + std::string(w - s.size(), ' ');
  };
  const std::vector<std::string> head{"Accuracy", "Precision", "Recall", "F1-score"};
  std::string out = pad("Algorithm", name_w, false);
  for (const auto& h : head) out += "  " + pad(h, 9, true);
  out += "\n";
  for (const auto& r : rows) {
    out += pad(r.algorithm, name_w, false);
    for (double v : {r.accuracy, r.precision, r.recall, r.f1}) {
      out += "  " + pad(format_fixed(v), 9, true);
    }
    out += "\n";
  }
  return out;
}

inline std::string roc_csv(std::span<const RocPoint> pts) {
  std::string out = "threshold,tpr,fpr\n";
  for (const auto& p : pts) {
    out += format_fixed(p.threshold) + "," + format_fixed(p.tpr) + "," + format_fixed(p.fpr) + "\n";
  }
  return out;
}

}  // namespace lidar_edge

#endif  // LIDAR_EDGE_EVAL_HPP_
