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

#ifndef LIDAR_EDGE_TRAINER_HPP_
#define LIDAR_EDGE_TRAINER_HPP_

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <functional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "lidar_edge/augment.hpp"
#include "lidar_edge/dataset.hpp"
#include "lidar_edge/error.hpp"
#include "lidar_edge/eval.hpp"
#include "lidar_edge/imaging.hpp"
#include "lidar_edge/losses.hpp"
#include "lidar_edge/nested_net.hpp"
#include "lidar_edge/optim.hpp"
#include "lidar_edge/patch_net.hpp"
#include "lidar_edge/rng.hpp"

namespace lidar_edge::nn {

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 8;
  OptimizerConfig optimizer;
  LossConfig loss{LossKind::kBce, false, {1.0, 1.0, 1.0}};
  AugmentSpec augment;
  std::size_t patience = 8;
  std::uint64_t seed = 7;
  std::size_t threads = 0;  // 0 = hardware concurrency
  // Patch variant only.
  double dropout_rate = 0.5;
  std::size_t patches_per_class = 16;  // per image and epoch

  /// `stages` = number of side outputs; 0 skips the side-weight length check.
  void validate(std::size_t stages) const {
    if (epochs < 1) throw ConfigError("train.epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
    if (patience < 1) throw ConfigError("train.patience must be >= 1");
    optimizer.validate();
    if (stages && loss.side_weights.size() != stages) {
      throw ConfigError("train.side_weights: expected " + std::to_string(stages) +
                        " values, got " + std::to_string(loss.side_weights.size()));
    }
    for (double l : loss.side_weights) {
      if (!(l >= 0.0) || !std::isfinite(l)) throw ConfigError("train.side_weights must be >= 0");
    }
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
      throw ConfigError("train.dropout_rate must be in [0,1)");
    }
    if (patches_per_class < 1) throw ConfigError("train.patches_per_class must be >= 1");
    try {
      augment.validate();
    } catch (const ParameterError& e) {
      throw ConfigError(e.what());
    }
  }
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_precision = 0.0;
  double val_recall = 0.0;
  double val_f1 = 0.0;            // at threshold 0.5
  double val_best_threshold = 0.5;
  double val_best_f1 = 0.0;       // at val_best_threshold
  double seconds = 0.0;
};

struct RunLog {
  std::vector<EpochRecord> records;
  std::size_t best_epoch = 0;  // 1-based; 0 before the first epoch ends

  const EpochRecord& best() const { return records.at(best_epoch - 1); }
};

/// Deterministic columns only, so equal seeds give equal bytes.
inline std::string runlog_csv(const RunLog& log) {
  std::string out =
      "epoch,train_loss,val_precision,val_recall,val_f1,val_best_threshold,val_best_f1,"
      "selected\n";
  char buf[256];
  for (const auto& r : log.records) {
    std::snprintf(buf, sizeof buf, "%zu,%.10f,%.6f,%.6f,%.6f,%.4f,%.6f,%d\n", r.epoch,
                  r.train_loss, r.val_precision, r.val_recall, r.val_f1, r.val_best_threshold,
                  r.val_best_f1, r.epoch == log.best_epoch ? 1 : 0);
    out += buf;
  }
  return out;
}

/// Wall-clock seconds per epoch.
inline std::string runlog_timing_csv(const RunLog& log) {
  std::string out = "epoch,seconds\n";
  char buf[64];
  for (const auto& r : log.records) {
    std::snprintf(buf, sizeof buf, "%zu,%.3f\n", r.epoch, r.seconds);
    out += buf;
  }
  return out;
}

/// Network input: the image standardized to zero mean and unit variance.
inline Tensor prepare_input(const GrayImage& img) {
  return from_raster(normalize(img, NormalizeMode::kZScore));
}

inline ForwardTrace predict_nested(const NestedNetParams& p, const GrayImage& img) {
  return forward_nested(p, prepare_input(img));
}

inline ProbMap predict_patch(const PatchNetParams& p, const GrayImage& img) {
  return detect_patch(p, normalize(img, NormalizeMode::kZScore));
}

namespace detail {

inline std::size_t thread_count(std::size_t requested, std::size_t work) {
  std::size_t n = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
  return std::max<std::size_t>(1, std::min(n, work));
}

/// Runs fn(i) for i in [0, n) across threads; results land by index so
/// callers can reduce in a fixed order.
inline void parallel_for(std::size_t n, std::size_t threads,
                         const std::function<void(std::size_t)>& fn) {
  const std::size_t t = thread_count(threads, n);
  if (t <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(t);
  for (std::size_t w = 0; w < t; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += t) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

template <typename Params>
void add_scaled(Params& acc, const Params& g, double scale) {
  auto a = tensor_list(acc);
  const auto b = tensor_list(g);
  for (std::size_t k = 0; k < a.size(); ++k) axpy(scale, *b[k], *a[k]);
}

inline void shuffle(std::vector<std::size_t>& v, SplitMix64& g) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[g.below(i)]);
  }
}

inline void check_finite(double loss, std::size_t epoch, std::size_t batch) {
  if (!std::isfinite(loss)) {
    throw DivergenceError("non-finite training loss at epoch " + std::to_string(epoch) +
                          ", batch " + std::to_string(batch) +
                          "; lower the learning rate or check the inputs");
  }
}

/// Parameters can blow up while the loss that produced the step was finite.
template <typename Params>
void check_finite_params(const Params& p, std::size_t epoch, std::size_t batch) {
  bool ok = true;
  p.for_each_tensor([&](const std::string&, const Tensor& t) { ok = ok && all_finite(t.values()); });
  // A projection from astronomically large weights can leave alpha off the simplex.
  if constexpr (requires { p.alpha; }) ok = ok && on_simplex(p.alpha.values());
  if (!ok) {
    throw DivergenceError("non-finite or infeasible parameters after the update at epoch " +
                          std::to_string(epoch) + ", batch " + std::to_string(batch) +
                          "; lower the learning rate");
  }
}

}  // namespace detail

struct ValidationScore {
  ConfusionMatrix at_half;
  ThresholdChoice best;
};

inline ValidationScore score_probabilities(std::span<const ProbMap> probs,
                                           std::span<const EdgeMap> truths) {
  std::vector<EdgeMap> bin;
  for (const auto& p : probs) bin.push_back(binarize(p, 0.5));
  return {pooled_confusion(bin, truths), best_f1_threshold(probs, truths, 101)};
}

inline ValidationScore validate_nested(const NestedNetParams& p, std::span<const Sample> val,
                                       std::size_t threads = 0) {
  std::vector<ProbMap> probs(val.size());
  std::vector<EdgeMap> truths;
  for (const auto& s : val) truths.push_back(s.label);
  detail::parallel_for(val.size(), threads,
                       [&](std::size_t i) { probs[i] = predict_nested(p, val[i].image).fused; });
  return score_probabilities(probs, truths);
}

/// Selection prefers validation F1 at 0.5; the best-threshold F1 breaks ties
/// (it separates epochs while every probability is still below 0.5).
struct SelectionKey {
  double f1_at_half = -1.0;
  double best_threshold_f1 = -1.0;
};

inline bool better(const EpochRecord& r, const SelectionKey& k) {
  if (r.val_f1 != k.f1_at_half) return r.val_f1 > k.f1_at_half;
  return r.val_best_f1 > k.best_threshold_f1;
}

struct NestedTrainResult {
  NestedNetParams params;  // best validation F1 at threshold 0.5
  RunLog log;
};

/// Observer called after each epoch with the current (not best) parameters.
using EpochHook = std::function<void(const EpochRecord&, const NestedNetParams&)>;

/**
 * Minibatch training of the nested detector. Per epoch: shuffle with
 * SplitMix64(derive_seed(seed, epoch)), draw one augmentation seed per item
 * from the same stream, average per-item gradients in item order, take one
 * optimizer step per batch, then score the validation split. Stops after
 * `patience` epochs without a strictly better selection key.
 */
inline NestedTrainResult train_nested(std::span<const Sample> train, std::span<const Sample> val,
                                      const NestedArch& arch, const TrainConfig& cfg,
                                      const EpochHook& on_epoch = {}) {
  arch.validate();
  cfg.validate(arch.stages);
  if (train.empty() || val.empty()) throw ConfigError("training needs nonempty train and val splits");
  for (const auto& s : train) {
    if (s.image.height() != arch.input_height || s.image.width() != arch.input_width) {
      throw DimensionError("training image size differs from the architecture input");
    }
  }
  NestedNetParams params = init_params(arch, derive_seed(cfg.seed, 0));
  OptimizerState state = make_optimizer_state(params);
  NestedTrainResult res{params, {}};
  SelectionKey best;
  std::size_t since_best = 0;

  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    SplitMix64 g(derive_seed(cfg.seed, epoch));
    detail::shuffle(order, g);
    std::vector<std::uint64_t> aug_seeds(order.size());
    for (auto& s : aug_seeds) s = g.next();

    double loss_sum = 0.0;
    for (std::size_t b0 = 0, batch = 1; b0 < order.size(); b0 += cfg.batch_size, ++batch) {
      const std::size_t bn = std::min(cfg.batch_size, order.size() - b0);
      std::vector<NestedNetParams> grads(bn);
      std::vector<double> losses(bn);
      detail::parallel_for(bn, cfg.threads, [&](std::size_t j) {
        const Sample& s = train[order[b0 + j]];
        const auto aug = sample_and_apply(s.image, s.label, cfg.augment, aug_seeds[b0 + j]);
        const auto trace = forward_nested(params, prepare_input(aug.image));
        auto lg = backward_nested(params, trace, aug.label, cfg.loss);
        losses[j] = lg.loss.value;
        grads[j] = std::move(lg.grads);
      });
      NestedNetParams total = NestedNetParams::zeros(arch);
      double batch_loss = 0.0;
      for (std::size_t j = 0; j < bn; ++j) {
        detail::add_scaled(total, grads[j], 1.0 / static_cast<double>(bn));
        batch_loss += losses[j];
      }
      detail::check_finite(batch_loss, epoch, batch);
      loss_sum += batch_loss;
      optimizer_step(params, total, state, cfg.optimizer);
      detail::check_finite_params(params, epoch, batch);
    }

    const auto score = validate_nested(params, val, cfg.threads);
    const auto m = metrics(score.at_half);
    EpochRecord rec{epoch, loss_sum / static_cast<double>(order.size()), m.precision, m.recall,
                    m.f1, score.best.threshold, score.best.f1,
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()};
    res.log.records.push_back(rec);
    if (better(rec, best)) {
      best = {rec.val_f1, rec.val_best_f1};
      res.params = params;
      res.log.best_epoch = epoch;
      since_best = 0;
    } else {
      ++since_best;
    }
    if (on_epoch) on_epoch(rec, params);
    if (since_best >= cfg.patience) break;
  }
  return res;
}

struct PatchExample {
  std::size_t image = 0;
  std::size_t row = 0;
  std::size_t col = 0;
  bool edge = false;
};

/**
 * Class-balanced patch centers: per image up to k edge and k non-edge pixels,
 * each drawn without replacement from SplitMix64(seed) (edge pool first).
 */
inline std::vector<PatchExample> sample_patch_centers(std::span<const Sample> samples,
                                                      std::size_t k, std::uint64_t seed) {
  std::vector<PatchExample> out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    SplitMix64 g(derive_seed(seed, i));
    const auto& lab = samples[i].label;
    std::vector<std::size_t> pos, neg;
    for (std::size_t j = 0; j < lab.size(); ++j) (lab.storage()[j] ? pos : neg).push_back(j);
    const std::size_t n = std::min({k, pos.size(), neg.size()});
    for (auto* pool : {&pos, &neg}) {
      for (std::size_t t = 0; t < n; ++t) {
        std::swap((*pool)[t], (*pool)[t + g.below(pool->size() - t)]);
        const std::size_t j = (*pool)[t];
        out.push_back({i, j / lab.width(), j % lab.width(), pool == &pos});
      }
    }
  }
  return out;
}

struct PatchTrainResult {
  PatchNetParams params;
  RunLog log;
};

inline double patch_bce(double prob, bool edge, double* d_prob) {
  const double pc = std::clamp(prob, kBceEpsilon, 1.0 - kBceEpsilon);
  if (d_prob) *d_prob = pc == prob ? (edge ? -1.0 / pc : 1.0 / (1.0 - pc)) : 0.0;
  return edge ? -std::log(pc) : -std::log(1.0 - pc);
}

/**
 * Trains the patch classifier on balanced patch sets. Augmentation is not
 * applied (patches are cut from the stored images). Validation scores a fixed
 * balanced patch set drawn from the val split; threshold fields report the
 * 0.5 operating point.
 */
inline PatchTrainResult train_patch(std::span<const Sample> train, std::span<const Sample> val,
                                    const PatchArch& arch, const TrainConfig& cfg) {
  arch.validate();
  cfg.validate(0);
  if (train.empty() || val.empty()) throw ConfigError("training needs nonempty train and val splits");
  std::vector<GrayImage> train_in, val_in;
  for (const auto& s : train) train_in.push_back(normalize(s.image, NormalizeMode::kZScore));
  for (const auto& s : val) val_in.push_back(normalize(s.image, NormalizeMode::kZScore));
  const auto val_set = sample_patch_centers(val, cfg.patches_per_class, derive_seed(cfg.seed, 1u << 20));
  if (val_set.empty()) throw ConfigError("validation split has no edge/non-edge pixel pairs");

  PatchNetParams params = init_params(arch, derive_seed(cfg.seed, 0), cfg.dropout_rate);
  OptimizerState state = make_optimizer_state(params);
  PatchTrainResult res{params, {}};
  SelectionKey best;
  std::size_t since_best = 0;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    SplitMix64 g(derive_seed(cfg.seed, epoch));
    auto items = sample_patch_centers(train, cfg.patches_per_class, g.next());
    if (items.empty()) throw ConfigError("training split has no edge/non-edge pixel pairs");
    std::vector<std::size_t> order(items.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    detail::shuffle(order, g);
    std::vector<std::uint64_t> mask_seeds(order.size());
    for (auto& s : mask_seeds) s = g.next();

    double loss_sum = 0.0;
    for (std::size_t b0 = 0, batch = 1; b0 < order.size(); b0 += cfg.batch_size, ++batch) {
      const std::size_t bn = std::min(cfg.batch_size, order.size() - b0);
      std::vector<PatchNetParams> grads(bn, PatchNetParams::zeros(arch, cfg.dropout_rate));
      std::vector<double> losses(bn);
      detail::parallel_for(bn, cfg.threads, [&](std::size_t j) {
        const auto& e = items[order[b0 + j]];
        const auto t = forward_patch_trace(params, extract_patch(train_in[e.image], e.row, e.col),
                                           true, mask_seeds[b0 + j]);
        double d = 0.0;
        losses[j] = patch_bce(t.prob, e.edge, &d);
        backward_patch(params, t, d, grads[j]);
      });
      auto total = PatchNetParams::zeros(arch, cfg.dropout_rate);
      double batch_loss = 0.0;
      for (std::size_t j = 0; j < bn; ++j) {
        detail::add_scaled(total, grads[j], 1.0 / static_cast<double>(bn));
        batch_loss += losses[j];
      }
      detail::check_finite(batch_loss, epoch, batch);
      loss_sum += batch_loss;
      optimizer_step(params, total, state, cfg.optimizer);
      detail::check_finite_params(params, epoch, batch);
    }

    ConfusionMatrix cm;
    for (const auto& e : val_set) {
      const bool pred =
          forward_patch(params, extract_patch(val_in[e.image], e.row, e.col), false, 0) >= 0.5;
      if (pred && e.edge) ++cm.tp;
      else if (pred) ++cm.fp;
      else if (e.edge) ++cm.fn;
      else ++cm.tn;
    }
    const auto m = metrics(cm);
    EpochRecord rec{epoch, loss_sum / static_cast<double>(order.size()), m.precision, m.recall,
                    m.f1, 0.5, m.f1,
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()};
    res.log.records.push_back(rec);
    if (better(rec, best)) {
      best = {rec.val_f1, rec.val_best_f1};
      res.params = params;
      res.log.best_epoch = epoch;
      since_best = 0;
    } else {
      ++since_best;
    }
    if (since_best >= cfg.patience) break;
  }
  return res;
}

}  // namespace lidar_edge::nn

#endif  // LIDAR_EDGE_TRAINER_HPP_
