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

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <set>
#include <vector>

#include "lidar_edge/dataset.hpp"
#include "lidar_edge/losses.hpp"
#include "lidar_edge/model_io.hpp"
#include "lidar_edge/optim.hpp"
#include "lidar_edge/trainer.hpp"
#include "test_util.hpp"

namespace le = lidar_edge;
namespace nn = lidar_edge::nn;
using le::EdgeMap;
using le::ProbMap;
using le::SplitMix64;
using nn::Tensor;

namespace {

le::DatasetManifest manifest_of(std::size_t n) {
  le::DatasetManifest m;
  for (std::size_t i = 0; i < n; ++i) {
    const auto id = le::sample_id(i);
    m.entries.push_back({id, "", "i/" + id + ".pgm", "l/" + id + ".pgm", le::Split::kUnassigned});
  }
  return m;
}

std::array<std::size_t, 3> split_counts(const le::DatasetManifest& m) {
  std::array<std::size_t, 3> c{};
  for (const auto& e : m.entries) {
    EXPECT_NE(e.split, le::Split::kUnassigned);
    if (e.split == le::Split::kTrain) ++c[0];
    if (e.split == le::Split::kVal) ++c[1];
    if (e.split == le::Split::kTest) ++c[2];
  }
  return c;
}

// Small noise-free rectangles rendered through the sensor model.
std::vector<le::Sample> tiny_samples(std::size_t n, std::uint64_t seed) {
  le::LidarConfig cfg;
  cfg.height = cfg.width = 16;
  cfg.noise_sigma = 0.0;
  cfg.dropout_prob = 0.0;
  SplitMix64 g(seed);
  std::vector<le::Sample> out;
  for (std::size_t i = 0; i < n; ++i) {
    le::Scene s;
    const double x0 = g.uniform(1, 7), y0 = g.uniform(1, 7);
    s.primitives.push_back(le::Rect{x0, y0, x0 + g.uniform(4, 8), y0 + g.uniform(4, 8), 10});
    const auto r = le::render_scene(s, cfg, g.next());
    out.push_back({le::range_to_intensity(r.range), r.edges});
  }
  return out;
}

nn::TrainConfig quick_config(std::size_t epochs) {
  nn::TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.batch_size = 2;
  cfg.threads = 2;
  cfg.loss.side_weights = {1.0, 1.0};
  return cfg;
}

const nn::NestedArch kTinyArch{2, {2, 4}, 16, 16};

}  // namespace

// ---- split_dataset

TEST(Split, HundredGivesSeventyFifteenFifteen) {
  const auto m = le::split_dataset(manifest_of(100), {0.70, 0.15, 0.15}, 5);
  EXPECT_EQ(split_counts(m), (std::array<std::size_t, 3>{70, 15, 15}));
  std::set<std::string> ids;
  for (const auto& e : m.entries) ids.insert(e.id);
  EXPECT_EQ(ids.size(), 100u);
}

TEST(Split, HundredOneGivesRemainderToTrain) {
  const auto m = le::split_dataset(manifest_of(101), {0.70, 0.15, 0.15}, 5);
  EXPECT_EQ(split_counts(m), (std::array<std::size_t, 3>{71, 15, 15}));
}

TEST(Split, SingleItem) {
  const auto m = le::split_dataset(manifest_of(1), {1.0, 0.0, 0.0}, 5);
  EXPECT_EQ(split_counts(m), (std::array<std::size_t, 3>{1, 0, 0}));
}

TEST(Split, SizeExactForManyN) {
  for (std::size_t n = 1; n <= 300; ++n) {
    const auto c = split_counts(le::split_dataset(manifest_of(n), {0.70, 0.15, 0.15}, n));
    const auto r = [n](double f) { return static_cast<std::size_t>(std::llround(n * f)); };
    ASSERT_EQ(c[1], r(0.15));
    ASSERT_EQ(c[2], r(0.15));
    ASSERT_EQ(c[0] + c[1] + c[2], n);
  }
}

TEST(Split, SeededAndShuffled) {
  const auto a = le::split_dataset(manifest_of(50), {0.7, 0.15, 0.15}, 1);
  const auto b = le::split_dataset(manifest_of(50), {0.7, 0.15, 0.15}, 1);
  const auto c = le::split_dataset(manifest_of(50), {0.7, 0.15, 0.15}, 2);
  EXPECT_EQ(a.entries, b.entries);
  EXPECT_NE(a.entries, c.entries);
}

TEST(Split, Errors) {
  EXPECT_THROW(le::split_dataset(le::DatasetManifest{}, {0.7, 0.15, 0.15}, 1), le::ParameterError);
  EXPECT_THROW(le::split_dataset(manifest_of(4), {0.7, 0.2, 0.2}, 1), le::ParameterError);
  EXPECT_THROW(le::split_dataset(manifest_of(4), {1.2, -0.1, -0.1}, 1), le::ParameterError);
}

// ---- losses

TEST(Bce, HalfEverywhereIsLnTwo) {
  SplitMix64 g(71);
  const auto r = le::bce_loss(ProbMap(4, 4, 0.5), le::testing::random_edges(4, 4, 0.5, g), false);
  EXPECT_NEAR(r.value, std::log(2.0), 1e-15);
}

TEST(Bce, SaturatedMatchIsNearZero) {
  SplitMix64 g(72);
  const auto lab = le::testing::random_edges(4, 4, 0.5, g);
  ProbMap p(4, 4);
  for (std::size_t i = 0; i < p.size(); ++i) p.storage()[i] = lab.storage()[i] ? 1.0 : 0.0;
  const auto r = le::bce_loss(p, lab, true);
  EXPECT_GE(r.value, 0.0);
  EXPECT_LE(r.value, -std::log(1.0 - le::kBceEpsilon) + 1e-15);
}

TEST(Bce, GradientMatchesFiniteDifferences) {
  SplitMix64 g(73);
  for (bool balance : {false, true}) {
    for (int t = 0; t < 50; ++t) {
      auto p = le::testing::random_prob(4, 4, g);
      for (double& v : p.pixels()) v = 0.05 + 0.9 * v;
      const auto lab = le::testing::random_edges(4, 4, 0.4, g);
      const auto r = le::bce_loss(p, lab, balance);
      for (std::size_t i = 0; i < p.size(); ++i) {
        const double keep = p.storage()[i], h = 1e-6;
        p.storage()[i] = keep + h;
        const double up = le::bce_loss(p, lab, balance).value;
        p.storage()[i] = keep - h;
        const double dn = le::bce_loss(p, lab, balance).value;
        p.storage()[i] = keep;
        ASSERT_LE(std::abs(r.grad[i] - (up - dn) / (2 * h)), 1e-6);
      }
    }
  }
}

TEST(Bce, ClassBalanceWeights) {
  // One positive among four: w+ = 3/4, w- = 1/4.
  const EdgeMap lab(2, 2, std::vector<std::uint8_t>{1, 0, 0, 0});
  const ProbMap p(2, 2, std::vector<double>{0.3, 0.2, 0.4, 0.1});
  const double want = (-0.75 * std::log(0.3) - 0.25 * (std::log(0.8) + std::log(0.6) + std::log(0.9))) / 4;
  EXPECT_NEAR(le::bce_loss(p, lab, true).value, want, 1e-15);
  EXPECT_EQ(le::bce_loss(p, EdgeMap(2, 2, 0), true).value, le::bce_loss(p, EdgeMap(2, 2, 0), false).value);
  EXPECT_ANY_THROW(le::bce_loss(ProbMap(2, 3, 0.5), lab, false));
}

TEST(Mse, ExamplesAndGradient) {
  SplitMix64 g(74);
  const auto lab = le::testing::random_edges(4, 4, 0.5, g);
  ProbMap same(4, 4);
  for (std::size_t i = 0; i < 16; ++i) same.storage()[i] = lab.storage()[i];
  EXPECT_EQ(le::mse_loss(same, lab).value, 0.0);
  EXPECT_EQ(le::mse_loss(ProbMap(1, 1, 0.5), EdgeMap(1, 1, 1)).value, 0.25);
  auto p = le::testing::random_prob(4, 4, g);
  const auto r = le::mse_loss(p, lab);
  for (std::size_t i = 0; i < 16; ++i) {
    const double keep = p.storage()[i], h = 1e-5;
    p.storage()[i] = keep + h;
    const double up = le::mse_loss(p, lab).value;
    p.storage()[i] = keep - h;
    const double dn = le::mse_loss(p, lab).value;
    p.storage()[i] = keep;
    EXPECT_LE(std::abs(r.grad[i] - (up - dn) / (2 * h)), 1e-8);
  }
}

TEST(TotalLoss, ZeroWeightsLeaveFuseTerm) {
  SplitMix64 g(75);
  const std::vector<ProbMap> sides{le::testing::random_prob(4, 4, g), le::testing::random_prob(4, 4, g)};
  const auto fused = le::testing::random_prob(4, 4, g);
  const auto lab = le::testing::random_edges(4, 4, 0.3, g);
  le::LossConfig cfg;
  cfg.side_weights = {0.0, 0.0};
  EXPECT_EQ(le::total_loss(sides, fused, lab, cfg).value, le::bce_loss(fused, lab, true).value);
}

TEST(TotalLoss, SingleSideEqualToFusedIsTwice) {
  SplitMix64 g(76);
  const auto p = le::testing::random_prob(4, 4, g);
  const auto lab = le::testing::random_edges(4, 4, 0.3, g);
  le::LossConfig cfg;
  cfg.side_weights = {1.0};
  const std::vector<ProbMap> sides{p};
  EXPECT_EQ(le::total_loss(sides, p, lab, cfg).value, 2.0 * le::bce_loss(p, lab, true).value);
}

TEST(TotalLoss, TermByTermOnRandomInstances) {
  SplitMix64 g(77);
  for (auto kind : {le::LossKind::kBce, le::LossKind::kMse}) {
    for (int t = 0; t < 100; ++t) {
      std::vector<ProbMap> sides;
      for (int i = 0; i < 3; ++i) sides.push_back(le::testing::random_prob(5, 5, g));
      const auto fused = le::testing::random_prob(5, 5, g);
      const auto lab = le::testing::random_edges(5, 5, 0.3, g);
      le::LossConfig cfg{kind, g.bernoulli(0.5), {g.uniform(0, 2), g.uniform(0, 2), g.uniform(0, 2)}};
      auto one = [&](const ProbMap& p) {
        return kind == le::LossKind::kBce ? le::bce_loss(p, lab, cfg.class_balance).value
                                          : le::mse_loss(p, lab).value;
      };
      double want = one(fused);
      for (int i = 0; i < 3; ++i) want += cfg.side_weights[static_cast<std::size_t>(i)] * one(sides[static_cast<std::size_t>(i)]);
      const auto got = le::total_loss(sides, fused, lab, cfg);
      ASSERT_LE(std::abs(got.value - want), 1e-12);
      ASSERT_GE(got.value, 0.0);
    }
  }
}

TEST(TotalLoss, WrongWeightCountIsConfigError) {
  const std::vector<ProbMap> sides{ProbMap(2, 2, 0.5), ProbMap(2, 2, 0.5)};
  le::LossConfig cfg;
  cfg.side_weights = {1.0, 1.0, 1.0};
  EXPECT_THROW(le::total_loss(sides, ProbMap(2, 2, 0.5), EdgeMap(2, 2, 0), cfg), le::ConfigError);
}

// ---- initialization

TEST(Init, SeededAndSidesStartAtHalf) {
  const auto a = nn::init_params(kTinyArch, 3), b = nn::init_params(kTinyArch, 3);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, nn::init_params(kTinyArch, 4));
  EXPECT_EQ(a.alpha[0], 0.5);
  EXPECT_EQ(a.alpha[1], 0.5);
  SplitMix64 g(78);
  Tensor x({1, 16, 16});
  for (double& v : x.values()) v = g.uniform(-1, 1);
  const auto t = nn::forward_nested(a, x);
  for (const auto& s : t.sides) {
    for (double v : s.pixels()) EXPECT_EQ(v, 0.5);
  }
}

TEST(Init, WeightsWithinHeBound) {
  const nn::NestedArch big{2, {64, 64}, 8, 8};
  const auto p = nn::init_params(big, 9);
  std::size_t draws = 0;
  for (const auto& st : p.stages) {
    for (const auto* c : {&st.first, &st.second}) {
      const double bound = std::sqrt(6.0 / static_cast<double>(c->in_channels() * 9));
      double mx = 0.0;
      for (double w : c->weight.values()) {
        ASSERT_LE(std::abs(w), bound);
        mx = std::max(mx, std::abs(w));
      }
      EXPECT_GT(mx, 0.95 * bound);
      for (double b : c->bias.values()) EXPECT_EQ(b, 0.0);
      draws += c->weight.size();
    }
  }
  EXPECT_GE(draws, 100000u);
  const auto q = nn::init_params(nn::PatchArch{8, 16, 64}, 9);
  for (double w : q.fc1.weight.values()) ASSERT_LE(std::abs(w), std::sqrt(6.0 / 256.0));
  for (double w : q.conv2.weight.values()) ASSERT_LE(std::abs(w), std::sqrt(6.0 / 200.0));
}

// ---- optimizers

TEST(Optimizer, ZeroGradientIsFixedPoint) {
  for (auto kind : {nn::OptimizerKind::kSgd, nn::OptimizerKind::kAdam, nn::OptimizerKind::kRmsprop}) {
    auto p = nn::init_params(kTinyArch, 1);
    const auto before = p;
    const auto zero = nn::NestedNetParams::zeros(kTinyArch);
    auto st = nn::make_optimizer_state(p);
    nn::OptimizerConfig cfg;
    cfg.kind = kind;
    for (int i = 0; i < 3; ++i) nn::optimizer_step(p, zero, st, cfg);
    EXPECT_EQ(p, before) << nn::to_string(kind);
  }
}

namespace {

// A single scalar parameter: the patch net's output bias, with every other
// gradient zero.
struct ScalarStep {
  nn::PatchNetParams params = nn::PatchNetParams::zeros(nn::PatchArch{1, 1, 1});
  nn::PatchNetParams grads = nn::PatchNetParams::zeros(nn::PatchArch{1, 1, 1});
  nn::OptimizerState state = nn::make_optimizer_state(params);

  double step(double p0, double g, const nn::OptimizerConfig& cfg) {
    params.fc2.bias[0] = p0;
    grads.fc2.bias[0] = g;
    nn::optimizer_step(params, grads, state, cfg);
    return params.fc2.bias[0] - p0;
  }
};

}  // namespace

TEST(Optimizer, SgdOneStep) {
  ScalarStep s;
  nn::OptimizerConfig cfg;
  cfg.kind = nn::OptimizerKind::kSgd;
  cfg.learning_rate = 0.1;
  cfg.momentum = 0.0;
  EXPECT_NEAR(s.step(1.0, 2.0, cfg), -0.2, 1e-15);
}

TEST(Optimizer, SgdMomentumAccumulates) {
  ScalarStep s;
  nn::OptimizerConfig cfg;
  cfg.kind = nn::OptimizerKind::kSgd;
  cfg.learning_rate = 0.1;
  cfg.momentum = 0.5;
  EXPECT_NEAR(s.step(0.0, 1.0, cfg), -0.1, 1e-15);
  EXPECT_NEAR(s.step(0.0, 1.0, cfg), -0.15, 1e-15);
}

TEST(Optimizer, AdamFirstStepIsMinusEta) {
  for (double g : {1.0, 3.7, -0.2}) {
    ScalarStep s;
    nn::OptimizerConfig cfg;
    cfg.kind = nn::OptimizerKind::kAdam;
    cfg.learning_rate = 0.01;
    const double d = s.step(0.5, g, cfg);
    // eta * g / (|g| + eps): bias correction cancels at t = 1.
    EXPECT_NEAR(d, -0.01 * g / (std::abs(g) + 1e-8), 1e-15);
  }
}

TEST(Optimizer, RmspropFirstStep) {
  ScalarStep s;
  nn::OptimizerConfig cfg;
  cfg.kind = nn::OptimizerKind::kRmsprop;
  cfg.learning_rate = 0.01;
  const double d = s.step(0.0, 2.0, cfg);
  EXPECT_NEAR(d, -0.01 * 2.0 / (std::sqrt(0.1 * 4.0) + 1e-8), 1e-15);
  EXPECT_EQ(s.state.step, 1u);
}

TEST(Optimizer, AlphaProjectedAfterStepAndShapesChecked) {
  auto p = nn::init_params(kTinyArch, 1);
  auto g = nn::NestedNetParams::zeros(kTinyArch);
  g.alpha[0] = 40.0;
  g.alpha[1] = -40.0;
  auto st = nn::make_optimizer_state(p);
  nn::OptimizerConfig cfg;
  cfg.kind = nn::OptimizerKind::kSgd;
  cfg.learning_rate = 1.0;
  nn::optimizer_step(p, g, st, cfg);
  EXPECT_TRUE(nn::on_simplex(p.alpha.values()));
  EXPECT_EQ(p.alpha[0], 0.0);
  EXPECT_EQ(p.alpha[1], 1.0);
  auto bad = nn::NestedNetParams::zeros(nn::NestedArch{2, {2, 2}, 16, 16});
  EXPECT_THROW(nn::optimizer_step(p, bad, st, cfg), le::DimensionError);
}

TEST(Optimizer, SmallSgdStepsNeverIncreaseLoss) {
  const nn::NestedArch arch{2, {2, 2}, 8, 8};
  SplitMix64 g(79);
  auto p = nn::init_params(arch, 5);
  for (auto& h : p.heads) {
    for (double& w : h.weight.values()) w = g.uniform(-0.5, 0.5);
  }
  Tensor x({1, 8, 8});
  for (double& v : x.values()) v = g.uniform(-1, 1);
  const auto lab = le::testing::random_edges(8, 8, 0.3, g);
  le::LossConfig loss_cfg;
  loss_cfg.side_weights = {1.0, 1.0};
  nn::OptimizerConfig cfg;
  cfg.kind = nn::OptimizerKind::kSgd;
  cfg.learning_rate = 1e-3;
  cfg.momentum = 0.0;
  auto st = nn::make_optimizer_state(p);
  double prev = nn::total_loss(nn::forward_nested(p, x), lab, loss_cfg).value;
  for (int step = 0; step < 20; ++step) {
    const auto res = nn::backward_nested(p, nn::forward_nested(p, x), lab, loss_cfg);
    nn::optimizer_step(p, res.grads, st, cfg);
    const double now = nn::total_loss(nn::forward_nested(p, x), lab, loss_cfg).value;
    ASSERT_LE(now, prev + 1e-9) << "step " << step;
    prev = now;
  }
}

TEST(Optimizer, ParseNames) {
  EXPECT_EQ(nn::parse_optimizer("rmsprop"), nn::OptimizerKind::kRmsprop);
  EXPECT_THROW(nn::parse_optimizer("lbfgs"), le::ConfigError);
}

// ---- training loop

TEST(Train, ZeroEpochsRejected) {
  const auto data = tiny_samples(2, 1);
  EXPECT_THROW(nn::train_nested(data, data, kTinyArch, quick_config(0)), le::ConfigError);
  EXPECT_THROW(nn::train_nested({}, data, kTinyArch, quick_config(1)), le::ConfigError);
}

TEST(Train, OneEpochOnTwoImagesLogsOneRecord) {
  const auto data = tiny_samples(2, 2);
  const auto res = nn::train_nested(data, data, kTinyArch, quick_config(1));
  ASSERT_EQ(res.log.records.size(), 1u);
  EXPECT_EQ(res.log.best_epoch, 1u);
  EXPECT_TRUE(std::isfinite(res.log.records[0].train_loss));
}

TEST(Train, DeterministicAcrossRunsAndThreadCounts) {
  const auto train = tiny_samples(8, 3), val = tiny_samples(3, 4);
  auto cfg = quick_config(3);
  const auto a = nn::train_nested(train, val, kTinyArch, cfg);
  const auto b = nn::train_nested(train, val, kTinyArch, cfg);
  cfg.threads = 1;
  const auto c = nn::train_nested(train, val, kTinyArch, cfg);
  EXPECT_EQ(nn::encode_model(a.params), nn::encode_model(b.params));
  EXPECT_EQ(nn::encode_model(a.params), nn::encode_model(c.params));
  EXPECT_EQ(nn::runlog_csv(a.log), nn::runlog_csv(b.log));
  EXPECT_EQ(nn::runlog_csv(a.log), nn::runlog_csv(c.log));
}

TEST(Train, AlphaStaysOnSimplexEveryEpochAndLossFalls) {
  const auto train = tiny_samples(16, 5), val = tiny_samples(4, 6);
  auto cfg = quick_config(12);
  cfg.patience = 12;
  cfg.augment = le::AugmentSpec{};
  std::size_t seen = 0;
  const auto res = nn::train_nested(train, val, kTinyArch, cfg,
                                    [&](const nn::EpochRecord&, const nn::NestedNetParams& p) {
                                      ++seen;
                                      for (double a : p.alpha.values()) EXPECT_GE(a, 0.0);
                                      EXPECT_TRUE(nn::on_simplex(p.alpha.values()));
                                    });
  EXPECT_EQ(seen, res.log.records.size());
  EXPECT_LT(res.log.records.back().train_loss, res.log.records.front().train_loss);
  EXPECT_TRUE(nn::on_simplex(res.params.alpha.values()));
}

TEST(Train, BestEpochHasHighestSelectionScore) {
  const auto train = tiny_samples(8, 7), val = tiny_samples(3, 8);
  const auto res = nn::train_nested(train, val, kTinyArch, quick_config(5));
  const auto& best = res.log.best();
  for (const auto& r : res.log.records) EXPECT_LE(r.val_f1, best.val_f1);
}

TEST(Train, DivergenceIsReported) {
  const auto data = tiny_samples(4, 9);
  auto cfg = quick_config(3);
  cfg.optimizer.kind = nn::OptimizerKind::kSgd;
  cfg.optimizer.learning_rate = 1e300;
  cfg.optimizer.momentum = 0.0;
  cfg.loss.kind = le::LossKind::kMse;
  EXPECT_THROW(nn::train_nested(data, data, kTinyArch, cfg), le::DivergenceError);
}

TEST(Train, PatchVariantRunsAndIsDeterministic) {
  const auto train = tiny_samples(3, 10), val = tiny_samples(2, 11);
  auto cfg = quick_config(2);
  cfg.patches_per_class = 4;
  const auto a = nn::train_patch(train, val, nn::PatchArch{2, 2, 4}, cfg);
  const auto b = nn::train_patch(train, val, nn::PatchArch{2, 2, 4}, cfg);
  EXPECT_EQ(a.log.records.size(), 2u);
  EXPECT_EQ(a.params, b.params);
}

TEST(RunLog, CsvColumns) {
  nn::RunLog log;
  log.records.push_back({1, 0.5, 0.25, 0.75, 0.375, 0.4, 0.5, 1.25});
  log.best_epoch = 1;
  EXPECT_EQ(nn::runlog_csv(log),
            "epoch,train_loss,val_precision,val_recall,val_f1,val_best_threshold,val_best_f1,selected\n"
            "1,0.5000000000,0.250000,0.750000,0.375000,0.4000,0.500000,1\n");
  EXPECT_EQ(nn::runlog_timing_csv(log), "epoch,seconds\n1,1.250\n");
}

// ---- LEDM persistence

TEST(Ledm, NestedRoundTripIsBitwise) {
  SplitMix64 g(80);
  auto p = nn::init_params(nn::NestedArch{3, {2, 3, 4}, 16, 8}, 2);
  p.for_each_tensor([&](const std::string&, Tensor& t) {
    for (double& v : t.values()) v = g.uniform(-1, 1) * 1e-3 + g.normal();
  });
  le::testing::TempDir dir("ledm");
  nn::save_model(p, dir / "m.ledm");
  EXPECT_EQ(nn::load_model_as<nn::NestedNetParams>(dir / "m.ledm"), p);
  nn::save_model(p, dir / "again.ledm");
  EXPECT_TRUE(le::testing::same_bytes(dir / "m.ledm", dir / "again.ledm"));
  EXPECT_THROW(nn::load_model_as<nn::PatchNetParams>(dir / "m.ledm"), le::ModelFormatError);
}

TEST(Ledm, PatchRoundTripIsBitwise) {
  const auto p = nn::init_params(nn::PatchArch{3, 5, 7}, 4, 0.3);
  const auto back = std::get<nn::PatchNetParams>(nn::decode_model(nn::encode_model(p)));
  EXPECT_EQ(back, p);
  EXPECT_EQ(back.dropout_rate, 0.3);
}

TEST(Ledm, HeaderLayout) {
  const auto p = nn::init_params(nn::NestedArch{2, {3, 5}, 8, 12}, 1);
  const auto bytes = nn::encode_model(p);
  auto u32_at = [&](std::size_t off) {
    std::uint32_t v;
    std::memcpy(&v, bytes.data() + off, 4);
    return v;
  };
  EXPECT_EQ(std::string(bytes.data(), 4), "LEDM");
  EXPECT_EQ(u32_at(4), 1u);   // version
  EXPECT_EQ(u32_at(8), 1u);   // nested
  EXPECT_EQ(u32_at(12), 2u);  // S
  EXPECT_EQ(u32_at(16), 3u);
  EXPECT_EQ(u32_at(20), 5u);
  EXPECT_EQ(u32_at(24), 8u);
  EXPECT_EQ(u32_at(28), 12u);
  EXPECT_EQ(u32_at(32), 4u);  // first tensor rank
  std::size_t expect = 32;
  p.for_each_tensor([&](const std::string&, const Tensor& t) { expect += 4 + 4 * t.rank() + 8 * t.size(); });
  EXPECT_EQ(bytes.size(), expect + 4);
}

TEST(Ledm, CorruptionsRaiseDistinctErrors) {
  const auto good = nn::encode_model(nn::init_params(kTinyArch, 1));
  auto magic = good;
  std::memcpy(magic.data(), "XXXX", 4);
  EXPECT_THROW(nn::decode_model(magic), le::BadMagicError);
  auto version = good;
  version[4] = 2;
  EXPECT_THROW(nn::decode_model(version), le::VersionMismatchError);
  const std::vector<char> truncated(good.begin(), good.begin() + static_cast<long>(good.size() / 2));
  EXPECT_THROW(nn::decode_model(truncated), le::TruncatedFileError);
  auto flipped = good;
  flipped[good.size() / 2] ^= 0x10;
  EXPECT_THROW(nn::decode_model(flipped), le::ChecksumError);
  const std::vector<char> empty;
  EXPECT_THROW(nn::decode_model(empty), le::TruncatedFileError);
}

TEST(Ledm, MissingFileIsIoError) {
  EXPECT_THROW(nn::load_model("/nonexistent/dir/model.ledm"), le::IoError);
}
