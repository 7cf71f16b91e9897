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
#include <numbers>

#include "lidar_edge/augment.hpp"
#include "test_util.hpp"

namespace le = lidar_edge;
using le::EdgeMap;
using le::GrayImage;
using le::SplitMix64;

namespace {

EdgeMap label_from(std::size_t h, std::size_t w, std::initializer_list<std::pair<int, int>> on) {
  EdgeMap e(h, w, 0);
  for (auto [r, c] : on) e(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = 1;
  return e;
}

le::AugmentSpec everything_on() {
  le::AugmentSpec s;
  s.rotation_prob = s.translation_prob = s.scale_prob = s.shear_prob = 0.7;
  s.photometric_prob = s.noise_prob = s.salt_pepper_prob = s.occlusion_prob = 0.7;
  return s;
}

}  // namespace

TEST(Affine, IdentityIsUnchanged) {
  SplitMix64 g(51);
  const auto img = le::testing::random_image(7, 9, g);
  const auto lab = le::testing::random_edges(7, 9, 0.3, g);
  const auto out = le::affine_transform(img, lab, {});
  EXPECT_EQ(out.image, img);
  EXPECT_EQ(out.label, lab);
}

TEST(Affine, FlipTwiceRestores) {
  SplitMix64 g(52);
  const auto img = le::testing::random_image(8, 6, g);
  const auto lab = le::testing::random_edges(8, 6, 0.3, g);
  le::AffineParams a;
  a.flip_h = true;
  const auto once = le::affine_transform(img, lab, a);
  EXPECT_NE(once.label, lab);
  const auto twice = le::affine_transform(once.image, once.label, a);
  EXPECT_EQ(twice.label, lab);
  EXPECT_LE(le::testing::max_rel_err(twice.image.storage(), img.storage()), 1e-12);
  EXPECT_EQ(once.image(2, 0), img(2, 5));
}

TEST(Affine, QuarterTurnMapsRectangleToTransposedRectangle) {
  // 5x5 grid, center (2, 2). A quarter turn clockwise on screen sends
  // offset (dx, dy) to (-dy, dx).
  const GrayImage img(5, 5, 0.0);
  const auto bar = label_from(5, 5, {{0, 1}, {0, 2}, {0, 3}, {1, 1}, {1, 2}, {1, 3}});
  le::AffineParams a;
  a.angle_deg = 90.0;
  const auto out = le::affine_transform(img, bar, a);
  const auto want = label_from(5, 5, {{1, 3}, {2, 3}, {3, 3}, {1, 4}, {2, 4}, {3, 4}});
  EXPECT_EQ(out.label, want);
}

TEST(Affine, IsolatedPixelLandsNearAnalyticImage) {
  SplitMix64 g(53);
  for (int t = 0; t < 300; ++t) {
    le::AffineParams a;
    a.angle_deg = g.uniform(-15.0, 15.0);
    a.tx = g.uniform(-4.0, 4.0);
    a.ty = g.uniform(-4.0, 4.0);
    a.scale = g.uniform(0.9, 1.1);
    a.shear_x = g.uniform(-0.1, 0.1);
    a.flip_h = g.bernoulli(0.5);
    const int pr = 8 + static_cast<int>(g.below(16)), pc = 8 + static_cast<int>(g.below(16));
    const auto lab = label_from(32, 32, {{pr, pc}});
    const auto out = le::affine_transform(GrayImage(32, 32, 0.0), lab, a);
    // Forward map written out independently: flip, scale, shear, rotate.
    const double th = a.angle_deg * std::numbers::pi / 180.0;
    double x = (pc - 15.5) * (a.flip_h ? -1.0 : 1.0), y = pr - 15.5;
    x *= a.scale;
    y *= a.scale;
    x += a.shear_x * y;
    const double dx = std::cos(th) * x - std::sin(th) * y + 15.5 + a.tx;
    const double dy = std::sin(th) * x + std::cos(th) * y + 15.5 + a.ty;
    // Inverse nearest sampling puts every hit within half a source pixel,
    // pushed forward by the map's norm (< 1.25 here).
    for (std::size_t r = 0; r < 32; ++r) {
      for (std::size_t c = 0; c < 32; ++c) {
        if (out.label(r, c)) {
          ASSERT_LE(std::hypot(static_cast<double>(c) - dx, static_cast<double>(r) - dy),
                    1.25 * 0.5 * std::sqrt(2.0));
        }
      }
    }
    // Pure integer shifts and flips hit exactly the rounded image.
    le::AffineParams b;
    b.tx = std::round(a.tx);
    b.ty = std::round(a.ty);
    b.flip_v = a.flip_h;
    const auto shifted = le::affine_transform(GrayImage(32, 32, 0.0), lab, b);
    const double ey = (b.flip_v ? 31.0 - pr : pr) + b.ty, ex = pc + b.tx;
    ASSERT_EQ(le::count_edges(shifted.label), 1u);
    ASSERT_EQ(shifted.label(static_cast<std::size_t>(ey), static_cast<std::size_t>(ex)), 1);
  }
}

TEST(Affine, OutOfFrameIsZeroAndScaleChecked) {
  SplitMix64 g(54);
  const auto img = le::testing::random_image(6, 6, g);
  le::AffineParams a;
  a.tx = 3.0;
  const auto out = le::affine_transform(img, EdgeMap(6, 6, 1), a);
  for (std::size_t r = 0; r < 6; ++r) {
    for (std::size_t c = 0; c < 3; ++c) {
      EXPECT_EQ(out.image(r, c), 0.0);
      EXPECT_EQ(out.label(r, c), 0);
    }
    EXPECT_EQ(out.image(r, 3), img(r, 0));
  }
  a.scale = 0.0;
  EXPECT_THROW(le::affine_transform(img, EdgeMap(6, 6, 1), a), le::ParameterError);
}

TEST(Noise, ZeroSigmaUnchangedAndSeeded) {
  SplitMix64 g(55);
  const auto img = le::testing::random_image(10, 10, g);
  EXPECT_EQ(le::add_gaussian_noise(img, 0.0, 3), img);
  EXPECT_EQ(le::add_gaussian_noise(img, 0.1, 3), le::add_gaussian_noise(img, 0.1, 3));
  EXPECT_NE(le::add_gaussian_noise(img, 0.1, 3), le::add_gaussian_noise(img, 0.1, 4));
  EXPECT_THROW(le::add_gaussian_noise(img, -0.1, 3), le::ParameterError);
}

TEST(Noise, MeanOfMillionSamplesNearZero) {
  const double sigma = 0.01;
  const GrayImage img(1000, 1000, 0.5);  // 50 sigma from either clamp
  const auto noisy = le::add_gaussian_noise(img, sigma, 2026);
  double sum = 0.0;
  for (std::size_t i = 0; i < img.size(); ++i) sum += noisy.storage()[i] - 0.5;
  EXPECT_LE(std::abs(sum / 1e6), 3.0 * sigma / 1e3);
}

TEST(Noise, ClampsToUnitInterval) {
  const auto noisy = le::add_gaussian_noise(GrayImage(50, 50, 0.99), 0.5, 1);
  for (double v : noisy.pixels()) EXPECT_TRUE(v >= 0.0 && v <= 1.0);
}

TEST(SaltPepper, Endpoints) {
  SplitMix64 g(56);
  const auto img = le::testing::random_image(20, 20, g);
  EXPECT_EQ(le::add_salt_pepper(img, 0.0, 1), img);
  const auto all = le::add_salt_pepper(img, 1.0, 1);
  for (double v : all.pixels()) EXPECT_TRUE(v == 0.0 || v == 1.0);
  EXPECT_THROW(le::add_salt_pepper(img, 1.5, 1), le::ParameterError);
}

TEST(SaltPepper, DensityConcentrates) {
  const auto out = le::add_salt_pepper(GrayImage(1000, 1000, 0.5), 0.1, 77);
  std::size_t hit = 0, white = 0;
  for (double v : out.pixels()) {
    hit += v != 0.5;
    white += v == 1.0;
  }
  EXPECT_NEAR(static_cast<double>(hit) / 1e6, 0.1, 0.003);
  EXPECT_NEAR(static_cast<double>(white) / static_cast<double>(hit), 0.5, 0.01);
}

TEST(Occlude, CountZeroAndFullFrame) {
  SplitMix64 g(57);
  const auto img = le::testing::random_image(12, 12, g);
  const auto lab = le::testing::random_edges(12, 12, 0.4, g);
  const auto same = le::occlude(img, lab, 0, {2, 8}, 5);
  EXPECT_EQ(same.image, img);
  EXPECT_EQ(same.label, lab);
  const auto full = le::occlude(img, lab, 1, {24, 24}, 5);
  for (double v : full.image.pixels()) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(le::count_edges(full.label), 0u);
}

TEST(Occlude, ThreeByThreeAtReplayedPosition) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    // Replay the documented stream: height, width, center row, center column.
    SplitMix64 g(seed);
    g.between(3, 3);
    g.between(3, 3);
    const auto cr = static_cast<std::size_t>(g.below(16));
    const auto cc = static_cast<std::size_t>(g.below(16));
    const auto out = le::occlude(GrayImage(16, 16, 1.0), EdgeMap(16, 16, 1), 1, {3, 3}, seed);
    std::size_t zeros = 0;
    for (std::size_t r = 0; r < 16; ++r) {
      for (std::size_t c = 0; c < 16; ++c) {
        const bool inside = r + 1 >= cr && r <= cr + 1 && c + 1 >= cc && c <= cc + 1;
        ASSERT_EQ(out.image(r, c) == 0.0, inside);
        ASSERT_EQ(out.label(r, c) == 0, inside);
        zeros += out.image(r, c) == 0.0;
      }
    }
    const bool interior = cr >= 1 && cr <= 14 && cc >= 1 && cc <= 14;
    if (interior) {
      ASSERT_EQ(zeros, 9u);
    }
  }
}

TEST(Photometric, Examples) {
  SplitMix64 g(58);
  const auto img = le::testing::random_image(6, 6, g);
  EXPECT_EQ(le::adjust_photometric(img, 1.0, 0.0), img);
  const auto bright = le::adjust_photometric(img, 1.0, 1.0);
  for (double v : bright.pixels()) EXPECT_EQ(v, 1.0);
  EXPECT_EQ(le::adjust_photometric(GrayImage(1, 1, 0.75), 2.0, 0.0)(0, 0), 1.0);
  EXPECT_EQ(le::adjust_photometric(GrayImage(1, 1, 0.6), 2.0, 0.0)(0, 0), 0.5 + 2.0 * (0.6 - 0.5));
  EXPECT_THROW(le::adjust_photometric(img, 0.0, 0.0), le::ParameterError);
}

TEST(Pipeline, DisabledSpecIsIdentity) {
  SplitMix64 g(59);
  const auto img = le::testing::random_image(16, 16, g);
  const auto lab = le::testing::random_edges(16, 16, 0.2, g);
  auto spec = le::AugmentSpec::none();
  spec.rotation_deg = {0, 0};
  spec.translation_px = {0, 0};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto out = le::sample_and_apply(img, lab, spec, seed);
    EXPECT_EQ(out.image, img);
    EXPECT_EQ(out.label, lab);
  }
}

TEST(Pipeline, SameSeedSameOutput) {
  SplitMix64 g(60);
  const auto img = le::testing::random_image(16, 16, g);
  const auto lab = le::testing::random_edges(16, 16, 0.2, g);
  const auto spec = everything_on();
  const auto a = le::sample_and_apply(img, lab, spec, 9);
  const auto b = le::sample_and_apply(img, lab, spec, 9);
  EXPECT_EQ(a.image, b.image);
  EXPECT_EQ(a.label, b.label);
}

TEST(Pipeline, LabelsBinaryAndImagesInRangeOverTenThousandSeeds) {
  SplitMix64 g(61);
  const auto img = le::testing::random_image(16, 16, g);
  const auto lab = le::testing::random_edges(16, 16, 0.2, g);
  const auto spec = everything_on();
  for (std::uint64_t seed = 0; seed < 10000; ++seed) {
    const auto out = le::sample_and_apply(img, lab, spec, seed);
    for (auto v : out.label.pixels()) ASSERT_TRUE(v == 0 || v == 1);
    for (double v : out.image.pixels()) ASSERT_TRUE(std::isfinite(v) && v >= 0.0 && v <= 1.0);
  }
}

TEST(Pipeline, DefaultSpecOnlyFlips) {
  SplitMix64 g(62);
  const auto img = le::testing::random_image(8, 8, g);
  const auto lab = le::testing::random_edges(8, 8, 0.3, g);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto out = le::sample_and_apply(img, lab, le::AugmentSpec{}, seed);
    auto sorted = [](std::span<const double> v) {
      std::vector<double> s(v.begin(), v.end());
      std::sort(s.begin(), s.end());
      return s;
    };
    ASSERT_EQ(sorted(out.image.pixels()), sorted(img.pixels()));
    ASSERT_EQ(le::count_edges(out.label), le::count_edges(lab));
  }
}

TEST(Spec, ValidationRejectsBadValues) {
  auto s = le::AugmentSpec{};
  s.flip_h_prob = 1.5;
  EXPECT_THROW(s.validate(), le::ParameterError);
  s = {};
  s.scale = {0.0, 1.0};
  EXPECT_THROW(s.validate(), le::ParameterError);
  s = {};
  s.rotation_deg = {10.0, -10.0};
  EXPECT_THROW(s.validate(), le::ParameterError);
  s = {};
  s.occluder_size = {2.2, 2.8};
  EXPECT_THROW(s.validate(), le::ParameterError);
}

TEST(Spec, JsonRoundTrip) {
  const auto s = everything_on();
  le::AugmentSpec back;
  le::read_fields(le::JsonFields(le::to_json(s), "augment"), back);
  EXPECT_EQ(back, s);
}
