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
#include <numbers>
#include <vector>

#include "lidar_edge/dataset.hpp"
#include "lidar_edge/lidar.hpp"
#include "test_util.hpp"

namespace le = lidar_edge;
using le::LidarConfig;
using le::RangeImage;
using le::RangeRaster;
using le::SplitMix64;

namespace {

LidarConfig quiet_config(std::size_t h = 64, std::size_t w = 64) {
  LidarConfig c;
  c.height = h;
  c.width = w;
  c.noise_sigma = 0.0;
  c.dropout_prob = 0.0;
  return c;
}

}  // namespace

TEST(Tof, ZeroIsZero) { EXPECT_EQ(le::tof_to_distance(0.0), 0.0); }

TEST(Tof, TwoMicrosecondsIsExact) {
  EXPECT_EQ(le::tof_to_distance(2.0e-6, 299792458.0), 299.792458);
  EXPECT_EQ(le::kSpeedOfLight, 299792458.0);
}

TEST(Tof, HundredMetres) { EXPECT_NEAR(le::tof_to_distance(6.67128e-7), 100.0, 1e-3); }

TEST(Tof, NegativeRejected) {
  EXPECT_THROW(le::tof_to_distance(-1e-9), le::ParameterError);
  EXPECT_THROW(le::tof_to_distance(std::nan("")), le::ParameterError);
}

TEST(Tof, LinearOnRandomInputs) {
  SplitMix64 g(11);
  for (int i = 0; i < 10000; ++i) {
    const double a = g.uniform(0.0, 1e-5), b = g.uniform(0.0, 1e-5);
    const double lhs = le::tof_to_distance(a + b);
    const double rhs = le::tof_to_distance(a) + le::tof_to_distance(b);
    ASSERT_LE(std::abs(lhs - rhs), 4 * std::numeric_limits<double>::epsilon() * lhs);
  }
}

TEST(GroundTruth, ConstantRangeHasNoEdges) {
  const RangeRaster r(5, 5, 20.0);
  EXPECT_EQ(le::count_edges(le::ground_truth_edges(r, 0.5)), 0u);
}

TEST(GroundTruth, TwoColumnStepMarksNearColumnOnly) {
  const RangeRaster r(3, 2, std::vector<double>{10, 30, 10, 30, 10, 30});
  const auto e = le::ground_truth_edges(r, 0.5);
  for (std::size_t row = 0; row < 3; ++row) {
    EXPECT_EQ(e(row, 0), 1);
    EXPECT_EQ(e(row, 1), 0);
  }
}

TEST(GroundTruth, LargeDeltaGivesEmptyMap) {
  const RangeRaster r(3, 2, std::vector<double>{10, 30, 10, 30, 10, 30});
  EXPECT_EQ(le::count_edges(le::ground_truth_edges(r, 25.0)), 0u);
}

TEST(GroundTruth, LargestJumpDecidesSide) {
  // Center 20 m sits between a 10 m and a 40 m neighbor: the 20 m jump to
  // 40 m dominates and the center is the near side of it.
  const RangeRaster r(1, 3, std::vector<double>{10, 20, 40});
  const auto e = le::ground_truth_edges(r, 0.5);
  EXPECT_EQ(e(0, 0), 1);
  EXPECT_EQ(e(0, 1), 1);
  EXPECT_EQ(e(0, 2), 0);
}

TEST(Render, EmptySceneIsConstantBackground) {
  const auto cfg = quiet_config(8, 8);
  le::Scene s;
  s.background_range = 42.0;
  const auto out = le::render_scene(s, cfg, 3);
  for (double v : out.range.ranges.pixels()) EXPECT_EQ(v, 42.0);
  EXPECT_EQ(le::count_edges(out.edges), 0u);
}

TEST(Render, HalfPlaneStepGivesOneVerticalLine) {
  const auto cfg = quiet_config();
  le::Scene s;
  s.background_range = 30.0;
  // angle pi: normal points to -x, so the plane covers x < 32 (columns 0..31).
  s.primitives.push_back(le::HalfPlane{32.0, 32.0, std::numbers::pi, 10.0});
  const auto out = le::render_scene(s, cfg, 1);
  EXPECT_EQ(out.range.ranges(0, 31), 10.0);
  EXPECT_EQ(out.range.ranges(0, 32), 30.0);
  for (std::size_t r = 0; r < 64; ++r) {
    for (std::size_t c = 0; c < 64; ++c) {
      ASSERT_EQ(out.edges(r, c), c == 31 ? 1 : 0) << r << "," << c;
    }
  }
}

TEST(Render, SameSeedIsBitIdentical) {
  LidarConfig cfg;
  le::Scene s;
  s.primitives.push_back(le::Disk{20, 20, 8, 12});
  s.primitives.push_back(le::Rect{30, 10, 50, 40, 25});
  const auto a = le::render_scene(s, cfg, 99);
  const auto b = le::render_scene(s, cfg, 99);
  EXPECT_EQ(a.range.ranges, b.range.ranges);
  EXPECT_EQ(a.edges, b.edges);
  const auto c = le::render_scene(s, cfg, 100);
  EXPECT_NE(a.range.ranges, c.range.ranges);
}

TEST(Render, NoiseFreeLabelsIgnoreSeed) {
  LidarConfig cfg;  // noisy config: labels come from the clean ranges
  le::Scene s;
  s.primitives.push_back(le::Disk{30, 30, 10, 15});
  const auto a = le::render_scene(s, cfg, 1);
  const auto b = le::render_scene(s, cfg, 2);
  EXPECT_EQ(a.edges, b.edges);
  EXPECT_GT(le::count_edges(a.edges), 0u);
}

TEST(Render, DropoutWritesMaxRange) {
  auto cfg = quiet_config(16, 16);
  cfg.dropout_prob = 0.5;
  le::Scene s;
  s.background_range = 20.0;
  const auto out = le::render_scene(s, cfg, 5);
  std::size_t dropped = 0;
  for (double v : out.range.ranges.pixels()) {
    EXPECT_TRUE(v == 20.0 || v == cfg.max_range);
    dropped += v == cfg.max_range;
  }
  EXPECT_GT(dropped, 0u);
  EXPECT_LT(dropped, 256u);
}

TEST(Intensity, MapsRangeAffinely) {
  LidarConfig cfg = quiet_config(1, 3);
  RangeImage r{cfg, RangeRaster(1, 3, std::vector<double>{cfg.max_range, 0.0, cfg.max_range / 2})};
  const auto img = le::range_to_intensity(r);
  EXPECT_EQ(img(0, 0), 0.0);
  EXPECT_EQ(img(0, 1), 1.0);
  EXPECT_EQ(img(0, 2), 0.5);
}

TEST(PointCloud, CenterBeamLiesOnXAxis) {
  const auto cfg = quiet_config(3, 3);
  RangeImage r{cfg, RangeRaster(3, 3, cfg.max_range)};
  r.ranges(1, 1) = 5.0;
  const auto cloud = le::range_image_to_point_cloud(r);
  ASSERT_EQ(cloud.size(), 1u);  // no-return beams are omitted
  EXPECT_EQ(cloud[0].x, 5.0);
  EXPECT_EQ(cloud[0].y, 0.0);
  EXPECT_EQ(cloud[0].z, 0.0);
}

TEST(PointCloud, QuarterTurnAzimuth) {
  const auto p = le::spherical_to_cartesian(2.0, std::numbers::pi / 2, 0.0);
  EXPECT_NEAR(p.x, 0.0, 1e-12);
  EXPECT_NEAR(p.y, 2.0, 1e-12);
  EXPECT_NEAR(p.z, 0.0, 1e-12);
}

TEST(PointCloud, MatchesDirectTrigAndPreservesRadius) {
  LidarConfig cfg = quiet_config(6, 10);
  SplitMix64 g(12);
  RangeImage r{cfg, RangeRaster(6, 10)};
  for (double& v : r.ranges.pixels()) v = g.uniform(1.0, 70.0);
  const auto cloud = le::range_image_to_point_cloud(r);
  ASSERT_EQ(cloud.size(), 60u);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const std::size_t row = i / 10, col = i % 10;
    // Independent grid: azimuth spans h_fov over W cells centered on 0.
    const double az = (4.5 - static_cast<double>(col)) * (cfg.h_fov / 10.0);
    const double el = (2.5 - static_cast<double>(row)) * (cfg.v_fov / 6.0);
    const double d = r.ranges(row, col);
    EXPECT_NEAR(cloud[i].x, d * std::cos(el) * std::cos(az), 1e-12 * d);
    EXPECT_NEAR(cloud[i].y, d * std::cos(el) * std::sin(az), 1e-12 * d);
    EXPECT_NEAR(cloud[i].z, d * std::sin(el), 1e-12 * d);
    const double norm = std::sqrt(cloud[i].x * cloud[i].x + cloud[i].y * cloud[i].y +
                                  cloud[i].z * cloud[i].z);
    EXPECT_LE(std::abs(norm - d) / d, 1e-9);
  }
}

TEST(Lri, ByteLayoutAndRoundTrip) {
  LidarConfig cfg = quiet_config(2, 3);
  RangeImage r{cfg, RangeRaster(2, 3, std::vector<double>{1, 2, 3, 4, 5, 80})};
  const auto bytes = le::encode_lri(r);
  ASSERT_EQ(bytes.size(), 16u + 6 * 4);
  EXPECT_EQ(std::string(bytes.data(), 4), "LRI1");
  std::uint32_t h = 0, w = 0;
  float mr = 0;
  std::memcpy(&h, bytes.data() + 4, 4);  // host is little-endian
  std::memcpy(&w, bytes.data() + 8, 4);
  std::memcpy(&mr, bytes.data() + 12, 4);
  EXPECT_EQ(h, 2u);
  EXPECT_EQ(w, 3u);
  EXPECT_EQ(mr, 80.0f);
  const auto back = le::decode_lri(bytes);
  EXPECT_EQ(back.ranges, r.ranges);
  EXPECT_EQ(back.config.max_range, 80.0);
}

TEST(Lri, RejectsBadMagicAndSize) {
  std::vector<char> bad = {'L', 'R', 'I', '2', 0, 0, 0, 0};
  EXPECT_THROW(le::decode_lri(bad), le::FormatError);
  LidarConfig cfg = quiet_config(2, 2);
  auto bytes = le::encode_lri(RangeImage{cfg, RangeRaster(2, 2, 5.0)});
  bytes.pop_back();
  EXPECT_THROW(le::decode_lri(bytes), le::FormatError);
}

TEST(Dataset, TrivialPolicyGivesBackgroundOnlySample) {
  le::testing::TempDir dir("ds");
  le::ScenePolicy p;
  p.min_primitives = 0;
  p.max_primitives = 0;
  const auto m = le::generate_dataset(1, quiet_config(), p, 0.5, 4, dir.path());
  ASSERT_EQ(m.entries.size(), 1u);
  const auto s = le::load_sample(m.entries[0], dir.path());
  EXPECT_EQ(le::count_edges(s.label), 0u);
  for (double v : s.image.pixels()) EXPECT_EQ(v, s.image(0, 0));
}

TEST(Dataset, SameSeedIsByteIdenticalOtherSeedDiffers) {
  le::testing::TempDir a("ds"), b("ds"), c("ds");
  LidarConfig cfg;
  le::ScenePolicy p;
  const auto ma = le::generate_dataset(10, cfg, p, 0.5, 77, a.path());
  le::generate_dataset(10, cfg, p, 0.5, 77, b.path());
  le::generate_dataset(10, cfg, p, 0.5, 78, c.path());
  EXPECT_TRUE(le::testing::same_bytes(a / "manifest.jsonl", b / "manifest.jsonl"));
  bool any_diff = false;
  for (const auto& e : ma.entries) {
    for (const auto& f : {e.range, e.intensity, e.label}) {
      EXPECT_TRUE(le::testing::same_bytes(a.path() / f, b.path() / f)) << f;
      any_diff = any_diff || !le::testing::same_bytes(a.path() / f, c.path() / f);
    }
  }
  EXPECT_TRUE(any_diff);
}

TEST(Dataset, ManifestRoundTripsAndRejectsDuplicates) {
  le::DatasetManifest m;
  m.entries.push_back({"a", "r/a.lri", "i/a.pgm", "l/a.pgm", le::Split::kVal});
  m.entries.push_back({"b", "", "i/b.pgm", "l/b.pgm", le::Split::kTest});
  const auto back = le::decode_manifest(le::encode_manifest(m));
  EXPECT_EQ(back.entries, m.entries);
  const auto text = le::encode_manifest(m);
  EXPECT_EQ(text.substr(0, text.find('\n')),
            R"({"id":"a","range":"r/a.lri","intensity":"i/a.pgm","label":"l/a.pgm","split":"val"})");
  m.entries[1].label = "l/a.pgm";
  EXPECT_THROW(le::decode_manifest(le::encode_manifest(m)), le::FormatError);
}

TEST(Dataset, InvalidPolicyRejected) {
  le::testing::TempDir dir("ds");
  le::ScenePolicy p;
  p.min_primitives = 3;
  p.max_primitives = 1;
  EXPECT_THROW(le::generate_dataset(2, LidarConfig{}, p, 0.5, 1, dir.path()), le::ParameterError);
  EXPECT_THROW(le::generate_dataset(0, LidarConfig{}, le::ScenePolicy{}, 0.5, 1, dir.path()),
               le::ParameterError);
}

TEST(Dataset, RectangleBorderIsOnePixelWide) {
  auto q = quiet_config();
  le::Scene s;
  s.primitives.push_back(le::Rect{10, 10, 30, 20, 5});
  const auto out = le::render_scene(s, q, 1);
  std::size_t marked = 0;
  for (std::size_t r = 0; r < 64; ++r) {
    for (std::size_t c = 0; c < 64; ++c) {
      const bool inside = r >= 10 && r < 20 && c >= 10 && c < 30;
      const bool border = inside && (r == 10 || r == 19 || c == 10 || c == 29);
      ASSERT_EQ(out.edges(r, c), border ? 1 : 0);
      marked += border;
    }
  }
  EXPECT_EQ(marked, 2u * 20 + 2u * 8);
}
