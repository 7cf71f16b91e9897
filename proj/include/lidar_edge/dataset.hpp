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

#ifndef LIDAR_EDGE_DATASET_HPP_
#define LIDAR_EDGE_DATASET_HPP_

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "lidar_edge/lidar.hpp"
#include "lidar_edge/pgm.hpp"
#include "lidar_edge/rng.hpp"

namespace lidar_edge {

inline constexpr const char* kGeneratorVersion = "lidar_edge-synth-1";

/// Distribution of synthetic scenes. Distances in meters, sizes in pixels.
struct ScenePolicy {
  int min_primitives = 1;
  int max_primitives = 4;
  // Relative odds of disk / rectangle / half-plane step.
  std::array<double, 3> kind_weights{1.0, 1.0, 1.0};
  Interval disk_radius{4.0, 14.0};
  Interval rect_size{6.0, 24.0};
  Interval primitive_range{5.0, 40.0};
  Interval background_range{45.0, 80.0};
  // Half-plane anchors are drawn from the central band [margin, size - margin].
  double halfplane_margin = 16.0;

  void validate(const LidarConfig& cfg) const {
    auto ordered = [](const Interval& i, const char* name) {
      if (!std::isfinite(i.lo) || !std::isfinite(i.hi) || i.lo > i.hi) {
        throw ParameterError(std::string("scene policy: ") + name +
                             " must be a finite ordered interval");
      }
    };
    if (min_primitives < 0 || max_primitives < min_primitives) {
      throw ParameterError("scene policy: primitive count range invalid");
    }
    double total = 0.0;
    for (double w : kind_weights) {
      if (!(w >= 0.0) || !std::isfinite(w)) {
        throw ParameterError("scene policy: kind weights must be >= 0");
      }
      total += w;
    }
    if (max_primitives > 0 && !(total > 0.0)) {
      throw ParameterError("scene policy: kind weights sum to zero");
    }
    ordered(disk_radius, "disk_radius");
    ordered(rect_size, "rect_size");
    ordered(primitive_range, "primitive_range");
    ordered(background_range, "background_range");
    if (!(primitive_range.lo > 0.0) || primitive_range.hi > cfg.max_range) {
      throw ParameterError("scene policy: primitive_range must lie in (0, max_range]");
    }
    if (!(background_range.lo > 0.0) || background_range.hi > cfg.max_range) {
      throw ParameterError("scene policy: background_range must lie in (0, max_range]");
    }
    if (disk_radius.lo <= 0.0 || rect_size.lo <= 0.0) {
      throw ParameterError("scene policy: primitive sizes must be > 0");
    }
    if (!(halfplane_margin >= 0.0)) {
      throw ParameterError("scene policy: halfplane_margin must be >= 0");
    }
  }
};

/// Draw order: background, count, then per primitive kind followed by its
/// geometry and range.
inline Scene sample_scene(const ScenePolicy& policy, const LidarConfig& cfg,
                          SplitMix64& g) {
  const double W = static_cast<double>(cfg.width);
  const double H = static_cast<double>(cfg.height);
  Scene s;
  s.background_range = g.uniform(policy.background_range.lo, policy.background_range.hi);
  const auto n = g.between(policy.min_primitives, policy.max_primitives);
  const double total = policy.kind_weights[0] + policy.kind_weights[1] + policy.kind_weights[2];
  for (std::int64_t i = 0; i < n; ++i) {
    const double pick = g.uniform() * total;
    const double range = g.uniform(policy.primitive_range.lo, policy.primitive_range.hi);
    if (pick < policy.kind_weights[0]) {
      const double cx = g.uniform(0.0, W);
      const double cy = g.uniform(0.0, H);
      const double rad = g.uniform(policy.disk_radius.lo, policy.disk_radius.hi);
      s.primitives.emplace_back(Disk{cx, cy, rad, range});
    } else if (pick < policy.kind_weights[0] + policy.kind_weights[1]) {
      const double w = g.uniform(policy.rect_size.lo, policy.rect_size.hi);
      const double h = g.uniform(policy.rect_size.lo, policy.rect_size.hi);
      const double x0 = g.uniform(-w / 2.0, W - w / 2.0);
      const double y0 = g.uniform(-h / 2.0, H - h / 2.0);
      s.primitives.emplace_back(Rect{x0, y0, x0 + w, y0 + h, range});
    } else {
      const double m = std::min(policy.halfplane_margin, std::min(W, H) / 2.0);
      const double angle = g.uniform(0.0, 2.0 * std::numbers::pi);
      const double px = g.uniform(m, W - m);
      const double py = g.uniform(m, H - m);
      s.primitives.emplace_back(HalfPlane{px, py, angle, range});
    }
  }
  return s;
}

enum class Split { kTrain, kVal, kTest, kUnassigned };

inline const char* to_string(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
    case Split::kUnassigned: return "unassigned";
  }
  return "unassigned";
}

inline Split parse_split(const std::string& s) {
  if (s == "train") return Split::kTrain;
  if (s == "val") return Split::kVal;
  if (s == "test") return Split::kTest;
  if (s == "unassigned") return Split::kUnassigned;
  throw FormatError("unknown split tag '" + s + "'");
}

struct ManifestEntry {
  std::string id;
  std::string range;      // LRI1 path relative to the dataset root, may be empty
  std::string intensity;  // PGM path relative to the dataset root
  std::string label;      // PGM path relative to the dataset root
  Split split = Split::kUnassigned;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  std::uint64_t seed = 0;
  std::string generator_version = kGeneratorVersion;

  std::size_t count(Split s) const {
    return static_cast<std::size_t>(std::count_if(
        entries.begin(), entries.end(), [s](const auto& e) { return e.split == s; }));
  }
  std::vector<ManifestEntry> subset(Split s) const {
    std::vector<ManifestEntry> out;
    for (const auto& e : entries) {
      if (e.split == s) out.push_back(e);
    }
    return out;
  }
};

/// Manifest as JSON lines, keys in the order id, range, intensity, label, split.
inline std::string encode_manifest(const DatasetManifest& m) {
  std::string out;
  for (const auto& e : m.entries) {
    nlohmann::ordered_json j;
    j["id"] = e.id;
    j["range"] = e.range;
    j["intensity"] = e.intensity;
    j["label"] = e.label;
    j["split"] = to_string(e.split);
    out += j.dump();
    out += '\n';
  }
  return out;
}

inline DatasetManifest decode_manifest(const std::string& text) {
  DatasetManifest m;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      ManifestEntry e;
      e.id = j.at("id").get<std::string>();
      e.range = j.value("range", std::string{});
      e.intensity = j.value("intensity", std::string{});
      e.label = j.at("label").get<std::string>();
      e.split = parse_split(j.value("split", std::string{"unassigned"}));
      if (e.range.empty() && e.intensity.empty()) {
        throw FormatError("entry has neither range nor intensity path");
      }
      for (const auto* p : {&e.range, &e.intensity, &e.label}) {
        if (!p->empty() && !seen.insert(*p).second) {
          throw FormatError("duplicate path '" + *p + "'");
        }
      }
      m.entries.push_back(std::move(e));
    } catch (const nlohmann::json::exception& ex) {
      throw FormatError("manifest line " + std::to_string(lineno) + ": " + ex.what());
    } catch (const FormatError& ex) {
      throw FormatError("manifest line " + std::to_string(lineno) + ": " + ex.what());
    }
  }
  return m;
}

inline void write_manifest(const std::filesystem::path& path, const DatasetManifest& m) {
  io::write_text(path, encode_manifest(m));
}

inline DatasetManifest read_manifest(const std::filesystem::path& path) {
  try {
    return decode_manifest(io::read_text(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

/**
 * Partitions the manifest: a seeded Fisher-Yates shuffle, then contiguous
 * train/val/test runs of round(n * ratio) items. Rounding surplus or deficit
 * lands on the train split.
 */
inline DatasetManifest split_dataset(const DatasetManifest& manifest,
                                     std::array<double, 3> ratios,
                                     std::uint64_t seed) {
  if (manifest.entries.empty()) throw ParameterError("cannot split an empty manifest");
  for (double r : ratios) {
    if (!(r >= 0.0) || !std::isfinite(r)) {
      throw ParameterError("split ratios must be finite and nonnegative");
    }
  }
  if (std::abs(ratios[0] + ratios[1] + ratios[2] - 1.0) > 1e-9) {
    throw ParameterError("split ratios must sum to 1");
  }
  const std::size_t n = manifest.entries.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  SplitMix64 g(seed);
  for (std::size_t i = n - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(g.below(i + 1));
    std::swap(order[i], order[j]);
  }
  const auto rounded = [n](double r) {
    return static_cast<std::int64_t>(std::llround(static_cast<double>(n) * r));
  };
  std::int64_t n_val = rounded(ratios[1]);
  std::int64_t n_test = rounded(ratios[2]);
  std::int64_t n_train = static_cast<std::int64_t>(n) - n_val - n_test;
  // Only reachable when val + test round above n; shrink them back.
  while (n_train < 0) {
    if (n_test > 0) {
      --n_test;
    } else {
      --n_val;
    }
    ++n_train;
  }
  DatasetManifest out = manifest;
  for (std::size_t k = 0; k < n; ++k) {
    const auto pos = static_cast<std::int64_t>(k);
    Split s = pos < n_train ? Split::kTrain
              : pos < n_train + n_val ? Split::kVal
                                      : Split::kTest;
    out.entries[order[k]].split = s;
  }
  return out;
}

inline std::string sample_id(std::size_t index) {
  std::ostringstream os;
  os << "sample_" << std::setw(5) << std::setfill('0') << index;
  return os.str();
}

/**
 * Renders n scenes into out_dir (ranges/<id>.lri, intensity/<id>.pgm,
 * labels/<id>.pgm, manifest.jsonl). Sample i uses derive_seed(seed, i) for both
 * its scene and its sensor noise, so any sample can be regenerated alone.
 */
inline DatasetManifest generate_dataset(std::size_t n, const LidarConfig& cfg,
                                        const ScenePolicy& policy, double delta,
                                        std::uint64_t seed,
                                        const std::filesystem::path& out_dir) {
  if (n < 1) throw ParameterError("dataset size must be >= 1");
  if (!(delta > 0.0)) throw ParameterError("edge delta must be > 0");
  cfg.validate();
  policy.validate(cfg);
  DatasetManifest manifest;
  manifest.seed = seed;
  for (std::size_t i = 0; i < n; ++i) {
    SplitMix64 g(derive_seed(seed, i));
    const Scene scene = sample_scene(policy, cfg, g);
    const auto rendered = render_scene(scene, cfg, g.next(), delta);
    ManifestEntry e;
    e.id = sample_id(i);
    e.range = "ranges/" + e.id + ".lri";
    e.intensity = "intensity/" + e.id + ".pgm";
    e.label = "labels/" + e.id + ".pgm";
    write_lri(out_dir / e.range, rendered.range);
    write_pgm(out_dir / e.intensity, range_to_intensity(rendered.range));
    write_pgm(out_dir / e.label, rendered.edges);
    manifest.entries.push_back(std::move(e));
  }
  write_manifest(out_dir / "manifest.jsonl", manifest);
  return manifest;
}

struct Sample {
  GrayImage image;
  EdgeMap label;
};

/// Loads one entry. The detector input comes from the range raster when one
/// is listed, otherwise from the intensity PGM (external data).
inline Sample load_sample(const ManifestEntry& e, const std::filesystem::path& root) {
  Sample s;
  if (!e.range.empty()) {
    s.image = range_to_intensity(read_lri(root / e.range));
  } else {
    s.image = read_pgm(root / e.intensity);
  }
  s.label = read_pgm_labels(root / e.label);
  require_same_shape(s.image, s.label, ("sample " + e.id).c_str());
  return s;
}

inline std::vector<Sample> load_samples(const std::vector<ManifestEntry>& entries,
                                        const std::filesystem::path& root) {
  std::vector<Sample> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(load_sample(e, root));
  return out;
}

}  // namespace lidar_edge

#endif  // LIDAR_EDGE_DATASET_HPP_
