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

#ifndef LIDAR_EDGE_AUGMENT_HPP_
#define LIDAR_EDGE_AUGMENT_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <utility>

#include "lidar_edge/error.hpp"
#include "lidar_edge/json_fields.hpp"
#include "lidar_edge/raster.hpp"
#include "lidar_edge/rng.hpp"

namespace lidar_edge {

struct AffineParams {
  double angle_deg = 0.0;  // clockwise on screen (rows grow downward)
  double tx = 0.0;         // pixels, +x = right
  double ty = 0.0;         // pixels, +y = down
  double scale = 1.0;
  double shear_x = 0.0;
  bool flip_h = false;
  bool flip_v = false;

  bool is_identity() const noexcept {
    return angle_deg == 0.0 && tx == 0.0 && ty == 0.0 && scale == 1.0 && shear_x == 0.0 &&
           !flip_h && !flip_v;
  }
};

struct Augmented {
  GrayImage image;
  EdgeMap label;
};

/**
 * Applies p = C + T + R * Sh * s * F * (q - C) to source pixel q, where C is
 * the image center, F the flips, Sh = [[1, shear_x], [0, 1]]. Output pixels are
 * pulled back through the inverse: bilinear for the image, nearest for the
 * label. Samples falling outside the source frame are 0.
 */
inline Augmented affine_transform(const GrayImage& img, const EdgeMap& label,
                                  const AffineParams& a) {
  require_same_shape(img, label, "affine_transform");
  if (!(a.scale > 0.0) || !std::isfinite(a.scale)) {
    throw ParameterError("affine_transform: scale must be > 0");
  }
  if (a.is_identity()) return {img, label};
  const std::size_t H = img.height(), W = img.width();
  const double cx = (static_cast<double>(W) - 1.0) / 2.0;
  const double cy = (static_cast<double>(H) - 1.0) / 2.0;
  const double th = a.angle_deg * std::numbers::pi / 180.0;
  const double c = std::cos(th), s = std::sin(th);
  const double fx = a.flip_h ? -1.0 : 1.0, fy = a.flip_v ? -1.0 : 1.0;
  // M = R * Sh * scale * F
  const double m00 = a.scale * c * fx;
  const double m01 = a.scale * (c * a.shear_x - s) * fy;
  const double m10 = a.scale * s * fx;
  const double m11 = a.scale * (s * a.shear_x + c) * fy;
  const double det = m00 * m11 - m01 * m10;
  const double i00 = m11 / det, i01 = -m01 / det, i10 = -m10 / det, i11 = m00 / det;

  Augmented out{GrayImage(H, W, 0.0), EdgeMap(H, W, 0)};
  const double max_x = static_cast<double>(W) - 1.0, max_y = static_cast<double>(H) - 1.0;
  constexpr double kEdgeSlack = 1e-9;
  for (std::size_t r = 0; r < H; ++r) {
    for (std::size_t q = 0; q < W; ++q) {
      const double dx = static_cast<double>(q) - cx - a.tx;
      const double dy = static_cast<double>(r) - cy - a.ty;
      const double sx = i00 * dx + i01 * dy + cx;
      const double sy = i10 * dx + i11 * dy + cy;
      const double nx = std::round(sx), ny = std::round(sy);
      if (nx >= 0.0 && ny >= 0.0 && nx <= max_x && ny <= max_y) {
        out.label(r, q) = label(static_cast<std::size_t>(ny), static_cast<std::size_t>(nx));
      }
      if (sx < -kEdgeSlack || sy < -kEdgeSlack || sx > max_x + kEdgeSlack ||
          sy > max_y + kEdgeSlack) {
        continue;
      }
      const double bx = std::clamp(sx, 0.0, max_x), by = std::clamp(sy, 0.0, max_y);
      const auto x0 = static_cast<std::size_t>(bx), y0 = static_cast<std::size_t>(by);
      const std::size_t x1 = std::min(x0 + 1, W - 1), y1 = std::min(y0 + 1, H - 1);
      const double wx = bx - static_cast<double>(x0), wy = by - static_cast<double>(y0);
      out.image(r, q) = (1.0 - wy) * ((1.0 - wx) * img(y0, x0) + wx * img(y0, x1)) +
                        wy * ((1.0 - wx) * img(y1, x0) + wx * img(y1, x1));
    }
  }
  return out;
}

/// Adds N(0, sigma^2) per pixel in row-major order, then clamps to [0, 1].
inline GrayImage add_gaussian_noise(const GrayImage& img, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw ParameterError("noise sigma must be >= 0");
  if (sigma == 0.0) return img;
  SplitMix64 g(seed);
  GrayImage out = img;
  for (double& v : out.pixels()) v = std::clamp(v + sigma * g.normal(), 0.0, 1.0);
  return out;
}

/// Per pixel: one uniform decides corruption; a second picks 0 or 1.
inline GrayImage add_salt_pepper(const GrayImage& img, double density, std::uint64_t seed) {
  if (!(density >= 0.0 && density <= 1.0)) {
    throw ParameterError("salt-pepper density must be in [0,1]");
  }
  if (density == 0.0) return img;
  SplitMix64 g(seed);
  GrayImage out = img;
  for (double& v : out.pixels()) {
    if (g.uniform() < density) v = g.uniform() < 0.5 ? 0.0 : 1.0;
  }
  return out;
}

/**
 * Zeroes `count` rectangles in image and label. Per occluder the stream yields
 * height, width (integers in size_range), then center row and column; the
 * rectangle spans [center - size/2, center - size/2 + size) clipped to the frame.
 */
inline Augmented occlude(const GrayImage& img, const EdgeMap& label, int count,
                         Interval size_range, std::uint64_t seed) {
  require_same_shape(img, label, "occlude");
  if (count < 0) throw ParameterError("occluder count must be >= 0");
  if (!size_range.ordered() || size_range.lo < 1.0) {
    throw ParameterError("occluder size range must be ordered and >= 1");
  }
  Augmented out{img, label};
  SplitMix64 g(seed);
  const auto lo = static_cast<std::int64_t>(std::ceil(size_range.lo));
  const auto hi = static_cast<std::int64_t>(std::floor(size_range.hi));
  if (count > 0 && hi < lo) throw ParameterError("occluder size range holds no integer");
  const auto H = static_cast<std::int64_t>(img.height());
  const auto W = static_cast<std::int64_t>(img.width());
  for (int k = 0; k < count; ++k) {
    const std::int64_t h = g.between(lo, hi);
    const std::int64_t w = g.between(lo, hi);
    const auto cr = static_cast<std::int64_t>(g.below(static_cast<std::uint64_t>(H)));
    const auto cc = static_cast<std::int64_t>(g.below(static_cast<std::uint64_t>(W)));
    const std::int64_t r0 = std::max<std::int64_t>(cr - h / 2, 0);
    const std::int64_t r1 = std::min<std::int64_t>(cr - h / 2 + h, H);
    const std::int64_t c0 = std::max<std::int64_t>(cc - w / 2, 0);
    const std::int64_t c1 = std::min<std::int64_t>(cc - w / 2 + w, W);
    for (auto r = r0; r < r1; ++r) {
      for (auto c = c0; c < c1; ++c) {
        out.image(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = 0.0;
        out.label(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = 0;
      }
    }
  }
  return out;
}

/// v <- clamp(gain * (v - 0.5) + 0.5 + offset, 0, 1).
inline GrayImage adjust_photometric(const GrayImage& img, double gain, double offset) {
  if (!(gain > 0.0)) throw ParameterError("photometric gain must be > 0");
  GrayImage out = img;
  for (double& v : out.pixels()) v = std::clamp(gain * (v - 0.5) + 0.5 + offset, 0.0, 1.0);
  return out;
}

/// Probabilities and parameter ranges for the random pipeline.
struct AugmentSpec {
  double rotation_prob = 0.0;
  Interval rotation_deg{-15.0, 15.0};
  double translation_prob = 0.0;
  Interval translation_px{-4.0, 4.0};
  double scale_prob = 0.0;
  Interval scale{0.9, 1.1};
  double shear_prob = 0.0;
  Interval shear{-0.1, 0.1};
  double flip_h_prob = 0.5;
  double flip_v_prob = 0.5;
  double photometric_prob = 0.0;
  Interval gain{0.8, 1.2};
  Interval offset{-0.1, 0.1};
  double noise_prob = 0.0;
  Interval noise_sigma{0.0, 0.05};
  double salt_pepper_prob = 0.0;
  Interval salt_pepper_density{0.0, 0.02};
  double occlusion_prob = 0.0;
  int max_occluders = 2;
  Interval occluder_size{2.0, 8.0};

  /// Every transform disabled.
  static AugmentSpec none() {
    AugmentSpec s;
    s.flip_h_prob = s.flip_v_prob = 0.0;
    return s;
  }

  void validate() const {
    auto prob = [](double p, const char* name) {
      if (!(p >= 0.0 && p <= 1.0)) {
        throw ParameterError(std::string("augment: ") + name + " must be in [0,1]");
      }
    };
    auto range = [](const Interval& i, const char* name) {
      if (!i.ordered()) {
        throw ParameterError(std::string("augment: ") + name + " must be finite and ordered");
      }
    };
    prob(rotation_prob, "rotation_prob");
    prob(translation_prob, "translation_prob");
    prob(scale_prob, "scale_prob");
    prob(shear_prob, "shear_prob");
    prob(flip_h_prob, "flip_h_prob");
    prob(flip_v_prob, "flip_v_prob");
    prob(photometric_prob, "photometric_prob");
    prob(noise_prob, "noise_prob");
    prob(salt_pepper_prob, "salt_pepper_prob");
    prob(occlusion_prob, "occlusion_prob");
    range(rotation_deg, "rotation_deg");
    range(translation_px, "translation_px");
    range(scale, "scale");
    range(shear, "shear");
    range(gain, "gain");
    range(offset, "offset");
    range(noise_sigma, "noise_sigma");
    range(salt_pepper_density, "salt_pepper_density");
    range(occluder_size, "occluder_size");
    if (!(scale.lo > 0.0)) throw ParameterError("augment: scale must be > 0");
    if (!(gain.lo > 0.0)) throw ParameterError("augment: gain must be > 0");
    if (noise_sigma.lo < 0.0) throw ParameterError("augment: noise_sigma must be >= 0");
    if (salt_pepper_density.lo < 0.0 || salt_pepper_density.hi > 1.0) {
      throw ParameterError("augment: salt_pepper_density must lie in [0,1]");
    }
    if (max_occluders < 0) throw ParameterError("augment: max_occluders must be >= 0");
    if (occluder_size.lo < 1.0 || std::floor(occluder_size.hi) < std::ceil(occluder_size.lo)) {
      throw ParameterError("augment: occluder_size must contain an integer >= 1");
    }
  }

  friend bool operator==(const AugmentSpec&, const AugmentSpec&) = default;
};

inline Json to_json(const AugmentSpec& s) {
  Json j;
  j["rotation_prob"] = s.rotation_prob;
  j["rotation_deg"] = to_json(s.rotation_deg);
  j["translation_prob"] = s.translation_prob;
  j["translation_px"] = to_json(s.translation_px);
  j["scale_prob"] = s.scale_prob;
  j["scale"] = to_json(s.scale);
  j["shear_prob"] = s.shear_prob;
  j["shear"] = to_json(s.shear);
  j["flip_h_prob"] = s.flip_h_prob;
  j["flip_v_prob"] = s.flip_v_prob;
  j["photometric_prob"] = s.photometric_prob;
  j["gain"] = to_json(s.gain);
  j["offset"] = to_json(s.offset);
  j["noise_prob"] = s.noise_prob;
  j["noise_sigma"] = to_json(s.noise_sigma);
  j["salt_pepper_prob"] = s.salt_pepper_prob;
  j["salt_pepper_density"] = to_json(s.salt_pepper_density);
  j["occlusion_prob"] = s.occlusion_prob;
  j["max_occluders"] = s.max_occluders;
  j["occluder_size"] = to_json(s.occluder_size);
  return j;
}

inline void read_fields(JsonFields f, AugmentSpec& s) {
  f.get("rotation_prob", s.rotation_prob)
      .get("rotation_deg", s.rotation_deg)
      .get("translation_prob", s.translation_prob)
      .get("translation_px", s.translation_px)
      .get("scale_prob", s.scale_prob)
      .get("scale", s.scale)
      .get("shear_prob", s.shear_prob)
      .get("shear", s.shear)
      .get("flip_h_prob", s.flip_h_prob)
      .get("flip_v_prob", s.flip_v_prob)
      .get("photometric_prob", s.photometric_prob)
      .get("gain", s.gain)
      .get("offset", s.offset)
      .get("noise_prob", s.noise_prob)
      .get("noise_sigma", s.noise_sigma)
      .get("salt_pepper_prob", s.salt_pepper_prob)
      .get("salt_pepper_density", s.salt_pepper_density)
      .get("occlusion_prob", s.occlusion_prob)
      .get("max_occluders", s.max_occluders)
      .get("occluder_size", s.occluder_size);
  f.finish();
}

/**
 * Draws every parameter from SplitMix64(seed) in this order, whether or not the
 * transform fires (so the stream layout never depends on earlier outcomes):
 *   rotation gate, angle; translation gate, tx, ty; scale gate, factor;
 *   shear gate, factor; flip_h gate; flip_v gate;
 *   photometric gate, gain, offset;
 *   noise gate, sigma, noise seed; salt-pepper gate, density, seed;
 *   occlusion gate, count in [0, max_occluders], occlusion seed.
 * Application order: affine, photometric, gaussian noise, salt-pepper, occlusion.
 */
inline Augmented sample_and_apply(const GrayImage& img, const EdgeMap& label,
                                  const AugmentSpec& spec, std::uint64_t seed) {
  spec.validate();
  SplitMix64 g(seed);
  auto draw = [&g](const Interval& i) { return g.uniform(i.lo, i.hi); };

  AffineParams a;
  bool on = g.bernoulli(spec.rotation_prob);
  double v = draw(spec.rotation_deg);
  if (on) a.angle_deg = v;
  on = g.bernoulli(spec.translation_prob);
  const double tx = draw(spec.translation_px), ty = draw(spec.translation_px);
  if (on) {
    a.tx = tx;
    a.ty = ty;
  }
  on = g.bernoulli(spec.scale_prob);
  v = draw(spec.scale);
  if (on) a.scale = v;
  on = g.bernoulli(spec.shear_prob);
  v = draw(spec.shear);
  if (on) a.shear_x = v;
  a.flip_h = g.bernoulli(spec.flip_h_prob);
  a.flip_v = g.bernoulli(spec.flip_v_prob);

  const bool photo_on = g.bernoulli(spec.photometric_prob);
  const double gain = draw(spec.gain), offset = draw(spec.offset);
  const bool noise_on = g.bernoulli(spec.noise_prob);
  const double sigma = draw(spec.noise_sigma);
  const std::uint64_t noise_seed = g.next();
  const bool sp_on = g.bernoulli(spec.salt_pepper_prob);
  const double density = draw(spec.salt_pepper_density);
  const std::uint64_t sp_seed = g.next();
  const bool occ_on = g.bernoulli(spec.occlusion_prob);
  const auto count = static_cast<int>(g.between(0, spec.max_occluders));
  const std::uint64_t occ_seed = g.next();

  Augmented out = affine_transform(img, label, a);
  if (photo_on) out.image = adjust_photometric(out.image, gain, offset);
  if (noise_on) out.image = add_gaussian_noise(out.image, sigma, noise_seed);
  if (sp_on) out.image = add_salt_pepper(out.image, density, sp_seed);
  if (occ_on) out = occlude(out.image, out.label, count, spec.occluder_size, occ_seed);
  return out;
}

}  // namespace lidar_edge

#endif  // LIDAR_EDGE_AUGMENT_HPP_
