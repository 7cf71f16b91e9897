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

#ifndef LIDAR_EDGE_PGM_HPP_
#define LIDAR_EDGE_PGM_HPP_

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lidar_edge/binary_io.hpp"
#include "lidar_edge/raster.hpp"

namespace lidar_edge {

// Binary PGM (P5). Writers always emit maxval 255 with v -> round(v * 255);
// the reader also accepts 16-bit (big-endian) files and '#' comments.

inline std::vector<char> encode_pgm(std::size_t height, std::size_t width,
                                    const std::vector<std::uint8_t>& bytes) {
  const std::string header = "P5\n" + std::to_string(width) + " " +
                             std::to_string(height) + "\n255\n";
  std::vector<char> out(header.begin(), header.end());
  out.insert(out.end(), bytes.begin(), bytes.end());
  return out;
}

template <typename Tag>
std::vector<char> encode_pgm(const Raster<double, Tag>& img) {
  std::vector<std::uint8_t> q(img.size());
  std::transform(img.pixels().begin(), img.pixels().end(), q.begin(),
                 [](double v) {
                   return static_cast<std::uint8_t>(
                       std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
                 });
  return encode_pgm(img.height(), img.width(), q);
}

inline std::vector<char> encode_pgm(const EdgeMap& e) {
  std::vector<std::uint8_t> q(e.size());
  std::transform(e.pixels().begin(), e.pixels().end(), q.begin(),
                 [](std::uint8_t v) -> std::uint8_t { return v ? 255 : 0; });
  return encode_pgm(e.height(), e.width(), q);
}

template <typename R>
void write_pgm(const std::filesystem::path& path, const R& raster) {
  const auto bytes = encode_pgm(raster);
  io::write_file(path, bytes);
}

namespace detail {

struct PgmData {
  std::size_t height = 0;
  std::size_t width = 0;
  unsigned maxval = 0;
  std::vector<unsigned> samples;
};

inline PgmData decode_pgm(const std::vector<char>& bytes) {
  std::size_t pos = 0;
  auto skip_space_and_comments = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_uint = [&](const char* what) {
    skip_space_and_comments();
    if (pos >= bytes.size() || !std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
      throw FormatError(std::string("PGM: expected ") + what);
    }
    unsigned long v = 0;
    while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
      v = v * 10 + static_cast<unsigned long>(bytes[pos] - '0');
      if (v > 1u << 30) throw FormatError(std::string("PGM: ") + what + " too large");
      ++pos;
    }
    return v;
  };

  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
    throw FormatError("PGM: missing P5 magic");
  }
  pos = 2;
  PgmData d;
  d.width = read_uint("width");
  d.height = read_uint("height");
  d.maxval = static_cast<unsigned>(read_uint("maxval"));
  if (d.width == 0 || d.height == 0) throw FormatError("PGM: zero dimension");
  if (d.maxval == 0 || d.maxval > 65535) throw FormatError("PGM: bad maxval");
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    throw FormatError("PGM: missing header terminator");
  }
  ++pos;
  const std::size_t bps = d.maxval < 256 ? 1 : 2;
  const std::size_t n = d.width * d.height;
  if (bytes.size() - pos < n * bps) throw FormatError("PGM: truncated pixel data");
  d.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto hi = static_cast<unsigned char>(bytes[pos + i * bps]);
    d.samples[i] = bps == 1 ? hi
                            : (hi << 8) | static_cast<unsigned char>(bytes[pos + i * bps + 1]);
  }
  return d;
}

}  // namespace detail

inline GrayImage read_pgm(const std::filesystem::path& path) {
  const auto d = detail::decode_pgm(io::read_file(path));
  std::vector<double> v(d.samples.size());
  std::transform(d.samples.begin(), d.samples.end(), v.begin(), [&](unsigned s) {
    return static_cast<double>(s) / static_cast<double>(d.maxval);
  });
  return GrayImage(d.height, d.width, std::move(v));
}

/// Any nonzero sample is an edge.
inline EdgeMap read_pgm_labels(const std::filesystem::path& path) {
  const auto d = detail::decode_pgm(io::read_file(path));
  std::vector<std::uint8_t> v(d.samples.size());
  std::transform(d.samples.begin(), d.samples.end(), v.begin(),
                 [](unsigned s) -> std::uint8_t { return s ? 1 : 0; });
  return EdgeMap(d.height, d.width, std::move(v));
}

}  // namespace lidar_edge

#endif  // LIDAR_EDGE_PGM_HPP_
