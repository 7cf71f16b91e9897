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

#ifndef LIDAR_EDGE_MODEL_IO_HPP_
#define LIDAR_EDGE_MODEL_IO_HPP_

#include <zlib.h>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "lidar_edge/binary_io.hpp"
#include "lidar_edge/error.hpp"
#include "lidar_edge/nested_net.hpp"
#include "lidar_edge/patch_net.hpp"

/*
 * LEDM layout, little-endian:
 *   "LEDM"  u32 version (=1)  u32 kind (1 nested, 2 patch)
 *   u32 S  u32 widths[S]  u32 input_h  u32 input_w
 *   per tensor, in for_each_tensor order: u32 rank, u32 dims[rank], f64 values
 *   u32 CRC-32 (zlib polynomial) of every preceding byte
 * A patch model stores S = 3 with widths (conv1, conv2, hidden), input 28x28,
 * and appends its dropout rate as a rank-0 tensor after fc2.bias.
 */

namespace lidar_edge::nn {

inline constexpr std::uint32_t kLedmVersion = 1;
inline constexpr std::uint32_t kLedmNested = 1;
inline constexpr std::uint32_t kLedmPatch = 2;

using Model = std::variant<NestedNetParams, PatchNetParams>;

namespace detail {

inline std::uint32_t crc32_of(std::span<const char> bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  std::size_t off = 0;
  while (off < bytes.size()) {
    const auto chunk = static_cast<uInt>(
        std::min<std::size_t>(bytes.size() - off, std::numeric_limits<uInt>::max()));
    crc = ::crc32(crc, reinterpret_cast<const Bytef*>(bytes.data() + off), chunk);
    off += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

inline std::uint32_t to_u32(std::size_t v) {
  if (v > std::numeric_limits<std::uint32_t>::max()) {
    throw ParameterError("value does not fit the LEDM u32 field");
  }
  return static_cast<std::uint32_t>(v);
}

inline void put_tensor(io::ByteWriter& w, const Tensor& t) {
  w.u32(to_u32(t.rank()));
  for (auto d : t.shape()) w.u32(to_u32(d));
  for (double v : t.values()) w.f64(v);
}

inline void put_header(io::ByteWriter& w, std::uint32_t kind,
                       const std::vector<std::size_t>& widths, std::size_t h, std::size_t wd) {
  w.raw("LEDM");
  w.u32(kLedmVersion);
  w.u32(kind);
  w.u32(to_u32(widths.size()));
  for (auto x : widths) w.u32(to_u32(x));
  w.u32(to_u32(h));
  w.u32(to_u32(wd));
}

using Reader = io::ByteReader<TruncatedFileError>;

inline void get_tensor(Reader& r, Tensor& t, const std::string& name) {
  const std::uint32_t rank = r.u32();
  if (rank != t.rank()) {
    throw ModelFormatError("tensor " + name + ": rank " + std::to_string(rank) + ", expected " +
                           std::to_string(t.rank()));
  }
  for (std::size_t i = 0; i < rank; ++i) {
    if (r.u32() != t.dim(i)) {
      throw ModelFormatError("tensor " + name + ": shape differs from " + t.shape_string());
    }
  }
  for (double& v : t.values()) v = r.f64();
}

}  // namespace detail

inline std::vector<char> encode_model(const NestedNetParams& p) {
  io::ByteWriter w;
  detail::put_header(w, kLedmNested, p.arch.widths, p.arch.input_height, p.arch.input_width);
  p.for_each_tensor([&](const std::string&, const Tensor& t) { detail::put_tensor(w, t); });
  w.u32(detail::crc32_of(w.bytes()));
  return w.bytes();
}

inline std::vector<char> encode_model(const PatchNetParams& p) {
  io::ByteWriter w;
  detail::put_header(w, kLedmPatch,
                     {p.arch.conv1_channels, p.arch.conv2_channels, p.arch.hidden}, kPatchSize,
                     kPatchSize);
  p.for_each_tensor([&](const std::string&, const Tensor& t) { detail::put_tensor(w, t); });
  detail::put_tensor(w, Tensor(std::vector<std::size_t>{}, p.dropout_rate));
  w.u32(detail::crc32_of(w.bytes()));
  return w.bytes();
}

inline Model decode_model(std::span<const char> bytes) {
  detail::Reader r(bytes);
  const std::string magic = r.raw(4);
  if (magic != "LEDM") throw BadMagicError("not an LEDM model (magic '" + magic + "')");
  const std::uint32_t version = r.u32();
  if (version != kLedmVersion) {
    throw VersionMismatchError("LEDM version " + std::to_string(version) + ", expected " +
                               std::to_string(kLedmVersion));
  }
  const std::uint32_t kind = r.u32();
  if (kind != kLedmNested && kind != kLedmPatch) {
    throw ModelFormatError("unknown LEDM model kind " + std::to_string(kind));
  }
  const std::uint32_t S = r.u32();
  if (S == 0 || S > 64) throw ModelFormatError("implausible stage count " + std::to_string(S));
  std::vector<std::size_t> widths(S);
  for (auto& w : widths) w = r.u32();
  const std::size_t h = r.u32(), w = r.u32();
  // Bounds keep a corrupted descriptor from requesting absurd allocations.
  for (auto x : widths) {
    if (x > 4096) throw ModelFormatError("implausible layer width " + std::to_string(x));
  }
  if (h > 65536 || w > 65536) throw ModelFormatError("implausible input size");

  Model model;
  try {
    if (kind == kLedmNested) {
      NestedArch arch{S, widths, h, w};
      auto p = NestedNetParams::zeros(arch);
      p.for_each_tensor([&](const std::string& n, Tensor& t) { detail::get_tensor(r, t, n); });
      model = std::move(p);
    } else {
      if (S != 3 || h != kPatchSize || w != kPatchSize) {
        throw ModelFormatError("patch model descriptor must be S=3 with a 28x28 input");
      }
      PatchArch arch{widths[0], widths[1], widths[2]};
      auto p = PatchNetParams::zeros(arch, 0.0);
      p.for_each_tensor([&](const std::string& n, Tensor& t) { detail::get_tensor(r, t, n); });
      Tensor rate(std::vector<std::size_t>{});
      detail::get_tensor(r, rate, "dropout_rate");
      if (!(rate[0] >= 0.0 && rate[0] < 1.0)) throw ModelFormatError("dropout rate out of range");
      p.dropout_rate = rate[0];
      model = std::move(p);
    }
  } catch (const ParameterError& e) {
    throw ModelFormatError(std::string("bad architecture descriptor: ") + e.what());
  }
  const std::size_t body = r.position();
  const std::uint32_t stored = r.u32();
  if (r.remaining() != 0) throw ModelFormatError("trailing bytes after LEDM checksum");
  if (stored != detail::crc32_of(bytes.first(body))) {
    throw ChecksumError("LEDM checksum mismatch");
  }
  return model;
}

template <typename Params>
void save_model(const Params& p, const std::filesystem::path& path) {
  io::write_file(path, encode_model(p));
}

inline Model load_model(const std::filesystem::path& path) {
  const auto bytes = io::read_file(path);
  try {
    return decode_model(bytes);
  } catch (const ModelFormatError& e) {
    // Rethrow the same type with the path in front.
    const std::string msg = path.string() + ": " + e.what();
    if (dynamic_cast<const BadMagicError*>(&e)) throw BadMagicError(msg);
    if (dynamic_cast<const VersionMismatchError*>(&e)) throw VersionMismatchError(msg);
    if (dynamic_cast<const TruncatedFileError*>(&e)) throw TruncatedFileError(msg);
    if (dynamic_cast<const ChecksumError*>(&e)) throw ChecksumError(msg);
    throw ModelFormatError(msg);
  }
}

template <typename Params>
Params load_model_as(const std::filesystem::path& path) {
  auto m = load_model(path);
  if (auto* p = std::get_if<Params>(&m)) return std::move(*p);
  throw ModelFormatError(path.string() + ": model is of the other kind");
}

}  // namespace lidar_edge::nn

#endif  // LIDAR_EDGE_MODEL_IO_HPP_
