// Copyright 2026 The raxelkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "raxelkit/error.hpp"
#include "raxelkit/geom.hpp"
#include "raxelkit/ray_encode.hpp"

// On-disk formats.
//
// Trajectory text file:
//   raxelkit-traj v1 <width> <height> <reference_index>
//   <index> <fx> <fy> <cx> <cy> <r00> <r01> <r02> <t0> <r10> ... <r22> <t2>
// one frame per line, camera-to-world 3x4 in row-major order, reals written
// with 17 significant digits. reference_index is a position in the frame list.
//
// Raxel binary file: magic "RXL1" (3 channels) or "RXM1" (6 channels), then
// little-endian u32 height, width, frame_index, then height*width*channels
// little-endian f64 in row-major, channel-interleaved order.

namespace raxelkit::io {

inline constexpr std::string_view kTrajectoryMagic = "raxelkit-traj";
inline constexpr std::string_view kTrajectoryVersion = "v1";
inline constexpr std::array<char, 4> kRaxelMagic = {'R', 'X', 'L', '1'};
inline constexpr std::array<char, 4> kRayMapMagic = {'R', 'X', 'M', '1'};
inline constexpr std::size_t kRaxelHeaderBytes = 16;

// --- text ------------------------------------------------------------------

inline std::string format_real(double v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, 17);
  return std::string(buf.data(), res.ptr);
}

inline std::string format_trajectory(const Trajectory& t) {
  const Intrinsics& k0 = t[0].intrinsics;
  std::string out;
  out += std::string(kTrajectoryMagic) + " " + std::string(kTrajectoryVersion) + " " + std::to_string(k0.width()) +
         " " + std::to_string(k0.height()) + " " + std::to_string(t.reference_index()) + "\n";
  for (const auto& f : t.frames()) {
    if (f.intrinsics.width() != k0.width() || f.intrinsics.height() != k0.height()) {
      throw Error(ErrorCode::InvalidArgument, "trajectory files require one image size for all frames");
    }
    out += std::to_string(f.index);
    for (double v : {f.intrinsics.fx(), f.intrinsics.fy(), f.intrinsics.cx(), f.intrinsics.cy()}) {
      out += ' ';
      out += format_real(v);
    }
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) {
        out += ' ';
        out += format_real(f.pose.rotation()(r, c));
      }
      out += ' ';
      out += format_real(f.pose.translation()[r]);
    }
    out += '\n';
  }
  return out;
}

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) fields.push_back(line.substr(start, i - start));
  }
  return fields;
}

[[noreturn]] inline void parse_fail(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + what);
}

template <typename T>
T parse_number(std::string_view field, std::size_t line, const char* what) {
  T value{};
  const auto res = std::from_chars(field.data(), field.data() + field.size(), value);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    parse_fail(line, std::string("invalid ") + what + " '" + std::string(field) + "'");
  }
  return value;
}

}  // namespace detail

inline Trajectory parse_trajectory(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::size_t end = nl == std::string_view::npos ? text.size() : nl;
    lines.push_back(text.substr(pos, end - pos));
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }

  if (lines.empty() || detail::split_fields(lines[0]).empty()) detail::parse_fail(1, "missing header");
  const auto header = detail::split_fields(lines[0]);
  if (header.size() != 5 || header[0] != kTrajectoryMagic || header[1] != kTrajectoryVersion) {
    detail::parse_fail(1, "expected 'raxelkit-traj v1 <width> <height> <reference_index>'");
  }
  const int width = detail::parse_number<int>(header[2], 1, "width");
  const int height = detail::parse_number<int>(header[3], 1, "height");
  const auto reference = detail::parse_number<std::size_t>(header[4], 1, "reference index");

  std::vector<CameraFrame> frames;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const std::size_t line_no = li + 1;
    const auto f = detail::split_fields(lines[li]);
    if (f.empty()) continue;
    if (f.size() != 17) {
      detail::parse_fail(line_no, "expected 17 fields, found " + std::to_string(f.size()));
    }
    const auto index = detail::parse_number<std::size_t>(f[0], line_no, "frame index");
    std::array<double, 16> v{};
    for (std::size_t k = 0; k < 16; ++k) v[k] = detail::parse_number<double>(f[k + 1], line_no, "real");
    Mat3 r;
    Vec3 t;
    for (int row = 0; row < 3; ++row) {
      for (int col = 0; col < 3; ++col) r(row, col) = v[4 + row * 4 + col];
      t[row] = v[4 + row * 4 + 3];
    }
    try {
      frames.push_back({Intrinsics(v[0], v[1], v[2], v[3], width, height), Pose(r, t), index});
    } catch (const Error& e) {
      detail::parse_fail(line_no, e.what());
    }
  }
  try {
    return Trajectory(std::move(frames), reference);
  } catch (const Error& e) {
    detail::parse_fail(1, e.what());
  }
}

// --- binary ----------------------------------------------------------------

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xFFu));
}

inline void put_f64(std::string& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xFFu));
}

inline std::uint32_t get_u32(std::string_view in, std::size_t at) {
  std::uint32_t v = 0;
  for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[at + b])) << (8 * b);
  return v;
}

inline double get_f64(std::string_view in, std::size_t at) {
  std::uint64_t bits = 0;
  for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[at + b])) << (8 * b);
  return std::bit_cast<double>(bits);
}

template <int Channels>
constexpr const std::array<char, 4>& magic_for() {
  static_assert(Channels == 3 || Channels == 6);
  if constexpr (Channels == 3) {
    return kRaxelMagic;
  } else {
    return kRayMapMagic;
  }
}

}  // namespace detail

template <int Channels>
struct GridRecord {
  std::uint32_t frame_index = 0;
  RayGrid<Channels> grid;
};

using RaxelRecord = GridRecord<3>;

template <int Channels>
std::string serialize_grid(const RayGrid<Channels>& grid, std::uint32_t frame_index) {
  std::string out;
  out.reserve(kRaxelHeaderBytes + grid.size() * Channels * 8);
  const auto& magic = detail::magic_for<Channels>();
  out.append(magic.data(), magic.size());
  detail::put_u32(out, static_cast<std::uint32_t>(grid.height()));
  detail::put_u32(out, static_cast<std::uint32_t>(grid.width()));
  detail::put_u32(out, frame_index);
  for (const auto& p : grid.pixels()) {
    for (int c = 0; c < Channels; ++c) detail::put_f64(out, p[c]);
  }
  return out;
}

/// Number of channels announced by a raxel file's magic (3 or 6), or 0.
inline int grid_channels(std::string_view bytes) {
  if (bytes.size() < 4) return 0;
  if (std::equal(kRaxelMagic.begin(), kRaxelMagic.end(), bytes.begin())) return 3;
  if (std::equal(kRayMapMagic.begin(), kRayMapMagic.end(), bytes.begin())) return 6;
  return 0;
}

template <int Channels>
GridRecord<Channels> deserialize_grid(std::string_view bytes) {
  if (bytes.size() < kRaxelHeaderBytes || grid_channels(bytes) != Channels) {
    throw Error(ErrorCode::ParseError, "bad raxel file magic or truncated header");
  }
  const std::uint32_t height = detail::get_u32(bytes, 4);
  const std::uint32_t width = detail::get_u32(bytes, 8);
  const std::uint32_t index = detail::get_u32(bytes, 12);
  const std::uint64_t expected = kRaxelHeaderBytes + std::uint64_t{height} * width * Channels * 8;
  if (height == 0 || width == 0 || bytes.size() != expected) {
    throw Error(ErrorCode::ParseError, "raxel payload is " + std::to_string(bytes.size()) + " bytes, expected " +
                                           std::to_string(expected));
  }
  GridRecord<Channels> rec{index, RayGrid<Channels>(static_cast<int>(height), static_cast<int>(width))};
  std::size_t at = kRaxelHeaderBytes;
  for (auto& p : rec.grid.pixels()) {
    for (int c = 0; c < Channels; ++c, at += 8) p[c] = detail::get_f64(bytes, at);
  }
  return rec;
}

// --- filesystem ------------------------------------------------------------

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::IoError, "read failed for " + path.string());
  return bytes;
}

/// Collects files under temporary names and renames them into place on
/// commit(). Uncommitted temporaries are removed on destruction.
class StagedWriter {
 public:
  StagedWriter() = default;
  StagedWriter(const StagedWriter&) = delete;
  StagedWriter& operator=(const StagedWriter&) = delete;
  ~StagedWriter() {
    std::error_code ec;
    for (const auto& [tmp, final_path] : staged_) std::filesystem::remove(tmp, ec);
  }

  void stage(const std::filesystem::path& path, std::string_view bytes) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
    staged_.emplace_back(tmp, path);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.close();
    if (!out) throw Error(ErrorCode::IoError, "write failed for " + tmp.string());
  }

  void commit() {
    for (const auto& [tmp, final_path] : staged_) {
      std::error_code ec;
      std::filesystem::rename(tmp, final_path, ec);
      if (ec) throw Error(ErrorCode::IoError, "cannot rename into " + final_path.string() + ": " + ec.message());
    }
    staged_.clear();
  }

 private:
  std::vector<std::pair<std::filesystem::path, std::filesystem::path>> staged_;
};

inline Trajectory load_trajectory(const std::filesystem::path& path) { return parse_trajectory(read_file(path)); }

inline void save_trajectory(const std::filesystem::path& path, const Trajectory& t) {
  StagedWriter w;
  w.stage(path, format_trajectory(t));
  w.commit();
}

template <int Channels>
void save_grid(const std::filesystem::path& path, const RayGrid<Channels>& grid, std::uint32_t frame_index) {
  StagedWriter w;
  w.stage(path, serialize_grid(grid, frame_index));
  w.commit();
}

inline RaxelRecord load_raxel(const std::filesystem::path& path) { return deserialize_grid<3>(read_file(path)); }

}  // namespace raxelkit::io
