// Copyright 2026 The raxelkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <CLI11.hpp>

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "raxelkit/error.hpp"
#include "raxelkit/evalkit.hpp"
#include "raxelkit/geom.hpp"
#include "raxelkit/io.hpp"
#include "raxelkit/ray_decode.hpp"
#include "raxelkit/ray_encode.hpp"

// Command-line front end. run_cli() is the whole program; tools/raxelkit.cpp
// only forwards argv. Exit codes: 0 ok, 2 usage/parse, 3 I/O, 4 degenerate.

namespace raxelkit::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitDegenerate = 4;

inline constexpr std::string_view kCsvHeader =
    "kind,frames,magnitude,seed,mean_rot_err_rad,mean_trans_err,mrra30,reencode_residual";

inline int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::IoError: return kExitIo;
    case ErrorCode::DegenerateGeometry:
    case ErrorCode::InsufficientInliers: return kExitDegenerate;
    default: return kExitUsage;
  }
}

inline std::string fixed6(double v) {
  std::array<char, 64> buf{};
  const auto r = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::fixed, 6);
  return std::string(buf.data(), r.ptr);
}

inline std::string sci6(double v) {
  std::array<char, 64> buf{};
  const auto r = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::scientific, 6);
  return std::string(buf.data(), r.ptr);
}

/// kind label, frame count, magnitude, seed: the resumability key of a row.
inline std::string csv_key(std::string_view kind, std::size_t frames, double magnitude, std::uint64_t seed) {
  return std::string(kind) + "," + std::to_string(frames) + "," + io::format_real(magnitude) + "," +
         std::to_string(seed);
}

inline std::string csv_row(std::string_view kind, std::size_t frames, double magnitude, std::uint64_t seed,
                           const eval::CycleReport& r) {
  return csv_key(kind, frames, magnitude, seed) + "," + io::format_real(r.errors.mean_rotation_error) + "," +
         io::format_real(r.errors.mean_translation_error) + "," + io::format_real(r.mrra30) + "," +
         io::format_real(r.reencode_residual);
}

/// Label used in the kind column: "<trajectory>:<noise>".
inline std::string cell_label(std::string_view trajectory, eval::PerturbationKind noise) {
  return std::string(trajectory) + ":" + std::string(eval::to_string(noise));
}

namespace detail {

inline std::set<std::string> existing_csv_keys(const std::string& content) {
  std::set<std::string> keys;
  std::size_t pos = 0;
  while (pos < content.size()) {
    std::size_t nl = content.find('\n', pos);
    if (nl == std::string::npos) nl = content.size();
    const std::string line = content.substr(pos, nl - pos);
    pos = nl + 1;
    if (line.empty() || line == kCsvHeader) continue;
    std::size_t cut = std::string::npos;
    std::size_t from = 0;
    for (int commas = 0; commas < 4; ++commas) {
      cut = line.find(',', from);
      if (cut == std::string::npos) break;
      from = cut + 1;
    }
    keys.insert(cut == std::string::npos ? line : line.substr(0, cut));
  }
  return keys;
}

// Appends rows to a CSV file (creating it with a header), via a staged write.
inline void append_csv(const std::filesystem::path& path, const std::vector<std::string>& rows) {
  std::string content;
  if (std::filesystem::exists(path)) content = io::read_file(path);
  if (content.empty()) content = std::string(kCsvHeader) + "\n";
  if (content.back() != '\n') content += '\n';
  for (const auto& r : rows) content += r + "\n";
  io::StagedWriter w;
  w.stage(path, content);
  w.commit();
}

inline void print_report(std::ostream& out, const eval::CycleReport& r) {
  out << "mean_rot_err=" << sci6(r.errors.mean_rotation_error) << "\n"
      << "mean_trans_err=" << sci6(r.errors.mean_translation_error) << "\n"
      << "mrra30=" << fixed6(r.mrra30) << "\n"
      << "reencode_residual=" << sci6(r.reencode_residual) << "\n";
}

// Score of how closely a raxel image matches an identity-pose bundle:
// rms distance to the ray grid synthesized from focal lengths recovered
// under the identity pose. Infinite when recovery fails.
inline double identity_bundle_score(const RaxelImage& image, const ImageGeometry& g) {
  try {
    const FocalEstimate f = recover_focal(image, Pose::identity(), g);
    const RaxelImage ideal = ray_grid(Intrinsics(f.fx, f.fy, g.cx, g.cy, g.width, g.height));
    double sq = 0.0;
    for (std::size_t p = 0; p < image.size(); ++p) sq += (image[p] - ideal[p]).squaredNorm();
    return std::sqrt(sq / static_cast<double>(image.size()));
  } catch (const Error&) {
    return std::numeric_limits<double>::infinity();
  }
}

}  // namespace detail

// --- commands ---------------------------------------------------------------

struct EncodeOptions {
  std::string trajectory;
  std::string out_dir;
  std::string representation = "raxel";
};

inline int cmd_encode(const EncodeOptions& o, std::ostream& out) {
  const Trajectory t = canonicalize(io::load_trajectory(o.trajectory));
  std::error_code ec;
  std::filesystem::create_directories(o.out_dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + o.out_dir + ": " + ec.message());

  io::StagedWriter writer;
  for (const auto& f : t.frames()) {
    const auto index = static_cast<std::uint32_t>(f.index);
    std::string bytes;
    if (o.representation == "raxel") {
      bytes = io::serialize_grid(encode_raxel(f, f.pose), index);
    } else if (o.representation == "plucker") {
      bytes = io::serialize_grid(encode_plucker(f, f.pose).grid, index);
    } else {
      bytes = io::serialize_grid(encode_raymap(f, f.pose).grid, index);
    }
    writer.stage(std::filesystem::path(o.out_dir) / ("frame_" + std::to_string(f.index) + ".rxl"), bytes);
  }
  writer.commit();
  out << "wrote " << t.size() << " " << o.representation << " files to " << o.out_dir << "\n";
  return kExitOk;
}

struct DecodeOptions {
  std::string raxel_dir;
  std::string out_trajectory;
  int width = 0;   // 0: twice the raxel grid
  int height = 0;
  long long reference = -1;  // frame index; -1: auto-detect
};

inline int cmd_decode(const DecodeOptions& o, std::ostream& out, std::ostream& err) {
  std::error_code ec;
  if (!std::filesystem::is_directory(o.raxel_dir, ec)) {
    throw Error(ErrorCode::IoError, o.raxel_dir + " is not a readable directory");
  }
  std::vector<std::filesystem::path> paths;
  for (const auto& entry : std::filesystem::directory_iterator(o.raxel_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".rxl") paths.push_back(entry.path());
  }
  std::sort(paths.begin(), paths.end());
  if (paths.empty()) throw Error(ErrorCode::ParseError, "no .rxl files in " + o.raxel_dir);

  std::vector<io::RaxelRecord> records;
  for (const auto& p : paths) {
    const std::string bytes = io::read_file(p);
    if (io::grid_channels(bytes) == 6) {
      throw Error(ErrorCode::ParseError, p.filename().string() + ": six-channel encodings cannot be decoded");
    }
    try {
      records.push_back(io::deserialize_grid<3>(bytes));
    } catch (const Error& e) {
      throw Error(ErrorCode::ParseError, p.filename().string() + ": " + e.what());
    }
  }
  std::sort(records.begin(), records.end(),
            [](const auto& a, const auto& b) { return a.frame_index < b.frame_index; });
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!records[i].grid.same_shape(records[0].grid)) {
      throw Error(ErrorCode::ParseError, "raxel files have mixed grid sizes");
    }
    if (i > 0 && records[i].frame_index == records[i - 1].frame_index) {
      throw Error(ErrorCode::ParseError, "duplicate frame index " + std::to_string(records[i].frame_index));
    }
  }

  const int width = o.width > 0 ? o.width : 2 * records[0].grid.width();
  const int height = o.height > 0 ? o.height : 2 * records[0].grid.height();
  const auto [rows, cols] = raxel_grid_shape(height, width);
  if (rows != records[0].grid.height() || cols != records[0].grid.width()) {
    throw Error(ErrorCode::ParseError, "--width/--height do not match the raxel grid");
  }
  const ImageGeometry geometry = ImageGeometry::centered(width, height);

  std::vector<RaxelImage> images;
  for (const auto& r : records) images.push_back(r.grid);

  std::size_t reference = 0;
  if (o.reference >= 0) {
    const auto it = std::find_if(records.begin(), records.end(), [&](const auto& r) {
      return static_cast<long long>(r.frame_index) == o.reference;
    });
    if (it == records.end()) throw Error(ErrorCode::ParseError, "no file for --reference " + std::to_string(o.reference));
    reference = static_cast<std::size_t>(it - records.begin());
  } else {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < images.size(); ++i) {
      const double score = detail::identity_bundle_score(images[i], geometry);
      if (score < best) {
        best = score;
        reference = i;
      }
    }
  }

  const auto results = decode_trajectory(images, reference, geometry);
  std::vector<CameraFrame> frames;
  std::size_t out_reference = 0;
  for (const auto& r : results) {
    if (!r.ok()) {
      err << "frame_index " << records[r.frame].frame_index << " failed: " << r.message << "\n";
      continue;
    }
    if (r.frame == reference) out_reference = frames.size();
    const auto& d = *r.decoded;
    frames.push_back({Intrinsics(d.fx_hat, d.fy_hat, geometry.cx, geometry.cy, width, height), d.pose,
                      records[r.frame].frame_index});
  }
  if (frames.empty() || !results[reference].ok()) {
    err << "no decodable frames (reference frame_index " << records[reference].frame_index << ")\n";
    return kExitDegenerate;
  }
  io::save_trajectory(o.out_trajectory, Trajectory(std::move(frames), out_reference));
  out << "decoded " << results.size() << " frames (reference frame_index " << records[reference].frame_index
      << ") to " << o.out_trajectory << "\n";
  return kExitOk;
}

struct RoundtripOptions {
  std::string trajectory;
  std::string noise_kind = "gaussian";
  double magnitude = 0.0;
  std::uint64_t seed = 0;
  std::string csv;
  std::string label = "file";
};

inline int cmd_roundtrip(const RoundtripOptions& o, std::ostream& out) {
  const auto kind = eval::parse_perturbation_kind(o.noise_kind);
  if (!kind) throw Error(ErrorCode::InvalidArgument, "unknown noise kind " + o.noise_kind);
  const eval::PerturbationSpec spec{*kind, o.magnitude, o.seed};
  spec.validate();
  const Trajectory t = io::load_trajectory(o.trajectory);
  const eval::CycleReport r = eval::cycle_consistency_run(t, spec);
  detail::print_report(out, r);
  if (!o.csv.empty()) {
    detail::append_csv(o.csv, {csv_row(cell_label(o.label, *kind), t.size(), o.magnitude, o.seed, r)});
  }
  return kExitOk;
}

inline int cmd_metrics(const std::string& predicted_path, const std::string& ground_truth_path, std::ostream& out) {
  const Trajectory pred = canonicalize(io::load_trajectory(predicted_path));
  const Trajectory gt = canonicalize(io::load_trajectory(ground_truth_path));
  const eval::PoseErrorReport r = eval::pose_errors(pred, gt);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    out << "frame=" << pred[i].index << " rot_err=" << sci6(r.rotation_error[i])
        << " trans_err=" << sci6(r.translation_error[i]) << "\n";
  }
  out << "mean_rot_err=" << sci6(r.mean_rotation_error) << "\n"
      << "mean_trans_err=" << sci6(r.mean_translation_error) << "\n";
  if (pred.size() >= 2) {
    out << "mrra30=" << fixed6(eval::mrra(pred, gt, 30.0)) << "\n";
  } else {
    out << "mrra30=n/a\n";
  }
  return kExitOk;
}

struct SynthOptions {
  std::string kind;
  int frames = 0;
  std::string out_path;
  double radius = 2.0;
  double fov = 60.0;
  std::uint64_t seed = 0;
  int reverse = 0;  // number of time reversals to apply
  int width = 832;
  int height = 480;
};

inline int cmd_synth(const SynthOptions& o, std::ostream& out) {
  const auto kind = eval::parse_trajectory_kind(o.kind);
  if (!kind) throw Error(ErrorCode::InvalidArgument, "unknown trajectory kind " + o.kind);
  const Intrinsics k = Intrinsics::from_fov(o.fov, o.width, o.height);
  Trajectory t = eval::generate_trajectory(*kind, o.frames, k, o.radius, o.seed);
  for (int i = 0; i < o.reverse; ++i) t = eval::reverse_trajectory(t);
  io::save_trajectory(o.out_path, t);
  out << "wrote " << t.size() << " frames to " << o.out_path << "\n";
  return kExitOk;
}

struct BenchOptions {
  std::string out;
  std::vector<std::string> kinds = {"arcleft", "arcright", "orbit", "line"};
  std::vector<double> magnitudes = {0.001, 0.005, 0.01, 0.05};
  int seeds = 20;
  std::uint64_t seed_start = 0;
  eval::SweepSetup setup;
  std::string noise_kind = "gaussian";
  int threads = 0;  // 0: hardware concurrency
};

/// Runs every (kind, magnitude, seed) cell not already present in the output
/// CSV and appends the new rows in grid order. Results do not depend on the
/// thread count.
inline int cmd_bench(BenchOptions o, std::ostream& out) {
  const auto noise = eval::parse_perturbation_kind(o.noise_kind);
  if (!noise) throw Error(ErrorCode::InvalidArgument, "unknown noise kind " + o.noise_kind);
  o.setup.noise = *noise;
  if (o.seeds < 1) throw Error(ErrorCode::InvalidArgument, "--seeds must be at least 1");

  struct Pending {
    std::string kind_label;
    eval::SweepCell cell;
    std::string row;
    std::string error;
  };
  std::set<std::string> done;
  if (std::filesystem::exists(o.out)) done = detail::existing_csv_keys(io::read_file(o.out));

  std::vector<Pending> pending;
  for (const auto& name : o.kinds) {
    const auto kind = eval::parse_trajectory_kind(name);
    if (!kind) throw Error(ErrorCode::InvalidArgument, "unknown trajectory kind " + name);
    for (double m : o.magnitudes) {
      eval::PerturbationSpec{*noise, m, 0}.validate();
      for (int s = 0; s < o.seeds; ++s) {
        const std::uint64_t seed = o.seed_start + static_cast<std::uint64_t>(s);
        const std::string label = cell_label(name, *noise);
        if (done.count(csv_key(label, static_cast<std::size_t>(o.setup.frames), m, seed))) continue;
        pending.push_back({label, {*kind, m, seed}, {}, {}});
      }
    }
  }

  unsigned workers = o.threads > 0 ? static_cast<unsigned>(o.threads) : std::thread::hardware_concurrency();
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(pending.size())));
  auto work = [&](unsigned w) {
    for (std::size_t i = w; i < pending.size(); i += workers) {
      auto& p = pending[i];
      try {
        const eval::CycleReport r = eval::run_sweep_cell(o.setup, p.cell);
        p.row = csv_row(p.kind_label, static_cast<std::size_t>(o.setup.frames), p.cell.magnitude, p.cell.seed, r);
      } catch (const Error& e) {
        p.error = e.what();
      }
    }
  };
  if (workers <= 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& th : pool) th.join();
  }

  std::vector<std::string> rows;
  for (const auto& p : pending) {
    if (!p.error.empty()) throw Error(ErrorCode::DegenerateGeometry, "sweep cell failed: " + p.error);
    rows.push_back(p.row);
  }
  if (!rows.empty() || !std::filesystem::exists(o.out)) detail::append_csv(o.out, rows);
  out << "bench: " << rows.size() << " new rows, " << done.size() << " existing, written to " << o.out << "\n";
  return kExitOk;
}

// --- dispatch ---------------------------------------------------------------

inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"raxelkit: camera rays as pixels toolkit", "raxelkit"};
  app.require_subcommand(1);

  EncodeOptions enc;
  auto* encode = app.add_subcommand("encode", "Encode a trajectory file into per-frame ray images");
  encode->add_option("trajectory", enc.trajectory, "Trajectory file")->required();
  encode->add_option("out_dir", enc.out_dir, "Output directory")->required();
  encode->add_option("--representation", enc.representation, "raxel | plucker | raymap")
      ->check(CLI::IsMember({"raxel", "plucker", "raymap"}));

  DecodeOptions dec;
  auto* decode = app.add_subcommand("decode", "Recover a trajectory from a directory of raxel files");
  decode->add_option("raxel_dir", dec.raxel_dir, "Directory of .rxl files")->required();
  decode->add_option("out_trajectory", dec.out_trajectory, "Output trajectory file")->required();
  decode->add_option("--width", dec.width, "Full-resolution image width")->check(CLI::PositiveNumber);
  decode->add_option("--height", dec.height, "Full-resolution image height")->check(CLI::PositiveNumber);
  decode->add_option("--reference", dec.reference, "Frame index of the reference frame")
      ->check(CLI::NonNegativeNumber);

  RoundtripOptions rt;
  auto* roundtrip = app.add_subcommand("roundtrip", "Encode, perturb, decode and re-encode a trajectory");
  roundtrip->add_option("trajectory", rt.trajectory, "Trajectory file")->required();
  roundtrip->add_option("--noise-kind", rt.noise_kind, "gaussian | quantize | dropout")
      ->check(CLI::IsMember({"gaussian", "quantize", "dropout"}));
  roundtrip->add_option("--magnitude", rt.magnitude, "sigma, bit depth or dropout fraction")
      ->check(CLI::NonNegativeNumber);
  roundtrip->add_option("--seed", rt.seed, "Perturbation seed");
  roundtrip->add_option("--csv", rt.csv, "Append a result row to this CSV file");
  roundtrip->add_option("--label", rt.label, "Trajectory label for the CSV kind column");

  std::string pred_path;
  std::string gt_path;
  auto* metrics = app.add_subcommand("metrics", "Pose errors and mRRA@30 between two trajectory files");
  metrics->add_option("predicted", pred_path, "Predicted trajectory file")->required();
  metrics->add_option("ground_truth", gt_path, "Ground-truth trajectory file")->required();

  SynthOptions syn;
  auto* synth = app.add_subcommand("synth", "Write a synthetic trajectory file");
  synth->add_option("kind", syn.kind, "arcleft | arcright | orbit | line | still")
      ->required()
      ->check(CLI::IsMember({"arcleft", "arcright", "orbit", "line", "still"}));
  synth->add_option("frames", syn.frames, "Frame count")->required()->check(CLI::PositiveNumber);
  synth->add_option("out_path", syn.out_path, "Output trajectory file")->required();
  synth->add_option("--radius", syn.radius, "Arc/orbit radius or line extent")->check(CLI::NonNegativeNumber);
  synth->add_option("--fov", syn.fov, "Horizontal field of view in degrees")->check(CLI::Range(0.0, 180.0));
  synth->add_option("--seed", syn.seed, "Generator seed");
  synth->add_flag("--reverse", syn.reverse, "Apply time reversal (repeatable)");
  synth->add_option("--width", syn.width, "Image width")->check(CLI::PositiveNumber);
  synth->add_option("--height", syn.height, "Image height")->check(CLI::PositiveNumber);

  BenchOptions bench_opts;
  auto* bench = app.add_subcommand("bench", "Noise-robustness sweep written as CSV");
  bench->add_option("--out", bench_opts.out, "Output CSV (resumable)")->required();
  bench->add_option("--kinds", bench_opts.kinds, "Trajectory kinds")->delimiter(',');
  bench->add_option("--magnitudes", bench_opts.magnitudes, "Perturbation magnitudes")->delimiter(',');
  bench->add_option("--seeds", bench_opts.seeds, "Seeds per cell")->check(CLI::PositiveNumber);
  bench->add_option("--seed-start", bench_opts.seed_start, "First seed");
  bench->add_option("--frames", bench_opts.setup.frames, "Frames per trajectory")->check(CLI::PositiveNumber);
  bench->add_option("--width", bench_opts.setup.width, "Image width")->check(CLI::PositiveNumber);
  bench->add_option("--height", bench_opts.setup.height, "Image height")->check(CLI::PositiveNumber);
  bench->add_option("--fov", bench_opts.setup.fov_degrees, "Horizontal field of view in degrees")
      ->check(CLI::Range(0.0, 180.0));
  bench->add_option("--radius", bench_opts.setup.radius, "Arc/orbit radius or line extent")
      ->check(CLI::NonNegativeNumber);
  bench->add_option("--noise-kind", bench_opts.noise_kind, "gaussian | quantize | dropout")
      ->check(CLI::IsMember({"gaussian", "quantize", "dropout"}));
  bench->add_option("--threads", bench_opts.threads, "Worker threads (0: all cores)")->check(CLI::NonNegativeNumber);

  std::vector<const char*> argv;
  argv.push_back("raxelkit");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*encode) return cmd_encode(enc, out);
    if (*decode) return cmd_decode(dec, out, err);
    if (*roundtrip) return cmd_roundtrip(rt, out);
    if (*metrics) return cmd_metrics(pred_path, gt_path, out);
    if (*synth) return cmd_synth(syn, out);
    if (*bench) return cmd_bench(bench_opts, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitUsage;
}

}  // namespace raxelkit::cli
