#include "trajsearch/dataset.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "binary_io.hpp"
#include "trajsearch/errors.hpp"

namespace trajsearch {
namespace {

using detail::get;
using detail::put;

// Per-trajectory stream so output does not depend on generation order.
std::mt19937_64 trajectory_rng(std::uint64_t seed, std::uint32_t trajectory, std::uint32_t tag) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    trajectory, tag};
  return std::mt19937_64(seq);
}

// Uniform double in [0, 1) from the top 53 bits; portable across standard libraries.
double canonical(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double uniform(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * canonical(rng); }

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void emit_trajectory(std::vector<SegmentST>& scratch, const std::vector<Point3>& pos,
                     const std::vector<double>& times, std::uint32_t traj,
                     const TrajectorySink& sink) {
  scratch.clear();
  for (std::size_t k = 0; k + 1 < pos.size(); ++k) {
    scratch.push_back({traj, static_cast<std::uint32_t>(k), pos[k], pos[k + 1], times[k], times[k + 1]});
  }
  sink(scratch);
}

TrajectoryDataset collect(const std::function<void(const TrajectorySink&)>& gen) {
  TrajectoryDataset ds;
  gen([&](std::span<const SegmentST> traj) {
    ds.segments.insert(ds.segments.end(), traj.begin(), traj.end());
  });
  return ds;
}

void check_walk(const RandomWalkParams& p) {
  if (p.nTimesteps < 2) throw ConfigError("random walk: nTimesteps must be >= 2");
  if (!(p.stepMax > 0.0)) throw ConfigError("random walk: stepMax must be > 0");
  if (!(p.startWindow >= 0.0) || !(p.initialBox >= 0.0)) {
    throw ConfigError("random walk: startWindow and initialBox must be >= 0");
  }
}

void check_dense(const DenseWalkParams& p) {
  if (p.nTimesteps < 2) throw ConfigError("random dense: nTimesteps must be >= 2");
  if (!(p.density > 0.0)) throw ConfigError("random dense: density must be > 0");
  if (!(p.stepMin >= 0.0) || !(p.stepMin <= p.stepMax)) {
    throw ConfigError("random dense: need 0 <= stepMin <= stepMax");
  }
  if (!(p.escapeFraction >= 0.0)) throw ConfigError("random dense: escapeFraction must be >= 0");
}

template <typename T>
bool parse_field(std::string_view field, T& out) {
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

}  // namespace

double DenseWalkParams::cube_side() const { return std::cbrt(static_cast<double>(nParticles) / density); }

void generate_random_walk(const RandomWalkParams& p, const TrajectorySink& sink) {
  check_walk(p);
  std::vector<Point3> pos(p.nTimesteps);
  std::vector<double> times(p.nTimesteps);
  std::vector<SegmentST> scratch;
  scratch.reserve(p.nTimesteps);
  for (std::uint32_t traj = 0; traj < p.nTrajectories; ++traj) {
    auto rng = trajectory_rng(p.seed, traj, 0x52574b31u);
    const double t0 = uniform(rng, 0.0, p.startWindow);
    Point3 cur{uniform(rng, 0.0, p.initialBox), uniform(rng, 0.0, p.initialBox),
               uniform(rng, 0.0, p.initialBox)};
    for (std::uint32_t k = 0; k < p.nTimesteps; ++k) {
      if (k > 0) {
        for (int c = 0; c < 3; ++c) cur[c] += uniform(rng, -p.stepMax, p.stepMax);
      }
      pos[k] = cur;
      times[k] = t0 + static_cast<double>(k);
    }
    emit_trajectory(scratch, pos, times, traj, sink);
  }
}

void generate_random_dense(const DenseWalkParams& p, const TrajectorySink& sink) {
  check_dense(p);
  const double side = p.cube_side();
  const double slack = p.escapeFraction * side;
  std::vector<Point3> pos(p.nTimesteps);
  std::vector<double> times(p.nTimesteps);
  for (std::uint32_t k = 0; k < p.nTimesteps; ++k) times[k] = static_cast<double>(k);
  std::vector<SegmentST> scratch;
  scratch.reserve(p.nTimesteps);
  for (std::uint32_t traj = 0; traj < p.nParticles; ++traj) {
    auto rng = trajectory_rng(p.seed, traj, 0x44454e53u);
    Point3 cur{uniform(rng, 0.0, side), uniform(rng, 0.0, side), uniform(rng, 0.0, side)};
    std::array<int, 3> forced{0, 0, 0};  // +1/-1 while steering back into the cube
    for (std::uint32_t k = 0; k < p.nTimesteps; ++k) {
      if (k > 0) {
        for (int c = 0; c < 3; ++c) {
          const double mag = uniform(rng, p.stepMin, p.stepMax);
          int sign = canonical(rng) < 0.5 ? -1 : 1;
          if (forced[c] != 0) sign = forced[c];
          cur[c] += sign * mag;
          if (cur[c] < -slack) {
            forced[c] = 1;
          } else if (cur[c] > side + slack) {
            forced[c] = -1;
          } else if (forced[c] != 0 && cur[c] >= 0.0 && cur[c] <= side) {
            forced[c] = 0;
          }
        }
      }
      pos[k] = cur;
    }
    emit_trajectory(scratch, pos, times, traj, sink);
  }
}

TrajectoryDataset describe_dataset(const RandomWalkParams& p) {
  TrajectoryDataset ds;
  ds.name = "random-walk";
  ds.units = "arbitrary";
  ds.seed = p.seed;
  ds.parameters = {{"trajectories", std::to_string(p.nTrajectories)},
                   {"timesteps", std::to_string(p.nTimesteps)},
                   {"start_window", fmt17(p.startWindow)},
                   {"initial_box", fmt17(p.initialBox)},
                   {"step_max", fmt17(p.stepMax)}};
  return ds;
}

TrajectoryDataset describe_dataset(const DenseWalkParams& p) {
  TrajectoryDataset ds;
  ds.name = "random-dense";
  ds.units = "pc";
  ds.seed = p.seed;
  ds.parameters = {{"particles", std::to_string(p.nParticles)},
                   {"timesteps", std::to_string(p.nTimesteps)},
                   {"density", fmt17(p.density)},
                   {"step_min", fmt17(p.stepMin)},
                   {"step_max", fmt17(p.stepMax)},
                   {"escape_fraction", fmt17(p.escapeFraction)},
                   {"cube_side", fmt17(p.cube_side())}};
  return ds;
}

TrajectoryDataset generate_random_walk(const RandomWalkParams& p) {
  auto segments = collect([&](const TrajectorySink& s) { generate_random_walk(p, s); }).segments;
  auto ds = describe_dataset(p);
  ds.segments = std::move(segments);
  return ds;
}

TrajectoryDataset generate_random_dense(const DenseWalkParams& p) {
  auto segments = collect([&](const TrajectorySink& s) { generate_random_dense(p, s); }).segments;
  auto ds = describe_dataset(p);
  ds.segments = std::move(segments);
  return ds;
}

void validate_dataset(std::span<const SegmentST> segments) {
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& s = segments[i];
    if (!is_valid_segment(s)) {
      throw ParseError(i, "invalid segment (non-finite value or t_start >= t_end)");
    }
    if (i == 0) {
      if (s.trajectoryId != 0 || s.segmentId != 0) {
        throw ParseError(i, "ids must start at trajectory 0, segment 0");
      }
      continue;
    }
    const auto& prev = segments[i - 1];
    if (s.trajectoryId == prev.trajectoryId) {
      if (s.segmentId != prev.segmentId + 1) throw ParseError(i, "segment ids not consecutive");
      if (s.tStart != prev.tEnd) throw ParseError(i, "non-monotone time: t_start != previous t_end");
      if (!(s.start == prev.end)) throw ParseError(i, "discontinuous trajectory: start != previous end");
    } else if (s.trajectoryId == prev.trajectoryId + 1) {
      if (s.segmentId != 0) throw ParseError(i, "trajectory does not start at segment 0");
    } else {
      throw ParseError(i, "non-contiguous trajectory id " + std::to_string(s.trajectoryId));
    }
  }
}

DatasetFormat format_for_path(const std::string& path) {
  const auto dot = path.rfind('.');
  if (dot == std::string::npos) return DatasetFormat::Csv;
  const auto ext = path.substr(dot);
  return (ext == ".bin" || ext == ".trj") ? DatasetFormat::Binary : DatasetFormat::Csv;
}

namespace {

void put_record(std::ostream& out, const SegmentST& s) {
  put(out, s.trajectoryId);
  put(out, s.segmentId);
  for (double v : {s.start.x, s.start.y, s.start.z, s.tStart, s.end.x, s.end.y, s.end.z, s.tEnd}) {
    put(out, v);
  }
}

void put_csv_record(std::ostream& out, const SegmentST& s) {
  out << s.trajectoryId << ',' << s.segmentId << ',' << fmt17(s.start.x) << ',' << fmt17(s.start.y) << ','
      << fmt17(s.start.z) << ',' << fmt17(s.tStart) << ',' << fmt17(s.end.x) << ',' << fmt17(s.end.y) << ','
      << fmt17(s.end.z) << ',' << fmt17(s.tEnd) << '\n';
}

}  // namespace

void write_dataset_csv(std::span<const SegmentST> segments, std::ostream& out) {
  out << kDatasetCsvHeader << '\n';
  for (const auto& s : segments) put_csv_record(out, s);
}

void write_dataset_binary(std::span<const SegmentST> segments, std::ostream& out) {
  out.write("TRJ1", 4);
  put<std::uint64_t>(out, segments.size());
  for (const auto& s : segments) put_record(out, s);
}

DatasetWriter::DatasetWriter(const std::string& path, DatasetFormat format, std::uint64_t expected)
    : path_(path), format_(format), expected_(expected), out_(path, std::ios::binary) {
  if (!out_) throw IoError("cannot open '" + path + "' for writing");
  if (format_ == DatasetFormat::Binary) {
    out_.write("TRJ1", 4);
    put<std::uint64_t>(out_, expected_);
  } else {
    out_ << kDatasetCsvHeader << '\n';
  }
}

void DatasetWriter::append(std::span<const SegmentST> segments) {
  if (written_ + segments.size() > expected_) {
    throw PreconditionError("DatasetWriter: more than the announced " + std::to_string(expected_) + " segments");
  }
  for (const auto& s : segments) {
    if (format_ == DatasetFormat::Binary) {
      put_record(out_, s);
    } else {
      put_csv_record(out_, s);
    }
  }
  written_ += segments.size();
  if (!out_) throw IoError("write failed for '" + path_ + "'");
}

void DatasetWriter::finish() {
  if (written_ != expected_) {
    throw PreconditionError("DatasetWriter: wrote " + std::to_string(written_) + " of " +
                            std::to_string(expected_) + " announced segments");
  }
  out_.flush();
  if (!out_) throw IoError("write failed for '" + path_ + "'");
  out_.close();
}

TrajectoryDataset read_dataset_csv(std::istream& in) {
  TrajectoryDataset ds;
  std::string line;
  std::size_t lineNo = 1;
  if (!std::getline(in, line)) throw FormatError("empty CSV input: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kDatasetCsvHeader) throw FormatError("line 1: unexpected CSV header '" + line + "'");

  std::array<std::string_view, 10> fields;
  while (std::getline(in, line)) {
    ++lineNo;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::size_t record = ds.segments.size();
    std::size_t n = 0;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      if (n < fields.size()) fields[n] = rest.substr(0, comma);
      ++n;
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (n != fields.size()) {
      throw ParseError(record, "line " + std::to_string(lineNo) + ": expected 10 columns, found " +
                                   std::to_string(n));
    }
    SegmentST s;
    std::array<double*, 8> reals{&s.start.x, &s.start.y, &s.start.z, &s.tStart,
                                 &s.end.x,   &s.end.y,   &s.end.z,   &s.tEnd};
    bool ok = parse_field(fields[0], s.trajectoryId) && parse_field(fields[1], s.segmentId);
    for (std::size_t k = 0; ok && k < reals.size(); ++k) ok = parse_field(fields[k + 2], *reals[k]);
    if (!ok) throw ParseError(record, "line " + std::to_string(lineNo) + ": malformed number");
    ds.segments.push_back(s);
  }
  try {
    validate_dataset(ds.segments);
  } catch (const ParseError& e) {
    throw ParseError(e.record(), "line " + std::to_string(e.record() + 2) + ": " + e.what());
  }
  return ds;
}

TrajectoryDataset read_dataset_binary(std::istream& in) {
  char magic[4] = {};
  if (!in.read(magic, 4) || std::memcmp(magic, "TRJ1", 4) != 0) {
    throw FormatError("not a TRJ1 binary dataset (bad magic)");
  }
  std::uint64_t count = 0;
  if (!get(in, count)) throw FormatError("TRJ1: truncated header");
  TrajectoryDataset ds;
  ds.segments.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(count, 1u << 24)));
  for (std::uint64_t i = 0; i < count; ++i) {
    SegmentST s;
    bool ok = get(in, s.trajectoryId) && get(in, s.segmentId);
    for (double* v : {&s.start.x, &s.start.y, &s.start.z, &s.tStart, &s.end.x, &s.end.y, &s.end.z, &s.tEnd}) {
      ok = ok && get(in, *v);
    }
    if (!ok) throw ParseError(i, "TRJ1: truncated record");
    ds.segments.push_back(s);
  }
  validate_dataset(ds.segments);
  return ds;
}

void write_dataset(const TrajectoryDataset& ds, const std::string& path, DatasetFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  if (format == DatasetFormat::Binary) {
    write_dataset_binary(ds.segments, out);
  } else {
    write_dataset_csv(ds.segments, out);
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

void write_dataset(const TrajectoryDataset& ds, const std::string& path) {
  write_dataset(ds, path, format_for_path(path));
}

TrajectoryDataset read_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  char magic[4] = {};
  in.read(magic, 4);
  const bool binary = in.gcount() == 4 && std::memcmp(magic, "TRJ1", 4) == 0;
  in.clear();
  in.seekg(0);
  if (binary || format_for_path(path) == DatasetFormat::Binary) return read_dataset_binary(in);
  return read_dataset_csv(in);
}

void write_metadata(const TrajectoryDataset& ds, const std::string& path) {
  write_metadata(ds, ds.segments.size(), path);
}

void write_metadata(const TrajectoryDataset& ds, std::uint64_t segmentCount, const std::string& path) {
  nlohmann::json j;
  j["name"] = ds.name;
  j["units"] = ds.units;
  j["seed"] = ds.seed;
  j["segments"] = segmentCount;
  j["parameters"] = ds.parameters;
  std::ofstream out(path + ".meta.json");
  if (!out) throw IoError("cannot write metadata for '" + path + "'");
  out << j.dump(2) << '\n';
}

}  // namespace trajsearch
