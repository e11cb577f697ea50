#pragma once

#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "trajsearch/geometry.hpp"

namespace trajsearch {

/// Segments of one trajectory are contiguous, ordered by segment id, and
/// chained end-to-start exactly. Trajectory and segment ids are dense from 0.
struct TrajectoryDataset {
  std::vector<SegmentST> segments;
  std::string name;
  std::string units;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> parameters;

  std::size_t size() const noexcept { return segments.size(); }
  std::span<const SegmentST> view() const noexcept { return segments; }
};

struct RandomWalkParams {
  std::uint32_t nTrajectories = 2500;
  std::uint32_t nTimesteps = 400;
  double startWindow = 100.0;
  double initialBox = 1000.0;
  double stepMax = 1.0;
  std::uint64_t seed = 1;
};

struct DenseWalkParams {
  std::uint32_t nParticles = 65536;
  std::uint32_t nTimesteps = 193;
  double density = 0.112;  // particles per pc^3
  double stepMin = 1.0;    // pc
  double stepMax = 5.0;    // pc
  double escapeFraction = 0.2;
  std::uint64_t seed = 1;

  /// Side length of the cube holding nParticles at the requested density.
  double cube_side() const;
};

/// Receives one complete trajectory at a time, in trajectory-id order.
using TrajectorySink = std::function<void(std::span<const SegmentST>)>;

/// Name, units, seed and parameters of a generated dataset, without segments.
TrajectoryDataset describe_dataset(const RandomWalkParams& p);
TrajectoryDataset describe_dataset(const DenseWalkParams& p);

TrajectoryDataset generate_random_walk(const RandomWalkParams& p);
TrajectoryDataset generate_random_dense(const DenseWalkParams& p);

/// Streaming forms of the generators; identical output, O(nTimesteps) memory.
void generate_random_walk(const RandomWalkParams& p, const TrajectorySink& sink);
void generate_random_dense(const DenseWalkParams& p, const TrajectorySink& sink);

/// Throws ParseError (record index) on the first violation of the dataset
/// invariants: valid segments, contiguous dense ids, exact continuity.
void validate_dataset(std::span<const SegmentST> segments);

enum class DatasetFormat { Csv, Binary };

/// Picks Binary for a ".bin"/".trj" extension, Csv otherwise.
DatasetFormat format_for_path(const std::string& path);

inline constexpr const char* kDatasetCsvHeader =
    "traj_id,seg_id,x_start,y_start,z_start,t_start,x_end,y_end,z_end,t_end";

void write_dataset_csv(std::span<const SegmentST> segments, std::ostream& out);
void write_dataset_binary(std::span<const SegmentST> segments, std::ostream& out);
TrajectoryDataset read_dataset_csv(std::istream& in);
TrajectoryDataset read_dataset_binary(std::istream& in);

void write_dataset(const TrajectoryDataset& ds, const std::string& path, DatasetFormat format);
void write_dataset(const TrajectoryDataset& ds, const std::string& path);
TrajectoryDataset read_dataset(const std::string& path);

/// Metadata sidecar (`<path>.meta.json`): name, units, seed, parameters.
void write_metadata(const TrajectoryDataset& ds, const std::string& path);
void write_metadata(const TrajectoryDataset& ds, std::uint64_t segmentCount, const std::string& path);

/// Incremental writer for datasets too large to hold in memory. The segment
/// count is part of the binary header, so it must be announced up front.
class DatasetWriter {
 public:
  DatasetWriter(const std::string& path, DatasetFormat format, std::uint64_t expected);
  void append(std::span<const SegmentST> segments);
  /// Throws unless exactly `expected` segments were appended.
  void finish();

 private:
  std::string path_;
  DatasetFormat format_;
  std::uint64_t expected_;
  std::uint64_t written_ = 0;
  std::ofstream out_;
};

}  // namespace trajsearch
