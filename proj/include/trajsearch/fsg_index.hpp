#pragma once

// Flat structured grid: a uniform 3-D cell decomposition of the spatial
// extent of D. Only non-empty cells are stored (array G, sorted by the
// row-major cell number h); each refers to a slice of the lookup array A that
// lists the ids of the entries whose MBB overlaps the cell.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "trajsearch/engine.hpp"
#include "trajsearch/geometry.hpp"

namespace trajsearch {

struct GridSpec {
  Point3 origin;
  std::array<double, 3> cellSize{1.0, 1.0, 1.0};
  std::array<std::uint32_t, 3> counts{1, 1, 1};

  std::uint64_t total_cells() const noexcept {
    return std::uint64_t{counts[0]} * counts[1] * counts[2];
  }
};

using CellCoord = std::array<std::uint32_t, 3>;

struct FsgCell {
  std::uint64_t h;
  std::uint32_t aMin;  // inclusive range into A
  std::uint32_t aMax;

  friend bool operator==(const FsgCell&, const FsgCell&) = default;
};

/// Inclusive per-axis cell ranges covered by a box.
struct CellBlock {
  std::array<std::uint32_t, 3> lo{};
  std::array<std::uint32_t, 3> hi{};
  bool empty = true;

  std::uint64_t size() const noexcept {
    if (empty) return 0;
    return std::uint64_t{hi[0] - lo[0] + 1} * (hi[1] - lo[1] + 1) * (hi[2] - lo[2] + 1);
  }
};

/// Row-major cell number; throws PreconditionError for out-of-range coordinates.
std::uint64_t linearize(std::uint32_t cx, std::uint32_t cy, std::uint32_t cz, const GridSpec& spec);

/// Cells whose closed extent intersects `box`, clamped to the grid. A box
/// touching a cell face counts for both neighbours.
CellBlock rasterize_block(const Mbb& box, const GridSpec& spec) noexcept;
std::vector<CellCoord> rasterize_mbb(const Mbb& box, const GridSpec& spec);

struct CandidateResult {
  bool overflow = false;
  std::uint64_t total = 0;  // candidates the query needs (duplicates included)
};

class FsgIndex {
 public:
  /// Builds a grid with `counts` cells per axis over the extent of all MBBs.
  static FsgIndex build(std::span<const SegmentST> entries, std::array<std::uint32_t, 3> counts);

  /// Assembles an index from its arrays (used by the loader). Validates that
  /// G is strictly sorted by h, each h is inside the grid, and every slice is
  /// a valid range of A.
  static FsgIndex from_parts(GridSpec spec, std::vector<FsgCell> cells, std::vector<std::uint32_t> lookup);

  const GridSpec& spec() const noexcept { return spec_; }
  std::span<const FsgCell> cells() const noexcept { return cells_; }
  std::span<const std::uint32_t> lookup() const noexcept { return lookup_; }

  /// Binary search in G; null when the cell is empty.
  const FsgCell* find_cell(std::uint64_t h) const noexcept;

  /// Appends the A-slices of every non-empty cell overlapped by the query's
  /// MBB expanded by d, in ascending h order and without removing duplicate
  /// ids. If more than `capacity` ids would be needed, sets overflow, leaves
  /// `out` unspecified and reports the full count in `total`.
  CandidateResult get_candidates(const SegmentST& query, double d, std::size_t capacity,
                                 std::vector<std::uint32_t>& out) const;

  void save(std::ostream& out) const;
  static FsgIndex load(std::istream& in);
  void save(const std::string& path) const;
  static FsgIndex load(const std::string& path);

 private:
  GridSpec spec_;
  std::vector<FsgCell> cells_;
  std::vector<std::uint32_t> lookup_;
};

/// Default candidate buffer: 2 GiB worth of 32-bit entry ids.
inline constexpr std::uint64_t kDefaultCandidateBufferBytes = 2ull << 30;

struct SpatialSearchOptions {
  /// Total candidate-buffer size in entry ids, split equally among the
  /// queries of each invocation.
  std::uint64_t candidateBufferEntries = kDefaultCandidateBufferBytes / sizeof(std::uint32_t);
  BatchOptions batch;
};

/// Grid search with per-query candidate buffers and a redo loop for queries
/// whose buffers overflow. `entries` must be the array the index was built on.
BatchedRun search_spatial(const FsgIndex& index, std::span<const SegmentST> entries,
                          std::span<const SegmentST> queries, double d, const SpatialSearchOptions& opts = {});

}  // namespace trajsearch
