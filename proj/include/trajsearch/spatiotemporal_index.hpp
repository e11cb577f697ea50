#pragma once

// Temporal bins further cut into v spatial slabs per dimension. For each of
// x, y and z an array lists entry ids grouped by (slab j, bin i), slab-major;
// a query whose d-expanded box falls in one slab of some dimension only has
// to scan that slab's blocks for its overlapping bins.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "trajsearch/temporal_index.hpp"

namespace trajsearch {

/// Slab count used when every segment is a point along some axis.
inline constexpr std::uint32_t kMaxSubbinCount = 1024;

struct SubbinBounds {
  std::array<std::uint32_t, 3> perDimension{};
  std::uint32_t admissible = 1;  // min over dimensions, at least 1
};

/// floor(extent / max segment extent) per dimension, capped at `cap`.
SubbinBounds max_subbin_count(std::span<const SegmentST> entries, std::uint32_t cap = kMaxSubbinCount);

/// Slab j of dimension k covers [origin[k] + j w[k], origin[k] + (j+1) w[k]);
/// coordinates below the first or beyond the last slab clamp to it.
struct SlabLayout {
  Point3 origin;
  std::array<double, 3> width{1.0, 1.0, 1.0};
};

struct SubbinDescriptor {
  std::array<IndexRange, 3> ranges;  // into X, Y, Z
};

class SpatioTemporalIndex {
 public:
  /// Slabs span the spatial extent of D evenly. Throws ConfigError unless
  /// 1 <= v <= max_subbin_count(D).admissible.
  static SpatioTemporalIndex build(std::span<const SegmentST> entries, std::uint32_t m, std::uint32_t v);

  /// Explicit slab geometry. Throws ConfigError if some entry would land in
  /// more than two slabs of a dimension.
  static SpatioTemporalIndex build(std::span<const SegmentST> entries, std::uint32_t m, std::uint32_t v,
                                   const SlabLayout& layout);

  /// Assembles an index from precomputed arrays. Checks shapes, id bounds,
  /// that block ranges follow the (j, i) layout and that ids ascend inside
  /// each block; it does not re-derive slab membership.
  static SpatioTemporalIndex from_parts(TemporalIndex base, std::uint32_t v, const SlabLayout& layout,
                                        std::array<std::vector<std::uint32_t>, 3> arrays,
                                        std::vector<SubbinDescriptor> descriptors);

  const TemporalIndex& base() const noexcept { return base_; }
  std::uint32_t v() const noexcept { return v_; }
  std::uint32_t m() const noexcept { return static_cast<std::uint32_t>(base_.bins().size()); }
  const SlabLayout& layout() const noexcept { return layout_; }
  std::span<const std::uint32_t> array(int dim) const noexcept { return arrays_[dim]; }
  const SubbinDescriptor& descriptor(std::uint32_t bin, std::uint32_t slab) const noexcept {
    return descriptors_[std::size_t{bin} * v_ + slab];
  }
  std::uint32_t slab_of(int dim, double x) const noexcept;

 private:
  TemporalIndex base_;
  std::uint32_t v_ = 1;
  SlabLayout layout_;
  std::array<std::vector<std::uint32_t>, 3> arrays_;
  std::vector<SubbinDescriptor> descriptors_;  // bin-major: [i * v + j]
};

/// Per query (in tStart order): among dimensions where the d-expanded query
/// box covers a single slab, the one with the shortest array range; otherwise
/// a temporal fallback with the temporal range. Entries are then stably sorted
/// by selector, fallback last.
Schedule build_schedule_st(const SpatioTemporalIndex& index, std::span<const SegmentST> queries, double d);

BatchedRun search_spatiotemporal(const SpatioTemporalIndex& index, std::span<const SegmentST> queries,
                                 const Schedule& schedule, double d, const BatchOptions& opts = {});

}  // namespace trajsearch
