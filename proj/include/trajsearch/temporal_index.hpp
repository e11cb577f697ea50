#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "trajsearch/engine.hpp"
#include "trajsearch/geometry.hpp"

namespace trajsearch {

/// Inclusive index range; `first < 0` marks an empty range.
struct IndexRange {
  std::int64_t first = -1;
  std::int64_t last = -1;

  bool empty() const noexcept { return first < 0; }
  std::size_t size() const noexcept { return empty() ? 0 : static_cast<std::size_t>(last - first + 1); }

  /// Smallest range covering both.
  IndexRange merged(const IndexRange& other) const noexcept;

  friend bool operator==(const IndexRange&, const IndexRange&) = default;
};

struct TemporalBin {
  double bStart = 0.0;
  double bEnd = 0.0;
  IndexRange members;  // [bFirst, bLast] into the sorted entry array
};

/// D sorted by tStart and cut into m fixed-length bins by start time. A bin's
/// end is stretched to cover the end times of its members.
class TemporalIndex {
 public:
  static TemporalIndex build(std::span<const SegmentST> entries, std::uint32_t m);

  std::span<const SegmentST> entries() const noexcept { return entries_; }
  /// originalIds()[i] is the position in the input of sorted entry i.
  std::span<const std::uint32_t> original_ids() const noexcept { return originalIds_; }
  std::span<const TemporalBin> bins() const noexcept { return bins_; }
  double t_min() const noexcept { return tMin_; }
  double t_max() const noexcept { return tMax_; }
  double bin_length() const noexcept { return binLength_; }

  /// Bin whose base slot [tMin + j b, tMin + (j+1) b) holds `t`, clamped.
  std::uint32_t bin_of(double t) const noexcept;

 private:
  std::vector<SegmentST> entries_;
  std::vector<std::uint32_t> originalIds_;
  std::vector<TemporalBin> bins_;
  double tMin_ = 0.0;
  double tMax_ = 0.0;
  double binLength_ = 0.0;
};

enum class ArraySelector : std::uint8_t { X = 0, Y = 1, Z = 2, Temporal = 3 };

struct ScheduleEntry {
  std::uint32_t queryId = 0;  // position in the caller's query array
  ArraySelector selector = ArraySelector::Temporal;
  IndexRange range;
};

using Schedule = std::vector<ScheduleEntry>;

/// Query ids ordered by non-decreasing tStart (stable).
std::vector<std::uint32_t> sort_queries_by_start(std::span<const SegmentST> queries);

inline bool bin_overlaps(const TemporalBin& bin, double t0, double t1) noexcept {
  return bin.bStart <= t1 && bin.bEnd >= t0;
}

/// First and last bins whose closed extents intersect [t0, t1] (bins in
/// between need not overlap). `cursor` is the first overlapping bin of the
/// previous, no-later-starting query; the scan starts there and advances it.
IndexRange overlapping_bins(const TemporalIndex& index, double t0, double t1, std::uint32_t& cursor);

/// One entry per query, in tStart order, holding the range of sorted entries
/// whose bins overlap the query in time.
Schedule build_schedule_temporal(const TemporalIndex& index, std::span<const SegmentST> queries);

BatchedRun search_temporal(const TemporalIndex& index, std::span<const SegmentST> queries,
                           const Schedule& schedule, double d, const BatchOptions& opts = {});

}  // namespace trajsearch
