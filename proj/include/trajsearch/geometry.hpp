#pragma once

// Continuous-time distance mathematics between linearly moving points.
//
// A segment moves linearly from `start` at `tStart` to `end` at `tEnd`. Two
// segments interact over the closed set of instants, inside their common
// temporal extent, at which their Euclidean separation is <= d. Because the
// separation vector is affine in t, that set is a single closed interval.

#include <array>
#include <cstdint>
#include <optional>

namespace trajsearch {

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  double operator[](int axis) const noexcept { return axis == 0 ? x : (axis == 1 ? y : z); }
  double& operator[](int axis) noexcept { return axis == 0 ? x : (axis == 1 ? y : z); }

  friend bool operator==(const Point3&, const Point3&) = default;
};

struct SegmentST {
  std::uint32_t trajectoryId = 0;
  std::uint32_t segmentId = 0;
  Point3 start;
  Point3 end;
  double tStart = 0.0;
  double tEnd = 0.0;

  double duration() const noexcept { return tEnd - tStart; }

  friend bool operator==(const SegmentST&, const SegmentST&) = default;
};

struct Mbb {
  Point3 min;
  Point3 max;

  bool intersects(const Mbb& other) const noexcept;

  friend bool operator==(const Mbb&, const Mbb&) = default;
};

/// Closed interval; zero length is allowed (tangential contact). Trivial so
/// result buffers can be allocated without touching memory.
struct TimeInterval {
  double begin;
  double end;

  double length() const noexcept { return end - begin; }

  friend bool operator==(const TimeInterval&, const TimeInterval&) = default;
};

/// One result record: a query segment, an entry segment, and the closed
/// interval during which they are within the distance threshold.
struct Interaction {
  std::uint32_t queryTrajectoryId;
  std::uint32_t querySegmentId;
  std::uint32_t entryTrajectoryId;
  std::uint32_t entrySegmentId;
  TimeInterval interval;

  friend bool operator==(const Interaction&, const Interaction&) = default;
};

/// True if every coordinate and time is finite and tStart < tEnd.
bool is_valid_segment(const SegmentST& seg) noexcept;

Mbb mbb_of_segment(const SegmentST& seg) noexcept;

/// Inflates every face of `box` outward by `d` (d >= 0).
Mbb expand_mbb(const Mbb& box, double d);

/// Linear interpolation; throws PreconditionError if t is outside the extent.
Point3 position_at(const SegmentST& seg, double t);

/// Interval of [max tStart, min tEnd] on which |query(t) - entry(t)| <= d.
/// Returns std::nullopt when there is no temporal overlap or the segments
/// never come within d. Throws PreconditionError for d <= 0 and
/// ComputationError when intermediate values are not finite.
std::optional<TimeInterval> interaction_interval(const SegmentST& entry, const SegmentST& query,
                                                 double d);

/// `interaction_interval` packaged with both segments' ids.
std::optional<Interaction> compare(const SegmentST& entry, const SegmentST& query, double d);

}  // namespace trajsearch
