#include "trajsearch/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "trajsearch/errors.hpp"

namespace trajsearch {
namespace {

constexpr double kStationaryThreshold = 1e-300;

Point3 sub(const Point3& a, const Point3& b) noexcept { return {a.x - b.x, a.y - b.y, a.z - b.z}; }

double dot(const Point3& a, const Point3& b) noexcept { return a.x * b.x + a.y * b.y + a.z * b.z; }

Point3 velocity(const SegmentST& seg) noexcept {
  const double dt = seg.tEnd - seg.tStart;
  return {(seg.end.x - seg.start.x) / dt, (seg.end.y - seg.start.y) / dt,
          (seg.end.z - seg.start.z) / dt};
}

bool finite(const Point3& p) noexcept {
  return std::isfinite(p.x) && std::isfinite(p.y) && std::isfinite(p.z);
}

// Sublevel set {s in [0, len] : a s^2 + b s + c <= 0}, a >= 0.
std::optional<std::pair<double, double>> sublevel_interval(double a, double b, double c,
                                                           double len) {
  double lo = 0.0;
  double hi = 0.0;
  if (a < kStationaryThreshold) {
    // Relative motion is (numerically) stationary: f is linear or constant.
    if (b == 0.0) {
      if (c > 0.0) return std::nullopt;
      return std::make_pair(0.0, len);
    }
    const double root = -c / b;
    if (b > 0.0) {
      if (root < 0.0) return std::nullopt;
      return std::make_pair(0.0, std::min(root, len));
    }
    if (root > len) return std::nullopt;
    return std::make_pair(std::max(root, 0.0), len);
  }

  const double disc = b * b - 4.0 * a * c;
  if (!std::isfinite(disc)) throw ComputationError("non-finite discriminant");
  if (disc < 0.0) return std::nullopt;
  const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
  double r1 = q / a;
  double r2 = q != 0.0 ? c / q : r1;
  lo = std::min(r1, r2);
  hi = std::max(r1, r2);
  if (hi < 0.0 || lo > len) return std::nullopt;
  return std::make_pair(std::max(lo, 0.0), std::min(hi, len));
}

}  // namespace

bool Mbb::intersects(const Mbb& other) const noexcept {
  return min.x <= other.max.x && other.min.x <= max.x && min.y <= other.max.y &&
         other.min.y <= max.y && min.z <= other.max.z && other.min.z <= max.z;
}

bool is_valid_segment(const SegmentST& seg) noexcept {
  return finite(seg.start) && finite(seg.end) && std::isfinite(seg.tStart) &&
         std::isfinite(seg.tEnd) && seg.tStart < seg.tEnd;
}

Mbb mbb_of_segment(const SegmentST& seg) noexcept {
  return {{std::min(seg.start.x, seg.end.x), std::min(seg.start.y, seg.end.y),
           std::min(seg.start.z, seg.end.z)},
          {std::max(seg.start.x, seg.end.x), std::max(seg.start.y, seg.end.y),
           std::max(seg.start.z, seg.end.z)}};
}

Mbb expand_mbb(const Mbb& box, double d) {
  if (!(d >= 0.0)) throw PreconditionError("expand_mbb: d must be >= 0");
  return {{box.min.x - d, box.min.y - d, box.min.z - d}, {box.max.x + d, box.max.y + d, box.max.z + d}};
}

Point3 position_at(const SegmentST& seg, double t) {
  if (!(t >= seg.tStart && t <= seg.tEnd)) {
    throw PreconditionError("position_at: t=" + std::to_string(t) + " outside [" +
                            std::to_string(seg.tStart) + ", " + std::to_string(seg.tEnd) + "]");
  }
  if (t == seg.tStart) return seg.start;
  if (t == seg.tEnd) return seg.end;
  const double f = (t - seg.tStart) / (seg.tEnd - seg.tStart);
  return {seg.start.x + f * (seg.end.x - seg.start.x), seg.start.y + f * (seg.end.y - seg.start.y),
          seg.start.z + f * (seg.end.z - seg.start.z)};
}

std::optional<TimeInterval> interaction_interval(const SegmentST& entry, const SegmentST& query,
                                                 double d) {
  if (!(d > 0.0)) throw PreconditionError("compare: d must be > 0");
  const double overlapBegin = std::max(entry.tStart, query.tStart);
  const double overlapEnd = std::min(entry.tEnd, query.tEnd);
  if (overlapBegin > overlapEnd) return std::nullopt;

  const Point3 offset = sub(position_at(query, overlapBegin), position_at(entry, overlapBegin));
  const Point3 relVel = sub(velocity(query), velocity(entry));

  const double a = dot(relVel, relVel);
  const double b = 2.0 * dot(offset, relVel);
  const double c = dot(offset, offset) - d * d;
  if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c)) {
    throw ComputationError("compare: non-finite coefficients for segments (" +
                           std::to_string(entry.trajectoryId) + "," +
                           std::to_string(entry.segmentId) + ") and (" +
                           std::to_string(query.trajectoryId) + "," +
                           std::to_string(query.segmentId) + ")");
  }

  const double len = overlapEnd - overlapBegin;
  const auto s = sublevel_interval(a, b, c, len);
  if (!s) return std::nullopt;
  const double begin = s->first <= 0.0 ? overlapBegin : std::min(overlapBegin + s->first, overlapEnd);
  const double end = s->second >= len ? overlapEnd : std::min(overlapBegin + s->second, overlapEnd);
  return TimeInterval{begin, std::max(begin, end)};
}

std::optional<Interaction> compare(const SegmentST& entry, const SegmentST& query, double d) {
  const auto interval = interaction_interval(entry, query, d);
  if (!interval) return std::nullopt;
  return Interaction{query.trajectoryId, query.segmentId, entry.trajectoryId, entry.segmentId,
                     *interval};
}

}  // namespace trajsearch
