#pragma once

// Hand-built datasets reproducing the worked examples, plus an interaction
// oracle that shares no code with the library's root formula.

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "trajsearch/dataset.hpp"
#include "trajsearch/fsg_index.hpp"
#include "trajsearch/geometry.hpp"
#include "trajsearch/spatiotemporal_index.hpp"
#include "trajsearch/temporal_index.hpp"

namespace fixtures {

using namespace trajsearch;

inline SegmentST seg(std::uint32_t traj, std::uint32_t id, Point3 a, Point3 b, double t0, double t1) {
  return SegmentST{traj, id, a, b, t0, t1};
}

// --- temporal bins example: 15 entries, m = 4 ---------------------------------

inline std::vector<SegmentST> temporal_example() {
  const double spans[15][2] = {{0, 1.7},   {0.6, 1.5}, {0.7, 1.3}, {1.9, 3.7},  {2.5, 7.5},
                               {2.8, 4.6}, {3.9, 5.5}, {4.1, 5.8}, {4.8, 6.2},  {6.5, 9.4},
                               {7.0, 7.8}, {8.3, 11},  {9.3, 11.5}, {10.4, 12}, {11.6, 11.9}};
  std::vector<SegmentST> out;
  for (std::uint32_t i = 0; i < 15; ++i) {
    out.push_back(seg(i, 0, {double(i), 0, 0}, {double(i) + 0.5, 0, 0}, spans[i][0], spans[i][1]));
  }
  return out;
}

// --- spatiotemporal example: 10 entries, m = 3, v = 3 -----------------------

inline std::vector<SegmentST> subbin_example() {
  const Point3 ends[10][2] = {{{4, 2, 3}, {5, 3, 1}},   {{2, 3, 4}, {1, 2, 2}},   {{6, 7, 9}, {4, 6, 8}},
                              {{3, 5, 4}, {4, 3, 5}},   {{3, 3, 1}, {5, 3, 7}},   {{3, 6, 2}, {2, 3, 2}},
                              {{8, 9, 10}, {10, 9, 8}}, {{5, 5, 6}, {6, 4, 5}},   {{8, 8, 13}, {7, 7, 10}},
                              {{0, 3, 5}, {2, 6, 7}}};
  // Start times put entries 0-3, 4-7 and 8-9 into the three bins.
  const double starts[10] = {0, 0.5, 1, 2, 3, 4, 4.5, 5, 6, 7};
  std::vector<SegmentST> out;
  for (std::uint32_t i = 0; i < 10; ++i) out.push_back(seg(i, 0, ends[i][0], ends[i][1], starts[i], starts[i] + 1));
  return out;
}

inline SlabLayout subbin_layout() {
  SlabLayout layout;
  layout.origin = {0, 0, 0};
  layout.width = {4, 4, 5};
  return layout;
}

inline IndexRange rng(std::int64_t a, std::int64_t b) { return {a, b}; }

/// The reference arrays and descriptors, assembled verbatim.
inline SpatioTemporalIndex reference_subbin_index() {
  auto base = TemporalIndex::build(subbin_example(), 3);
  std::array<std::vector<std::uint32_t>, 3> arrays = {
      std::vector<std::uint32_t>{1, 3, 4, 5, 9, 0, 2, 3, 4, 7, 8, 6, 8},
      std::vector<std::uint32_t>{0, 1, 3, 4, 5, 8, 9, 3, 5, 7, 8, 6, 8},
      std::vector<std::uint32_t>{0, 1, 4, 5, 1, 3, 4, 6, 7, 8, 6, 8}};
  const IndexRange none;
  // Bin-major: [i * v + j].
  std::vector<SubbinDescriptor> desc = {
      {{rng(0, 1), rng(0, 2), rng(0, 1)}},    {{rng(5, 7), rng(7, 7), rng(4, 5)}},
      {{none, none, none}},                   {{rng(2, 3), rng(3, 5), rng(2, 3)}},
      {{rng(8, 9), rng(8, 9), rng(6, 8)}},    {{rng(11, 11), rng(11, 11), rng(10, 10)}},
      {{rng(4, 4), rng(6, 6), none}},         {{rng(10, 10), rng(10, 10), rng(9, 9)}},
      {{rng(12, 12), rng(12, 12), rng(11, 11)}}};
  return SpatioTemporalIndex::from_parts(std::move(base), 3, subbin_layout(), std::move(arrays), std::move(desc));
}

/// Overlaps bins 0-1 in time; its d-expanded box lies in x slab 0, y slab 1
/// and z slab 0.
inline SegmentST subbin_query() { return seg(0, 0, {1, 5, 1}, {2, 6, 2}, 1.5, 3.5); }
inline constexpr double kSubbinQueryDistance = 0.5;

// --- grid example: G/A slices [0,2] and [25,90] -----------------------------

inline FsgIndex grid_example() {
  GridSpec spec;
  spec.origin = {0, 0, 0};
  spec.cellSize = {1, 1, 1};
  spec.counts = {2, 7, 1};  // cells 0, 1, 7 and 8 form a 2x2 block
  std::vector<std::uint32_t> lookup(126);
  for (std::uint32_t i = 0; i < lookup.size(); ++i) lookup[i] = 1000 + i;  // filler ids
  lookup[0] = 2;
  lookup[1] = 100;
  lookup[2] = 22;
  lookup[25] = 100;
  lookup[26] = 867;
  lookup[90] = 400;
  lookup[124] = 1;
  lookup[125] = 100;
  std::vector<FsgCell> cells = {{0, 0, 2}, {2, 3, 24}, {7, 25, 90}, {13, 124, 125}};
  return FsgIndex::from_parts(spec, std::move(cells), std::move(lookup));
}

/// MBB overlapping cells 0, 1, 7 and 8 once expanded by d = 0.1.
inline SegmentST grid_query() { return seg(0, 0, {0.2, 0.2, 0.5}, {1.8, 1.8, 0.5}, 0, 1); }

// --- independent interaction oracle ------------------------------------------

struct OracleInterval {
  double begin;
  double end;
  bool clippedBegin;  // endpoint coincides with the temporal overlap bound
  bool clippedEnd;
};

inline Point3 lerp(const SegmentST& s, double t) {
  const double u = (t - s.tStart) / (s.tEnd - s.tStart);
  return {s.start.x + u * (s.end.x - s.start.x), s.start.y + u * (s.end.y - s.start.y),
          s.start.z + u * (s.end.z - s.start.z)};
}

inline double separation(const SegmentST& a, const SegmentST& b, double t) {
  const Point3 p = lerp(a, t);
  const Point3 q = lerp(b, t);
  return std::sqrt((p.x - q.x) * (p.x - q.x) + (p.y - q.y) * (p.y - q.y) + (p.z - q.z) * (p.z - q.z));
}

/// Dense sampling to bracket the minimum of the (convex) separation,
/// golden-section refinement, then bisection for each crossing of d.
inline std::optional<OracleInterval> oracle_interval(const SegmentST& e, const SegmentST& q, double d) {
  const double a = std::max(e.tStart, q.tStart);
  const double b = std::min(e.tEnd, q.tEnd);
  if (a > b) return std::nullopt;
  auto f = [&](double t) { return separation(e, q, t); };

  constexpr int kSamples = 2048;
  int best = 0;
  double bestVal = f(a);
  for (int i = 1; i <= kSamples; ++i) {
    const double v = f(a + (b - a) * i / kSamples);
    if (v < bestVal) {
      bestVal = v;
      best = i;
    }
  }
  double lo = a + (b - a) * std::max(best - 1, 0) / kSamples;
  double hi = a + (b - a) * std::min(best + 1, kSamples) / kSamples;
  const double phi = (std::sqrt(5.0) - 1) / 2;
  for (int it = 0; it < 200 && hi - lo > 0; ++it) {
    const double m1 = hi - phi * (hi - lo);
    const double m2 = lo + phi * (hi - lo);
    if (f(m1) <= f(m2)) {
      hi = m2;
    } else {
      lo = m1;
    }
  }
  const double tMin = 0.5 * (lo + hi);
  if (f(tMin) > d) return std::nullopt;

  auto crossing = [&](double inside, double outside) {
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (inside + outside);
      if (mid == inside || mid == outside) break;
      (f(mid) <= d ? inside : outside) = mid;
    }
    return 0.5 * (inside + outside);
  };
  OracleInterval out{a, b, true, true};
  if (f(a) > d) {
    out.begin = crossing(tMin, a);
    out.clippedBegin = false;
  }
  if (f(b) > d) {
    out.end = crossing(tMin, b);
    out.clippedEnd = false;
  }
  return out;
}

}  // namespace fixtures
