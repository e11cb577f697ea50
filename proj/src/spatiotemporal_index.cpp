#include "trajsearch/spatiotemporal_index.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "trajsearch/errors.hpp"

namespace trajsearch {
namespace {

constexpr const char* kDimName[3] = {"x", "y", "z"};

std::uint32_t slab_index(double x, double origin, double width, std::uint32_t v) noexcept {
  const double q = std::floor((x - origin) / width);
  if (!(q > 0.0)) return 0;
  if (q >= v - 1.0) return v - 1;
  return static_cast<std::uint32_t>(q);
}

std::string describe_query(std::span<const SegmentST> queries, std::uint32_t qid) {
  return "query " + std::to_string(qid) + " (trajectory " + std::to_string(queries[qid].trajectoryId) +
         ", segment " + std::to_string(queries[qid].segmentId) + ")";
}

}  // namespace

SubbinBounds max_subbin_count(std::span<const SegmentST> entries, std::uint32_t cap) {
  if (entries.empty()) throw PreconditionError("max_subbin_count: empty dataset");
  cap = std::max<std::uint32_t>(cap, 1);
  SubbinBounds out;
  out.admissible = cap;
  for (int k = 0; k < 3; ++k) {
    double lo = entries.front().start[k];
    double hi = lo;
    double maxExtent = 0.0;
    for (const auto& e : entries) {
      lo = std::min({lo, e.start[k], e.end[k]});
      hi = std::max({hi, e.start[k], e.end[k]});
      maxExtent = std::max(maxExtent, std::abs(e.start[k] - e.end[k]));
    }
    std::uint32_t bound = cap;
    if (maxExtent > 0.0) {
      const double q = std::floor((hi - lo) / maxExtent);
      bound = q >= cap ? cap : static_cast<std::uint32_t>(q);
    }
    out.perDimension[k] = bound;
    out.admissible = std::min(out.admissible, bound);
  }
  out.admissible = std::max<std::uint32_t>(out.admissible, 1);
  return out;
}

std::uint32_t SpatioTemporalIndex::slab_of(int dim, double x) const noexcept {
  return slab_index(x, layout_.origin[dim], layout_.width[dim], v_);
}

SpatioTemporalIndex SpatioTemporalIndex::build(std::span<const SegmentST> entries, std::uint32_t m,
                                               std::uint32_t v) {
  if (entries.empty()) throw PreconditionError("build_spatiotemporal: empty dataset");
  if (v == 0) throw ConfigError("build_spatiotemporal: v must be >= 1");
  const auto bounds = max_subbin_count(entries);
  if (v > bounds.admissible) {
    throw ConfigError("build_spatiotemporal: v=" + std::to_string(v) + " exceeds the admissible bound " +
                      std::to_string(bounds.admissible) + " (x " + std::to_string(bounds.perDimension[0]) +
                      ", y " + std::to_string(bounds.perDimension[1]) + ", z " +
                      std::to_string(bounds.perDimension[2]) + ")");
  }
  SlabLayout layout;
  for (int k = 0; k < 3; ++k) {
    double lo = entries.front().start[k];
    double hi = lo;
    for (const auto& e : entries) {
      lo = std::min({lo, e.start[k], e.end[k]});
      hi = std::max({hi, e.start[k], e.end[k]});
    }
    layout.origin[k] = lo;
    layout.width[k] = hi > lo ? (hi - lo) / v : 1.0;
  }
  return build(entries, m, v, layout);
}

SpatioTemporalIndex SpatioTemporalIndex::build(std::span<const SegmentST> entries, std::uint32_t m,
                                               std::uint32_t v, const SlabLayout& layout) {
  if (v == 0) throw ConfigError("build_spatiotemporal: v must be >= 1");
  for (int k = 0; k < 3; ++k) {
    if (!(layout.width[k] > 0.0) || !std::isfinite(layout.width[k]) || !std::isfinite(layout.origin[k])) {
      throw ConfigError(std::string("build_spatiotemporal: invalid slab layout in ") + kDimName[k]);
    }
  }

  SpatioTemporalIndex index;
  index.base_ = TemporalIndex::build(entries, m);
  index.v_ = v;
  index.layout_ = layout;
  const auto sorted = index.base_.entries();
  const auto bins = index.base_.bins();
  const std::size_t blocks = std::size_t{m} * v;

  std::vector<std::uint32_t> binOf(sorted.size());
  for (std::uint32_t i = 0; i < m; ++i) {
    for (auto e = bins[i].members.first; !bins[i].members.empty() && e <= bins[i].members.last; ++e) {
      binOf[static_cast<std::size_t>(e)] = i;
    }
  }

  index.descriptors_.assign(blocks, {});
  std::vector<std::uint64_t> offset(blocks + 1);
  for (int k = 0; k < 3; ++k) {
    // Counting sort on block key (j, i), slab-major; scanning ids in
    // ascending order keeps each block ascending.
    std::fill(offset.begin(), offset.end(), 0);
    auto slabs = [&](const SegmentST& e) {
      const double lo = std::min(e.start[k], e.end[k]);
      const double hi = std::max(e.start[k], e.end[k]);
      return std::pair{index.slab_of(k, lo), index.slab_of(k, hi)};
    };
    for (std::size_t id = 0; id < sorted.size(); ++id) {
      const auto [s0, s1] = slabs(sorted[id]);
      if (s1 - s0 > 1) {
        throw ConfigError(std::string("build_spatiotemporal: entry ") + std::to_string(index.base_.original_ids()[id]) +
                          " spans " + std::to_string(s1 - s0 + 1) + " slabs in " + kDimName[k] +
                          "; slab width must be at least the largest segment extent");
      }
      for (auto j = s0; j <= s1; ++j) ++offset[std::size_t{j} * m + binOf[id] + 1];
    }
    for (std::size_t b = 0; b < blocks; ++b) offset[b + 1] += offset[b];

    auto& arr = index.arrays_[k];
    arr.assign(offset[blocks], 0);
    std::vector<std::uint64_t> fill(offset.begin(), offset.end() - 1);
    for (std::size_t id = 0; id < sorted.size(); ++id) {
      const auto [s0, s1] = slabs(sorted[id]);
      for (auto j = s0; j <= s1; ++j) arr[fill[std::size_t{j} * m + binOf[id]]++] = static_cast<std::uint32_t>(id);
    }

    for (std::uint32_t j = 0; j < v; ++j) {
      for (std::uint32_t i = 0; i < m; ++i) {
        const std::size_t key = std::size_t{j} * m + i;
        IndexRange r;
        if (offset[key + 1] > offset[key]) {
          r.first = static_cast<std::int64_t>(offset[key]);
          r.last = static_cast<std::int64_t>(offset[key + 1] - 1);
        }
        index.descriptors_[std::size_t{i} * v + j].ranges[k] = r;
      }
    }
  }
  return index;
}

SpatioTemporalIndex SpatioTemporalIndex::from_parts(TemporalIndex base, std::uint32_t v, const SlabLayout& layout,
                                                    std::array<std::vector<std::uint32_t>, 3> arrays,
                                                    std::vector<SubbinDescriptor> descriptors) {
  const auto m = static_cast<std::uint32_t>(base.bins().size());
  if (v == 0) throw FormatError("spatiotemporal: v must be >= 1");
  if (descriptors.size() != std::size_t{m} * v) {
    throw FormatError("spatiotemporal: expected " + std::to_string(std::size_t{m} * v) + " descriptors, got " +
                      std::to_string(descriptors.size()));
  }
  for (int k = 0; k < 3; ++k) {
    if (!(layout.width[k] > 0.0)) throw FormatError(std::string("spatiotemporal: invalid slab width in ") + kDimName[k]);
    const auto& arr = arrays[k];
    for (auto id : arr) {
      if (id >= base.entries().size()) {
        throw FormatError(std::string("spatiotemporal: ") + kDimName[k] + " array refers to entry " +
                          std::to_string(id) + " outside the index");
      }
    }
    std::int64_t next = 0;  // blocks must tile the array in (j, i) order
    for (std::uint32_t j = 0; j < v; ++j) {
      for (std::uint32_t i = 0; i < m; ++i) {
        const auto& r = descriptors[std::size_t{i} * v + j].ranges[k];
        if (r.empty()) continue;
        const std::string where = std::string(kDimName[k]) + " block (bin " + std::to_string(i) + ", slab " +
                                  std::to_string(j) + ")";
        if (r.first != next || r.last < r.first || static_cast<std::size_t>(r.last) >= arr.size()) {
          throw FormatError("spatiotemporal: " + where + " breaks the slab-major layout");
        }
        for (auto p = r.first + 1; p <= r.last; ++p) {
          if (arr[static_cast<std::size_t>(p - 1)] >= arr[static_cast<std::size_t>(p)]) {
            throw FormatError("spatiotemporal: ids not ascending in " + where);
          }
        }
        next = r.last + 1;
      }
    }
    if (static_cast<std::size_t>(next) != arr.size()) {
      throw FormatError(std::string("spatiotemporal: ") + kDimName[k] + " array has entries outside every block");
    }
  }
  SpatioTemporalIndex index;
  index.base_ = std::move(base);
  index.v_ = v;
  index.layout_ = layout;
  index.arrays_ = std::move(arrays);
  index.descriptors_ = std::move(descriptors);
  return index;
}

Schedule build_schedule_st(const SpatioTemporalIndex& index, std::span<const SegmentST> queries, double d) {
  if (!(d > 0.0)) throw PreconditionError("build_schedule_st: d must be > 0");
  const auto& base = index.base();
  const auto bins = base.bins();
  Schedule schedule;
  schedule.reserve(queries.size());
  std::uint32_t cursor = 0;
  for (auto qid : sort_queries_by_start(queries)) {
    const auto& q = queries[qid];
    const auto span = overlapping_bins(base, q.tStart, q.tEnd, cursor);
    ScheduleEntry entry{qid, ArraySelector::Temporal, {}};
    if (span.empty()) {
      schedule.push_back(entry);
      continue;
    }
    const Mbb box = expand_mbb(mbb_of_segment(q), d);
    IndexRange temporal;
    for (auto i = span.first; i <= span.last; ++i) {
      if (bin_overlaps(bins[i], q.tStart, q.tEnd)) temporal = temporal.merged(bins[i].members);
    }
    entry.range = temporal;
    bool chosen = false;
    for (int k = 0; k < 3; ++k) {
      const auto j = index.slab_of(k, box.min[k]);
      if (j != index.slab_of(k, box.max[k])) continue;
      IndexRange r;
      for (auto i = span.first; i <= span.last; ++i) {
        if (bin_overlaps(bins[i], q.tStart, q.tEnd)) {
          r = r.merged(index.descriptor(static_cast<std::uint32_t>(i), j).ranges[k]);
        }
      }
      if (!chosen || r.size() < entry.range.size()) {
        entry.selector = static_cast<ArraySelector>(k);
        entry.range = r;
        chosen = true;
      }
    }
    schedule.push_back(entry);
  }
  std::stable_sort(schedule.begin(), schedule.end(),
                   [](const ScheduleEntry& a, const ScheduleEntry& b) { return a.selector < b.selector; });
  return schedule;
}

BatchedRun search_spatiotemporal(const SpatioTemporalIndex& index, std::span<const SegmentST> queries,
                                 const Schedule& schedule, double d, const BatchOptions& opts) {
  if (!(d > 0.0)) throw PreconditionError("search_spatiotemporal: d must be > 0");
  const auto entries = index.base().entries();
  for (const auto& s : schedule) {
    const std::size_t limit = s.selector == ArraySelector::Temporal
                                  ? entries.size()
                                  : index.array(static_cast<int>(s.selector)).size();
    if (s.queryId >= queries.size() || (!s.range.empty() && static_cast<std::size_t>(s.range.last) >= limit)) {
      throw PreconditionError("search_spatiotemporal: schedule does not match index/query set");
    }
  }
  const Kernel kernel = [&](std::uint32_t gid, KernelContext& ctx) {
    const auto& s = schedule[gid];
    const SegmentST& q = queries[s.queryId];
    ctx.count_candidates(s.range.size());
    if (s.range.empty()) return;
    const auto first = static_cast<std::size_t>(s.range.first);
    const auto last = static_cast<std::size_t>(s.range.last);
    if (s.selector == ArraySelector::Temporal) {
      for (std::size_t i = first; i <= last; ++i) {
        if (auto hit = compare(entries[i], q, d)) {
          if (!ctx.emit(*hit)) return;
        }
      }
      return;
    }
    const auto ids = index.array(static_cast<int>(s.selector));
    for (std::size_t i = first; i <= last; ++i) {
      if (auto hit = compare(entries[ids[i]], q, d)) {
        if (!ctx.emit(*hit)) return;
      }
    }
  };
  BatchOptions batch = opts;
  if (!batch.describe) {
    batch.describe = [&](std::uint32_t gid) { return describe_query(queries, schedule[gid].queryId); };
  }
  return run_batched(kernel, schedule.size(), batch);
}

}  // namespace trajsearch
