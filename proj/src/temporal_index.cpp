#include "trajsearch/temporal_index.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "trajsearch/errors.hpp"

namespace trajsearch {

IndexRange IndexRange::merged(const IndexRange& other) const noexcept {
  if (empty()) return other;
  if (other.empty()) return *this;
  return {std::min(first, other.first), std::max(last, other.last)};
}

TemporalIndex TemporalIndex::build(std::span<const SegmentST> entries, std::uint32_t m) {
  if (m == 0) throw ConfigError("build_temporal: m must be >= 1");
  if (entries.empty()) throw PreconditionError("build_temporal: empty dataset");
  if (entries.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw ConfigError("build_temporal: too many entries for 32-bit ids");
  }

  TemporalIndex index;
  index.originalIds_.resize(entries.size());
  std::iota(index.originalIds_.begin(), index.originalIds_.end(), 0u);
  std::stable_sort(index.originalIds_.begin(), index.originalIds_.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return entries[a].tStart < entries[b].tStart; });
  index.entries_.reserve(entries.size());
  for (auto id : index.originalIds_) index.entries_.push_back(entries[id]);

  index.tMin_ = index.entries_.front().tStart;
  index.tMax_ = index.entries_.front().tEnd;
  for (const auto& e : index.entries_) index.tMax_ = std::max(index.tMax_, e.tEnd);
  index.binLength_ = (index.tMax_ - index.tMin_) / m;

  index.bins_.resize(m);
  for (std::uint32_t j = 0; j < m; ++j) {
    index.bins_[j].bStart = index.tMin_ + j * index.binLength_;
    index.bins_[j].bEnd = index.tMin_ + (j + 1) * index.binLength_;
  }
  for (std::size_t i = 0; i < index.entries_.size(); ++i) {
    const auto& e = index.entries_[i];
    auto& bin = index.bins_[index.bin_of(e.tStart)];
    bin.bEnd = std::max(bin.bEnd, e.tEnd);
    const auto pos = static_cast<std::int64_t>(i);
    if (bin.members.empty()) bin.members.first = pos;
    bin.members.last = pos;
  }
  return index;
}

std::uint32_t TemporalIndex::bin_of(double t) const noexcept {
  const auto m = static_cast<std::uint32_t>(bins_.size());
  const double q = std::floor((t - tMin_) / binLength_);
  std::uint32_t j = q <= 0.0 ? 0u : (q >= m - 1.0 ? m - 1 : static_cast<std::uint32_t>(q));
  // Keep bStart_j = tMin + j b <= t exactly despite rounding in the quotient.
  while (j > 0 && t < tMin_ + j * binLength_) --j;
  while (j + 1 < m && t >= tMin_ + (j + 1) * binLength_) ++j;
  return j;
}

std::vector<std::uint32_t> sort_queries_by_start(std::span<const SegmentST> queries) {
  std::vector<std::uint32_t> order(queries.size());
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return queries[a].tStart < queries[b].tStart; });
  return order;
}

IndexRange overlapping_bins(const TemporalIndex& index, double t0, double t1, std::uint32_t& cursor) {
  const auto bins = index.bins();
  IndexRange found;
  for (std::size_t j = cursor; j < bins.size() && bins[j].bStart <= t1; ++j) {
    if (bins[j].bEnd >= t0) {
      if (found.empty()) found.first = static_cast<std::int64_t>(j);
      found.last = static_cast<std::int64_t>(j);
    }
  }
  if (!found.empty()) cursor = static_cast<std::uint32_t>(found.first);
  return found;
}

Schedule build_schedule_temporal(const TemporalIndex& index, std::span<const SegmentST> queries) {
  Schedule schedule;
  schedule.reserve(queries.size());
  std::uint32_t cursor = 0;
  const auto bins = index.bins();
  for (auto qid : sort_queries_by_start(queries)) {
    const auto& q = queries[qid];
    const auto span = overlapping_bins(index, q.tStart, q.tEnd, cursor);
    IndexRange range;
    for (auto j = span.first; !span.empty() && j <= span.last; ++j) {
      if (bin_overlaps(bins[j], q.tStart, q.tEnd)) range = range.merged(bins[j].members);
    }
    schedule.push_back({qid, ArraySelector::Temporal, range});
  }
  return schedule;
}

BatchedRun search_temporal(const TemporalIndex& index, std::span<const SegmentST> queries,
                           const Schedule& schedule, double d, const BatchOptions& opts) {
  if (!(d > 0.0)) throw PreconditionError("search_temporal: d must be > 0");
  const auto entries = index.entries();
  for (const auto& s : schedule) {
    if (s.queryId >= queries.size() || (!s.range.empty() && static_cast<std::size_t>(s.range.last) >= entries.size())) {
      throw PreconditionError("search_temporal: schedule does not match index/query set");
    }
  }
  const Kernel kernel = [&](std::uint32_t gid, KernelContext& ctx) {
    const auto& s = schedule[gid];
    const SegmentST& q = queries[s.queryId];
    ctx.count_candidates(s.range.size());
    for (auto i = s.range.first; !s.range.empty() && i <= s.range.last; ++i) {
      if (auto hit = compare(entries[static_cast<std::size_t>(i)], q, d)) {
        if (!ctx.emit(*hit)) return;
      }
    }
  };
  BatchOptions batch = opts;
  if (!batch.describe) {
    batch.describe = [&](std::uint32_t gid) {
      const auto qid = schedule[gid].queryId;
      return "query " + std::to_string(qid) + " (trajectory " + std::to_string(queries[qid].trajectoryId) +
             ", segment " + std::to_string(queries[qid].segmentId) + ")";
    };
  }
  return run_batched(kernel, schedule.size(), batch);
}

}  // namespace trajsearch
