#include "trajsearch/rtree_index.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "trajsearch/errors.hpp"

namespace trajsearch {
namespace {

double center(const Box4& b, int k) noexcept { return 0.5 * (b.lo[k] + b.hi[k]); }

// Sort-tile-recursive ordering of `items` (indices into `boxes`) so that
// consecutive runs of `fanout` form well-clustered nodes.
void str_order(std::span<std::uint32_t> items, const std::vector<Box4>& boxes, int dim, std::uint32_t fanout) {
  auto byCenter = [&](std::uint32_t a, std::uint32_t b) {
    const double ca = center(boxes[a], dim);
    const double cb = center(boxes[b], dim);
    return ca != cb ? ca < cb : a < b;
  };
  std::sort(items.begin(), items.end(), byCenter);
  if (dim == 3 || items.size() <= fanout) return;
  const double pages = std::ceil(static_cast<double>(items.size()) / fanout);
  const double slices = std::ceil(std::pow(pages, 1.0 / (4 - dim)));
  const std::size_t slab = static_cast<std::size_t>(fanout) * static_cast<std::size_t>(std::ceil(pages / slices));
  for (std::size_t begin = 0; begin < items.size(); begin += slab) {
    const std::size_t n = std::min(slab, items.size() - begin);
    str_order(items.subspan(begin, n), boxes, dim + 1, fanout);
  }
}

}  // namespace

Box4 box_of_segment(const SegmentST& seg) noexcept {
  const Mbb m = mbb_of_segment(seg);
  return {{m.min.x, m.min.y, m.min.z, seg.tStart}, {m.max.x, m.max.y, m.max.z, seg.tEnd}};
}

Box4 rtree_query_box(const SegmentST& query, double d) {
  const Mbb m = expand_mbb(mbb_of_segment(query), d);
  return {{m.min.x, m.min.y, m.min.z, query.tStart}, {m.max.x, m.max.y, m.max.z, query.tEnd}};
}

RTreeIndex RTreeIndex::build(std::span<const SegmentST> entries, std::uint32_t r, std::uint32_t fanout) {
  if (r == 0) throw ConfigError("build_rtree: r must be >= 1");
  if (fanout < 2) throw ConfigError("build_rtree: fanout must be >= 2");
  if (entries.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw ConfigError("build_rtree: too many entries for 32-bit ids");
  }
  RTreeIndex index;
  index.r_ = r;
  index.fanout_ = fanout;
  index.order_.resize(entries.size());
  std::iota(index.order_.begin(), index.order_.end(), 0u);
  std::stable_sort(index.order_.begin(), index.order_.end(), [&](std::uint32_t a, std::uint32_t b) {
    if (entries[a].trajectoryId != entries[b].trajectoryId) return entries[a].trajectoryId < entries[b].trajectoryId;
    return entries[a].segmentId < entries[b].segmentId;
  });

  // Leaf groups: r consecutive segments, never crossing a trajectory.
  std::vector<RTreeLeafEntry> groups;
  for (std::size_t i = 0; i < index.order_.size();) {
    const auto traj = entries[index.order_[i]].trajectoryId;
    RTreeLeafEntry g{box_of_segment(entries[index.order_[i]]), static_cast<std::uint32_t>(i),
                     static_cast<std::uint32_t>(i)};
    ++i;
    while (i < index.order_.size() && i - g.first < r && entries[index.order_[i]].trajectoryId == traj) {
      g.box.extend(box_of_segment(entries[index.order_[i]]));
      g.last = static_cast<std::uint32_t>(i++);
    }
    groups.push_back(g);
  }
  if (groups.empty()) return index;

  std::vector<Box4> boxes(groups.size());
  for (std::size_t i = 0; i < groups.size(); ++i) boxes[i] = groups[i].box;
  std::vector<std::uint32_t> perm(groups.size());
  std::iota(perm.begin(), perm.end(), 0u);
  str_order(perm, boxes, 0, fanout);
  index.leaves_.reserve(groups.size());
  for (auto p : perm) index.leaves_.push_back(groups[p]);
  for (std::size_t i = 0; i < groups.size(); ++i) boxes[i] = index.leaves_[i].box;

  // Pack level by level until a single node remains.
  std::size_t childCount = boxes.size();
  while (true) {
    std::vector<RTreeNode> level;
    for (std::size_t begin = 0; begin < childCount; begin += fanout) {
      const auto n = static_cast<std::uint32_t>(std::min<std::size_t>(fanout, childCount - begin));
      RTreeNode node{boxes[begin], static_cast<std::uint32_t>(begin), n};
      for (std::uint32_t c = 1; c < n; ++c) node.box.extend(boxes[begin + c]);
      level.push_back(node);
    }
    index.levels_.push_back(std::move(level));
    auto& built = index.levels_.back();
    if (built.size() == 1) break;

    // Reorder this level's nodes for the next pass and remap child links.
    boxes.assign(built.size(), {});
    for (std::size_t i = 0; i < built.size(); ++i) boxes[i] = built[i].box;
    std::vector<std::uint32_t> order(built.size());
    std::iota(order.begin(), order.end(), 0u);
    str_order(order, boxes, 0, fanout);
    std::vector<RTreeNode> reordered;
    reordered.reserve(built.size());
    for (auto o : order) reordered.push_back(built[o]);
    built = std::move(reordered);
    for (std::size_t i = 0; i < built.size(); ++i) boxes[i] = built[i].box;
    childCount = built.size();
  }
  return index;
}

bool RTreeIndex::check_containment() const noexcept {
  for (std::size_t level = 0; level < levels_.size(); ++level) {
    for (const auto& node : levels_[level]) {
      for (std::uint32_t c = node.first; c < node.first + node.count; ++c) {
        const Box4& child = level == 0 ? leaves_[c].box : levels_[level - 1][c].box;
        if (!node.box.contains(child)) return false;
      }
    }
  }
  return levels_.empty() || levels_.back().size() == 1;
}

BatchedRun search_rtree(const RTreeIndex& index, std::span<const SegmentST> entries,
                        std::span<const SegmentST> queries, double d, const BatchOptions& opts) {
  if (!(d > 0.0)) throw PreconditionError("search_rtree: d must be > 0");
  if (index.segment_order().size() != entries.size()) {
    throw PreconditionError("search_rtree: index does not match the entry array");
  }
  const auto order = index.segment_order();
  const Kernel kernel = [&](std::uint32_t queryId, KernelContext& ctx) {
    const SegmentST& q = queries[queryId];
    bool stop = false;
    index.search(rtree_query_box(q, d), [&](const RTreeLeafEntry& leaf) {
      if (stop) return;
      ctx.count_candidates(leaf.last - leaf.first + 1);
      for (auto i = leaf.first; i <= leaf.last; ++i) {
        if (auto hit = compare(entries[order[i]], q, d)) {
          if (!ctx.emit(*hit)) {
            stop = true;
            return;
          }
        }
      }
    });
  };
  BatchOptions batch = opts;
  if (!batch.describe) {
    batch.describe = [&](std::uint32_t i) {
      return "query " + std::to_string(i) + " (trajectory " + std::to_string(queries[i].trajectoryId) +
             ", segment " + std::to_string(queries[i].segmentId) + ")";
    };
  }
  return run_batched(kernel, queries.size(), batch);
}

}  // namespace trajsearch
