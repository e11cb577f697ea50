#pragma once

// In-memory R-tree over space-time boxes, bulk-loaded with sort-tile-recursive
// packing. Each leaf entry covers up to r consecutive segments of a single
// trajectory, trading tree size against wasted candidate refinements.

#include <algorithm>
#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "trajsearch/engine.hpp"
#include "trajsearch/geometry.hpp"

namespace trajsearch {

/// Axis-aligned box in (x, y, z, t).
struct Box4 {
  std::array<double, 4> lo{};
  std::array<double, 4> hi{};

  bool intersects(const Box4& o) const noexcept {
    for (int k = 0; k < 4; ++k) {
      if (lo[k] > o.hi[k] || o.lo[k] > hi[k]) return false;
    }
    return true;
  }
  bool contains(const Box4& o) const noexcept {
    for (int k = 0; k < 4; ++k) {
      if (o.lo[k] < lo[k] || o.hi[k] > hi[k]) return false;
    }
    return true;
  }
  void extend(const Box4& o) noexcept {
    for (int k = 0; k < 4; ++k) {
      lo[k] = std::min(lo[k], o.lo[k]);
      hi[k] = std::max(hi[k], o.hi[k]);
    }
  }
};

Box4 box_of_segment(const SegmentST& seg) noexcept;

struct RTreeLeafEntry {
  Box4 box;
  std::uint32_t first;  // inclusive range into RTreeIndex::segment_order()
  std::uint32_t last;
};

struct RTreeNode {
  Box4 box;
  std::uint32_t first;  // children: nodes of the level below, or leaf entries
  std::uint32_t count;
};

inline constexpr std::uint32_t kDefaultRTreeFanout = 16;

class RTreeIndex {
 public:
  /// Groups each trajectory's segments (by segmentId) r at a time, the last
  /// group possibly smaller, and packs the groups into a tree. Throws
  /// ConfigError for r == 0 or fanout < 2.
  static RTreeIndex build(std::span<const SegmentST> entries, std::uint32_t r,
                          std::uint32_t fanout = kDefaultRTreeFanout);

  std::uint32_t r() const noexcept { return r_; }
  std::uint32_t fanout() const noexcept { return fanout_; }
  /// Number of node levels above the leaf entries.
  std::size_t height() const noexcept { return levels_.size(); }
  std::span<const RTreeLeafEntry> leaf_entries() const noexcept { return leaves_; }
  /// Positions in the input array, ordered by (trajectoryId, segmentId).
  std::span<const std::uint32_t> segment_order() const noexcept { return order_; }
  /// levels()[0] holds the nodes directly above the leaf entries.
  const std::vector<std::vector<RTreeNode>>& levels() const noexcept { return levels_; }

  /// Calls `visit(leafEntry)` for every leaf entry whose box meets `query`.
  template <typename Visit>
  void search(const Box4& query, Visit&& visit) const;

  /// True if every node box contains the boxes of all its children.
  bool check_containment() const noexcept;

 private:
  std::uint32_t r_ = 1;
  std::uint32_t fanout_ = kDefaultRTreeFanout;
  std::vector<std::uint32_t> order_;
  std::vector<RTreeLeafEntry> leaves_;
  std::vector<std::vector<RTreeNode>> levels_;
};

template <typename Visit>
void RTreeIndex::search(const Box4& query, Visit&& visit) const {
  if (levels_.empty()) return;
  std::vector<std::pair<std::size_t, std::uint32_t>> stack;  // (level, node)
  const auto& top = levels_.back();
  for (std::uint32_t n = 0; n < top.size(); ++n) stack.emplace_back(levels_.size() - 1, n);
  while (!stack.empty()) {
    const auto [level, id] = stack.back();
    stack.pop_back();
    const RTreeNode& node = levels_[level][id];
    if (!node.box.intersects(query)) continue;
    for (std::uint32_t c = node.first; c < node.first + node.count; ++c) {
      if (level == 0) {
        if (leaves_[c].box.intersects(query)) visit(leaves_[c]);
      } else {
        stack.emplace_back(level - 1, c);
      }
    }
  }
}

/// Query box: spatial MBB expanded by d, temporal extent as is.
Box4 rtree_query_box(const SegmentST& query, double d);

/// Parallel range search plus refinement. Candidates refined are reported in
/// the run metrics. `entries` must be the array the index was built on.
BatchedRun search_rtree(const RTreeIndex& index, std::span<const SegmentST> entries,
                        std::span<const SegmentST> queries, double d, const BatchOptions& opts = {});

}  // namespace trajsearch
