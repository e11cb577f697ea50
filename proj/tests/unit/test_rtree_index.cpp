#include <gtest/gtest.h>

#include <set>

#include "fixtures.hpp"
#include "trajsearch/dataset.hpp"
#include "trajsearch/errors.hpp"
#include "trajsearch/rtree_index.hpp"

using namespace trajsearch;
using fixtures::seg;

namespace {

TrajectoryDataset walk(std::uint64_t seed, std::uint32_t trajectories, std::uint32_t steps) {
  RandomWalkParams p;
  p.nTrajectories = trajectories;
  p.nTimesteps = steps;
  p.initialBox = 40;
  p.startWindow = 20;
  p.seed = seed;
  return generate_random_walk(p);
}

}  // namespace

TEST(RTree, GroupsSegmentsPerTrajectory) {
  const auto ds = walk(1, 1, 400);
  const auto index = RTreeIndex::build(ds.view(), 10);
  EXPECT_EQ(index.leaf_entries().size(), 40u);
  std::multiset<std::uint32_t> sizes;
  for (const auto& l : index.leaf_entries()) sizes.insert(l.last - l.first + 1);
  EXPECT_EQ(sizes.count(10u), 39u);
  EXPECT_EQ(sizes.count(9u), 1u);
}

TEST(RTree, ShortTailGroup) {
  std::vector<SegmentST> segs;
  for (std::uint32_t k = 0; k < 6; ++k) segs.push_back(seg(0, k, {double(k), 0, 0}, {k + 1.0, 0, 0}, k, k + 1));
  const auto index = RTreeIndex::build(segs, 4);
  ASSERT_EQ(index.leaf_entries().size(), 2u);
  std::set<std::pair<std::uint32_t, std::uint32_t>> groups;
  for (const auto& l : index.leaf_entries()) groups.insert({index.segment_order()[l.first], index.segment_order()[l.last]});
  EXPECT_EQ(groups, (std::set<std::pair<std::uint32_t, std::uint32_t>>{{0, 3}, {4, 5}}));
}

TEST(RTree, GroupsNeverMixTrajectories) {
  const auto ds = walk(2, 7, 13);
  const auto index = RTreeIndex::build(ds.view(), 5);
  EXPECT_EQ(index.leaf_entries().size(), 7u * 3u);
  for (const auto& l : index.leaf_entries()) {
    const auto t = ds.segments[index.segment_order()[l.first]].trajectoryId;
    for (auto k = l.first; k <= l.last; ++k) {
      const auto& s = ds.segments[index.segment_order()[k]];
      EXPECT_EQ(s.trajectoryId, t);
      EXPECT_TRUE(l.box.contains(box_of_segment(s)));
    }
  }
}

TEST(RTree, NodesContainChildrenAndRespectFanout) {
  const auto ds = walk(3, 40, 50);
  for (std::uint32_t r : {1u, 4u, 20u}) {
    const auto index = RTreeIndex::build(ds.view(), r, 8);
    EXPECT_TRUE(index.check_containment());
    EXPECT_EQ(index.levels().back().size(), 1u);
    for (const auto& level : index.levels()) {
      for (const auto& n : level) EXPECT_LE(n.count, 8u);
    }
  }
}

TEST(RTree, RejectsBadParameters) {
  const auto ds = walk(4, 2, 5);
  EXPECT_THROW(RTreeIndex::build(ds.view(), 0), ConfigError);
  EXPECT_THROW(RTreeIndex::build(ds.view(), 1, 1), ConfigError);
}

TEST(RTree, QueryBoxExpandsSpaceOnly) {
  const auto b = rtree_query_box(seg(0, 0, {1, 2, 3}, {0, 4, 3}, 5, 6), 0.5);
  EXPECT_EQ(b.lo, (std::array<double, 4>{-0.5, 1.5, 2.5, 5}));
  EXPECT_EQ(b.hi, (std::array<double, 4>{1.5, 4.5, 3.5, 6}));
}

TEST(RTree, SearchMatchesOracleAndCandidatesGrowWithR) {
  const auto d = walk(5, 30, 60);
  const auto q = walk(6, 4, 60);
  const auto oracle = brute_force_oracle(d.view(), q.view(), 3.0);
  std::uint64_t previous = 0;
  for (std::uint32_t r : {1u, 2u, 5u, 10u, 30u}) {
    const auto index = RTreeIndex::build(d.view(), r);
    const auto run = search_rtree(index, d.view(), q.view(), 3.0);
    EXPECT_EQ(run.results, oracle) << "r=" << r;
    EXPECT_GE(run.metrics.candidatesRefined, previous) << "r=" << r;
    previous = run.metrics.candidatesRefined;
  }
}
