#include <gtest/gtest.h>

#include <atomic>
#include <set>

#include "trajsearch/dataset.hpp"
#include "trajsearch/engine.hpp"
#include "trajsearch/errors.hpp"

using namespace trajsearch;

namespace {

Interaction rec(std::uint32_t q, std::uint32_t e, double b = 0.0, double en = 1.0) {
  return Interaction{q, 0, e, 0, {b, en}};
}

// Item i emits `counts[i]` records (q = i, e = 0..counts[i]-1).
Kernel fixed_output_kernel(std::vector<std::uint32_t> counts) {
  return [counts = std::move(counts)](std::uint32_t item, KernelContext& ctx) {
    for (std::uint32_t e = 0; e < counts[item]; ++e) {
      if (!ctx.emit(rec(item, e))) return;
    }
  };
}

}  // namespace

TEST(Engine, EmptyScheduleProducesNothing) {
  ResultBuffer buf(10);
  buf.reset(0);
  const auto out = dispatch(fixed_output_kernel({}), 0, buf);
  EXPECT_EQ(out.records, 0u);
  EXPECT_TRUE(buf.overflows().empty());
}

TEST(Engine, SufficientCapacityHasNoOverflow) {
  ResultBuffer buf(100);
  buf.reset(4);
  dispatch(fixed_output_kernel({3, 0, 5, 1}), 4, buf, {1});
  EXPECT_EQ(buf.count(), 9u);
  EXPECT_TRUE(buf.overflows().empty());
}

TEST(Engine, CapacityOneWithTwoSingleResultItems) {
  // Either interleaving is admissible: one record kept, the other item
  // recorded as overflowed.
  for (unsigned workers : {1u, 2u}) {
    ResultBuffer buf(1);
    buf.reset(2);
    dispatch(fixed_output_kernel({1, 1}), 2, buf, {workers});
    ASSERT_EQ(buf.count(), 1u);
    ASSERT_EQ(buf.overflows().size(), 1u);
    EXPECT_NE(buf.records()[0].queryTrajectoryId, buf.overflows()[0].item);
    EXPECT_EQ(buf.overflows()[0].kind, OverflowKind::Results);
  }
}

TEST(Engine, ReservationNeverExceedsCapacityUnderContention) {
  ResultBuffer buf(1000);
  buf.reset(64);
  std::vector<std::uint32_t> counts(64, 50);
  dispatch(fixed_output_kernel(counts), 64, buf, {8});
  EXPECT_EQ(buf.count(), 1000u);
  std::set<std::pair<std::uint32_t, std::uint32_t>> seen;
  for (const auto& r : buf.records()) {
    EXPECT_EQ(r.interval.begin, 0.0);
    EXPECT_EQ(r.interval.end, 1.0);
    seen.insert({r.queryTrajectoryId, r.entryTrajectoryId});
  }
  EXPECT_EQ(seen.size(), 1000u);
  EXPECT_FALSE(buf.overflows().empty());
}

TEST(Engine, BatchedRunMatchesUnconstrained) {
  std::vector<std::uint32_t> counts;
  for (std::uint32_t i = 0; i < 200; ++i) counts.push_back((i * 37) % 23);
  const auto kernel = fixed_output_kernel(counts);
  BatchOptions big;
  const auto reference = run_batched(kernel, counts.size(), big);
  EXPECT_EQ(reference.metrics.invocations, 1u);

  for (unsigned workers : {1u, 4u}) {
    BatchOptions small;
    small.resultCapacity = 30;
    small.workers = workers;
    const auto run = run_batched(kernel, counts.size(), small);
    EXPECT_EQ(run.results, reference.results);
    EXPECT_GT(run.metrics.invocations, 1u);
    EXPECT_EQ(run.metrics.resultRecords, reference.results.size());
    EXPECT_GE(run.metrics.reservedRecords, run.metrics.resultRecords);
  }
}

TEST(Engine, ActiveSetNeverGrows) {
  std::vector<std::uint32_t> counts(50, 7);
  BatchOptions opts;
  opts.resultCapacity = 10;
  opts.workers = 3;
  const auto run = run_batched(fixed_output_kernel(counts), counts.size(), opts);
  for (std::size_t i = 1; i < run.metrics.activeItems.size(); ++i) {
    EXPECT_LE(run.metrics.activeItems[i], run.metrics.activeItems[i - 1]);
  }
  EXPECT_EQ(run.results.size(), 350u);
}

TEST(Engine, AllEmptyQueriesNeedOneInvocation) {
  const auto run = run_batched(fixed_output_kernel({0, 0, 0}), 3);
  EXPECT_EQ(run.metrics.invocations, 1u);
  EXPECT_TRUE(run.results.empty());
}

TEST(Engine, SingleQueryExceedingCapacityIsNamed) {
  BatchOptions opts;
  opts.resultCapacity = 5;
  opts.describe = [](std::uint32_t i) { return "query #" + std::to_string(i); };
  try {
    run_batched(fixed_output_kernel({2, 9, 1}), 3, opts);
    FAIL() << "expected CapacityError";
  } catch (const CapacityError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("query #1"), std::string::npos) << msg;
    EXPECT_NE(msg.find("9 results"), std::string::npos) << msg;
  }
}

TEST(Engine, CandidateOverflowIsRedoneWithMoreRoom) {
  // Item 0 needs 10 candidate slots; capacity is 20 / batch size.
  const Kernel kernel = [](std::uint32_t item, KernelContext& ctx) {
    const std::uint64_t room = 20 / ctx.batch_size();
    if (item == 0 && room < 10) {
      ctx.overflow_candidates(10);
      return;
    }
    ctx.emit(rec(item, 0));
  };
  const auto run = run_batched(kernel, 4);
  EXPECT_EQ(run.results.size(), 4u);
  EXPECT_EQ(run.metrics.invocations, 2u);
  EXPECT_EQ(run.metrics.activeItems, (std::vector<std::size_t>{4, 1}));
}

TEST(Engine, CandidateOverflowAloneIsFatal) {
  const Kernel kernel = [](std::uint32_t, KernelContext& ctx) { ctx.overflow_candidates(99); };
  try {
    run_batched(kernel, 2);
    FAIL() << "expected CapacityError";
  } catch (const CapacityError& e) {
    EXPECT_NE(std::string(e.what()).find("99 candidate"), std::string::npos) << e.what();
  }
}

TEST(Engine, DedupCollapsesExactDuplicates) {
  const auto out = dedup_results({rec(2, 1), rec(1, 5), rec(2, 1), rec(1, 3)});
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(out.records[0], rec(1, 3));
  EXPECT_EQ(out.records[1], rec(1, 5));
  EXPECT_EQ(out.records[2], rec(2, 1));
  EXPECT_EQ(dedup_results(out.records), out);
}

TEST(Engine, DedupRejectsDisagreeingDuplicates) {
  EXPECT_THROW(dedup_results({rec(1, 1, 0.0, 1.0), rec(1, 1, 0.0, 1.1)}), IntegrityError);
  EXPECT_NO_THROW(dedup_results({rec(1, 1, 0.0, 1.0), rec(1, 1, 0.0, 1.0 + 1e-13)}));
}

TEST(Engine, OracleBasics) {
  const SegmentST e{0, 0, {0, 0, 0}, {1, 0, 0}, 0, 1};
  const SegmentST near{0, 0, {0, 0.5, 0}, {1, 0.5, 0}, 0, 1};
  const SegmentST late{1, 0, {0, 0, 0}, {1, 0, 0}, 5, 6};
  std::vector<SegmentST> entries{e};
  EXPECT_TRUE(brute_force_oracle(entries, std::vector<SegmentST>{late}, 10.0).empty());
  const auto hit = brute_force_oracle(entries, std::vector<SegmentST>{near}, 1.0);
  ASSERT_EQ(hit.size(), 1u);
  EXPECT_EQ(hit.records[0].interval, (TimeInterval{0, 1}));
}

TEST(Engine, CompareResultSets) {
  const ResultSet a = dedup_results({rec(1, 1), rec(1, 2)});
  const ResultSet b = dedup_results({rec(1, 1, 0.0, 1.0 + 1e-12)});
  EXPECT_TRUE(compare_result_sets(a, a, 0.0).equivalent);
  const auto rep = compare_result_sets(a, b, 1e-9);
  EXPECT_FALSE(rep.equivalent);
  ASSERT_EQ(rep.onlyInFirst.size(), 1u);
  EXPECT_EQ(rep.onlyInFirst[0], rec(1, 2));
  EXPECT_NE(rep.summary().find("e 2:0"), std::string::npos) << rep.summary();
  const ResultSet c = dedup_results({rec(1, 1, 0.0, 1.0 + 1e-12), rec(1, 2)});
  const auto close = compare_result_sets(a, c, 1e-9);
  EXPECT_TRUE(close.equivalent);
  EXPECT_NEAR(close.maxDeviation, 1e-12, 1e-15);
}

TEST(Engine, WorkerCountDoesNotChangeResults) {
  RandomWalkParams p;
  p.nTrajectories = 6;
  p.nTimesteps = 40;
  p.initialBox = 10;
  const auto d = generate_random_walk(p);
  p.seed = 2;
  p.nTrajectories = 2;
  const auto q = generate_random_walk(p);
  const auto entries = d.view();
  const auto queries = q.view();
  const Kernel kernel = [&](std::uint32_t i, KernelContext& ctx) {
    for (const auto& e : entries) {
      if (auto hit = compare(e, queries[i], 3.0)) {
        if (!ctx.emit(*hit)) return;
      }
    }
  };
  const auto ref = brute_force_oracle(entries, queries, 3.0);
  for (unsigned w : {1u, 4u, 0u}) {
    BatchOptions opts;
    opts.workers = w;
    EXPECT_EQ(run_batched(kernel, queries.size(), opts).results, ref) << "workers " << w;
  }
}
