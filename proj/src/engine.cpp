#include "trajsearch/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>
#include <thread>
#include <unordered_set>

#include "trajsearch/errors.hpp"

namespace trajsearch {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string default_describe(std::uint32_t item) { return "work item " + std::to_string(item); }

std::string fmt_record(const Interaction& r) {
  std::ostringstream os;
  os.precision(17);
  os << "(q " << r.queryTrajectoryId << ":" << r.querySegmentId << ", e " << r.entryTrajectoryId << ":"
     << r.entrySegmentId << ", [" << r.interval.begin << ", " << r.interval.end << "])";
  return os.str();
}

}  // namespace

bool id_less(const Interaction& a, const Interaction& b) noexcept {
  if (a.queryTrajectoryId != b.queryTrajectoryId) return a.queryTrajectoryId < b.queryTrajectoryId;
  if (a.querySegmentId != b.querySegmentId) return a.querySegmentId < b.querySegmentId;
  if (a.entryTrajectoryId != b.entryTrajectoryId) return a.entryTrajectoryId < b.entryTrajectoryId;
  return a.entrySegmentId < b.entrySegmentId;
}

bool same_ids(const Interaction& a, const Interaction& b) noexcept {
  return a.queryTrajectoryId == b.queryTrajectoryId && a.querySegmentId == b.querySegmentId &&
         a.entryTrajectoryId == b.entryTrajectoryId && a.entrySegmentId == b.entrySegmentId;
}

// --- ResultBuffer -----------------------------------------------------------

ResultBuffer::ResultBuffer(std::size_t capacity)
    : capacity_(capacity), slots_(new Interaction[std::max<std::size_t>(capacity, 1)]) {}

void ResultBuffer::reset(std::size_t maxItems) {
  count_.store(0, std::memory_order_relaxed);
  overflowCount_.store(0, std::memory_order_relaxed);
  if (overflow_.size() < maxItems) overflow_.resize(maxItems);
}

bool ResultBuffer::try_append(const Interaction& rec) noexcept {
  std::size_t slot = count_.load(std::memory_order_relaxed);
  do {
    if (slot >= capacity_) return false;
  } while (!count_.compare_exchange_weak(slot, slot + 1, std::memory_order_acq_rel,
                                         std::memory_order_relaxed));
  slots_[slot] = rec;
  return true;
}

void ResultBuffer::record_overflow(const OverflowRecord& rec) noexcept {
  const std::size_t slot = overflowCount_.fetch_add(1, std::memory_order_acq_rel);
  if (slot < overflow_.size()) overflow_[slot] = rec;
}

// --- KernelContext ----------------------------------------------------------

bool KernelContext::emit(const Interaction& rec) {
  if (overflowed_) return false;
  if (buffer_ == nullptr) {
    ++emitted_;
    return true;
  }
  if (buffer_->try_append(rec)) {
    ++emitted_;
    return true;
  }
  overflowed_ = true;
  buffer_->record_overflow({item_, OverflowKind::Results, 0});
  return false;
}

void KernelContext::overflow_candidates(std::uint64_t needed) {
  if (overflowed_) return;
  overflowed_ = true;
  if (buffer_ != nullptr) buffer_->record_overflow({item_, OverflowKind::Candidates, needed});
}

// --- dispatch ---------------------------------------------------------------

unsigned resolve_workers(unsigned requested) noexcept {
  if (requested != 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

DispatchOutcome dispatch(const Kernel& kernel, std::span<const std::uint32_t> items, ResultBuffer& buffer,
                         const DispatchOptions& opts) {
  const auto t0 = Clock::now();
  const std::size_t n = items.size();
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(resolve_workers(opts.workers), std::max<std::size_t>(n, 1)));
  const std::size_t chunk = std::clamp<std::size_t>(n / (std::size_t{workers} * 8), 1, 64);
  std::atomic<std::size_t> next{0};
  std::atomic<std::uint64_t> candidates{0};

  auto worker = [&] {
    KernelContext ctx(&buffer, n);
    while (true) {
      const std::size_t begin = next.fetch_add(chunk, std::memory_order_relaxed);
      if (begin >= n) break;
      const std::size_t end = std::min(n, begin + chunk);
      for (std::size_t gid = begin; gid < end; ++gid) {
        ctx.begin_item(items[gid]);
        kernel(items[gid], ctx);
      }
    }
    candidates.fetch_add(ctx.candidates(), std::memory_order_relaxed);
  };

  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (unsigned w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
  }

  DispatchOutcome out;
  out.records = buffer.count();
  out.overflowedItems = buffer.overflows().size();
  out.candidates = candidates.load();
  out.seconds = seconds_since(t0);
  return out;
}

DispatchOutcome dispatch(const Kernel& kernel, std::size_t scheduleLength, ResultBuffer& buffer,
                         const DispatchOptions& opts) {
  std::vector<std::uint32_t> items(scheduleLength);
  std::iota(items.begin(), items.end(), 0u);
  return dispatch(kernel, items, buffer, opts);
}

// --- run_batched ------------------------------------------------------------

BatchedRun run_batched(const Kernel& kernel, std::size_t itemCount, const BatchOptions& opts) {
  const auto t0 = Clock::now();
  const auto describe = opts.describe ? opts.describe : default_describe;
  BatchedRun run;
  std::vector<Interaction> raw;

  std::vector<std::uint32_t> active(itemCount);
  std::iota(active.begin(), active.end(), 0u);
  std::size_t limit = std::max<std::size_t>(itemCount, 1);
  ResultBuffer buffer(opts.resultCapacity);
  std::vector<std::uint32_t> redo;

  while (!active.empty()) {
    const std::size_t batchSize = std::min(limit, active.size());
    const std::span<const std::uint32_t> batch(active.data(), batchSize);
    buffer.reset(batchSize);
    const auto outcome = dispatch(kernel, batch, buffer, {opts.workers});

    ++run.metrics.invocations;
    run.metrics.invocationSeconds.push_back(outcome.seconds);
    run.metrics.activeItems.push_back(batchSize);
    run.metrics.candidatesRefined += outcome.candidates;
    run.metrics.reservedRecords += outcome.records;
    run.metrics.overflowEvents += outcome.overflowedItems;
    const auto recs = buffer.records();
    raw.insert(raw.end(), recs.begin(), recs.end());

    const auto overflows = buffer.overflows();
    if (overflows.empty()) {
      active.erase(active.begin(), active.begin() + static_cast<std::ptrdiff_t>(batchSize));
      continue;
    }

    if (overflows.size() == batchSize) {
      if (batchSize == 1) {
        const auto& o = overflows.front();
        if (o.kind == OverflowKind::Candidates) {
          throw CapacityError(describe(o.item) + " needs " + std::to_string(o.needed) +
                              " candidate slots, more than the whole candidate buffer");
        }
        KernelContext counter(nullptr, 1);
        counter.begin_item(o.item);
        kernel(o.item, counter);
        throw CapacityError(describe(o.item) + " produces " + std::to_string(counter.emitted()) +
                            " results, more than the result capacity of " +
                            std::to_string(buffer.capacity()));
      }
      limit = std::max<std::size_t>(1, batchSize / 2);
    }

    // Overflowed items first (in batch order), then the undispatched tail.
    std::unordered_set<std::uint32_t> failed;
    for (const auto& o : overflows) failed.insert(o.item);
    redo.clear();
    for (std::size_t i = 0; i < batchSize; ++i) {
      if (failed.count(active[i])) redo.push_back(active[i]);
    }
    redo.insert(redo.end(), active.begin() + static_cast<std::ptrdiff_t>(batchSize), active.end());
    active.swap(redo);
  }

  run.results = dedup_results(std::move(raw));
  run.metrics.resultRecords = run.results.size();
  run.metrics.wallSeconds = seconds_since(t0);
  return run;
}

// --- result sets ------------------------------------------------------------

ResultSet dedup_results(std::vector<Interaction> raw) {
  std::sort(raw.begin(), raw.end(), [](const Interaction& a, const Interaction& b) {
    if (!same_ids(a, b)) return id_less(a, b);
    if (a.interval.begin != b.interval.begin) return a.interval.begin < b.interval.begin;
    return a.interval.end < b.interval.end;
  });
  ResultSet out;
  out.records.reserve(raw.size());
  for (const auto& r : raw) {
    if (!out.records.empty() && same_ids(out.records.back(), r)) {
      const auto& kept = out.records.back();
      if (std::abs(kept.interval.begin - r.interval.begin) > 1e-12 ||
          std::abs(kept.interval.end - r.interval.end) > 1e-12) {
        throw IntegrityError("duplicate records disagree: " + fmt_record(kept) + " vs " + fmt_record(r));
      }
      continue;
    }
    out.records.push_back(r);
  }
  return out;
}

ResultSet brute_force_oracle(std::span<const SegmentST> entries, std::span<const SegmentST> queries,
                             double d) {
  std::vector<Interaction> raw;
  for (const auto& q : queries) {
    for (const auto& e : entries) {
      if (auto hit = compare(e, q, d)) raw.push_back(*hit);
    }
  }
  return dedup_results(std::move(raw));
}

EquivalenceReport compare_result_sets(const ResultSet& a, const ResultSet& b, double tolerance) {
  EquivalenceReport rep;
  auto ia = a.records.begin();
  auto ib = b.records.begin();
  while (ia != a.records.end() || ib != b.records.end()) {
    if (ib == b.records.end() || (ia != a.records.end() && id_less(*ia, *ib))) {
      rep.onlyInFirst.push_back(*ia++);
    } else if (ia == a.records.end() || id_less(*ib, *ia)) {
      rep.onlyInSecond.push_back(*ib++);
    } else {
      rep.maxDeviation = std::max({rep.maxDeviation, std::abs(ia->interval.begin - ib->interval.begin),
                                   std::abs(ia->interval.end - ib->interval.end)});
      ++ia;
      ++ib;
    }
  }
  rep.equivalent = rep.onlyInFirst.empty() && rep.onlyInSecond.empty() && rep.maxDeviation <= tolerance;
  return rep;
}

std::string EquivalenceReport::summary() const {
  std::ostringstream os;
  os << (equivalent ? "equivalent" : "NOT equivalent") << ": " << onlyInFirst.size()
     << " only in first, " << onlyInSecond.size() << " only in second, max deviation " << maxDeviation;
  const auto name = [&](const char* label, const std::vector<Interaction>& v) {
    for (std::size_t i = 0; i < std::min<std::size_t>(v.size(), 5); ++i) {
      os << "\n  " << label << " " << fmt_record(v[i]);
    }
  };
  name("only in first:", onlyInFirst);
  name("only in second:", onlyInSecond);
  return os.str();
}

}  // namespace trajsearch
