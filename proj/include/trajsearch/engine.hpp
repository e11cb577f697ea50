#pragma once

// Portable emulation of the data-parallel kernel contract used by every
// index: one logical worker per work item, a fixed-capacity result buffer
// filled through an atomic reservation counter, an overflow (redo) list, and
// host-side batching plus duplicate removal.

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "trajsearch/geometry.hpp"

namespace trajsearch {

/// Default result-buffer capacity in records.
inline constexpr std::size_t kDefaultResultCapacity = 50'000'000;

/// Canonically sorted, duplicate-free list of interactions.
struct ResultSet {
  std::vector<Interaction> records;

  std::size_t size() const noexcept { return records.size(); }
  bool empty() const noexcept { return records.empty(); }
  auto begin() const noexcept { return records.begin(); }
  auto end() const noexcept { return records.end(); }

  friend bool operator==(const ResultSet&, const ResultSet&) = default;
};

/// Strict weak order on (query ids, entry ids).
bool id_less(const Interaction& a, const Interaction& b) noexcept;
bool same_ids(const Interaction& a, const Interaction& b) noexcept;

enum class OverflowKind : std::uint8_t { Results, Candidates };

struct OverflowRecord {
  std::uint32_t item;
  OverflowKind kind;
  std::uint64_t needed;  // candidate slots required (Candidates only)
};

/// Fixed-capacity append-only buffer shared by all workers of an invocation.
/// `count() <= capacity()` always holds; slots [0, count()) are complete
/// once the invocation returns.
class ResultBuffer {
 public:
  explicit ResultBuffer(std::size_t capacity);

  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t count() const noexcept { return count_.load(std::memory_order_acquire); }

  /// Clears records and sizes the overflow list for `maxItems` work items.
  void reset(std::size_t maxItems);

  /// Reserves one slot and writes `rec` into it; false when the buffer is full.
  bool try_append(const Interaction& rec) noexcept;

  void record_overflow(const OverflowRecord& rec) noexcept;

  std::span<const Interaction> records() const noexcept { return {slots_.get(), count()}; }
  std::span<const OverflowRecord> overflows() const noexcept {
    return {overflow_.data(), overflowCount_.load(std::memory_order_acquire)};
  }

 private:
  std::size_t capacity_;
  std::unique_ptr<Interaction[]> slots_;
  std::atomic<std::size_t> count_{0};
  std::vector<OverflowRecord> overflow_;
  std::atomic<std::size_t> overflowCount_{0};
};

/// Per-worker view handed to a kernel body.
class KernelContext {
 public:
  KernelContext(ResultBuffer* buffer, std::size_t batchSize) : buffer_(buffer), batchSize_(batchSize) {}

  /// Appends a result for the current item. Returns false (and records the
  /// item as overflowed) when no slot can be reserved; the kernel must return.
  bool emit(const Interaction& rec);

  /// Marks the current item as having exceeded its candidate buffer.
  void overflow_candidates(std::uint64_t needed);

  /// Number of work items dispatched in this invocation.
  std::size_t batch_size() const noexcept { return batchSize_; }

  /// Worker-local scratch space (e.g. a candidate buffer).
  std::vector<std::uint32_t>& scratch() noexcept { return scratch_; }

  void count_candidates(std::uint64_t n) noexcept { candidates_ += n; }

  std::uint32_t item() const noexcept { return item_; }
  bool overflowed() const noexcept { return overflowed_; }

  // Engine-side bookkeeping.
  void begin_item(std::uint32_t item) noexcept {
    item_ = item;
    overflowed_ = false;
  }
  std::uint64_t candidates() const noexcept { return candidates_; }
  std::uint64_t emitted() const noexcept { return emitted_; }

 private:
  ResultBuffer* buffer_;  // null: count-only mode
  std::size_t batchSize_;
  std::vector<std::uint32_t> scratch_;
  std::uint32_t item_ = 0;
  bool overflowed_ = false;
  std::uint64_t candidates_ = 0;
  std::uint64_t emitted_ = 0;
};

/// Kernel body: processes work item `item` (e.g. a schedule entry).
using Kernel = std::function<void(std::uint32_t item, KernelContext& ctx)>;

struct DispatchOptions {
  unsigned workers = 0;  // 0: hardware concurrency
};

struct DispatchOutcome {
  std::size_t records = 0;
  std::size_t overflowedItems = 0;
  std::uint64_t candidates = 0;
  double seconds = 0.0;
};

unsigned resolve_workers(unsigned requested) noexcept;

/// Runs `kernel` once for every element of `items` (gid -> items[gid]) with
/// an arbitrary interleaving across workers. The buffer must be reset.
DispatchOutcome dispatch(const Kernel& kernel, std::span<const std::uint32_t> items, ResultBuffer& buffer,
                         const DispatchOptions& opts = {});

/// Identity schedule over [0, scheduleLength).
DispatchOutcome dispatch(const Kernel& kernel, std::size_t scheduleLength, ResultBuffer& buffer,
                         const DispatchOptions& opts = {});

struct RunMetrics {
  std::size_t invocations = 0;
  std::size_t reservedRecords = 0;  // summed over invocations, before dedup
  std::size_t resultRecords = 0;    // after dedup
  std::uint64_t candidatesRefined = 0;
  std::size_t overflowEvents = 0;
  double wallSeconds = 0.0;
  std::vector<double> invocationSeconds;
  std::vector<std::size_t> activeItems;  // work items dispatched per invocation

  double dedup_ratio() const noexcept {
    return resultRecords == 0 ? 1.0 : static_cast<double>(reservedRecords) / static_cast<double>(resultRecords);
  }
};

struct BatchOptions {
  std::size_t resultCapacity = kDefaultResultCapacity;
  unsigned workers = 0;
  /// Human-readable name of a work item for error messages.
  std::function<std::string(std::uint32_t)> describe;
};

struct BatchedRun {
  ResultSet results;
  RunMetrics metrics;
};

/// Repeatedly dispatches `kernel` over the still-unfinished items until none
/// overflow. Records from overflowed attempts are retained and collapsed by
/// deduplication. If an invocation finishes no item at all, the next one
/// dispatches only half as many items; an item that overflows while alone is
/// a CapacityError.
BatchedRun run_batched(const Kernel& kernel, std::size_t itemCount, const BatchOptions& opts = {});

/// Canonical sort plus collapse of records with identical ids. Throws
/// IntegrityError if duplicates disagree on the interval by more than 1e-12.
ResultSet dedup_results(std::vector<Interaction> raw);

/// Every (entry, query) pair refined directly.
ResultSet brute_force_oracle(std::span<const SegmentST> entries, std::span<const SegmentST> queries,
                             double d);

struct EquivalenceReport {
  std::vector<Interaction> onlyInFirst;
  std::vector<Interaction> onlyInSecond;
  double maxDeviation = 0.0;  // over pairs present in both
  bool equivalent = false;

  std::string summary() const;
};

EquivalenceReport compare_result_sets(const ResultSet& a, const ResultSet& b, double tolerance);

}  // namespace trajsearch
