#pragma once

// One entry point over the four index backends, plus the canonical results
// and metrics CSV formats shared by the command-line tool and the bindings.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>

#include "trajsearch/engine.hpp"
#include "trajsearch/fsg_index.hpp"
#include "trajsearch/rtree_index.hpp"

namespace trajsearch {

enum class IndexKind { Fsg, Temporal, SpatioTemporal, RTree };

/// "fsg", "temporal", "st", "rtree"; throws ConfigError otherwise.
IndexKind parse_index_kind(const std::string& name);
const char* index_kind_name(IndexKind kind) noexcept;

struct IndexParams {
  std::uint32_t cells = 50;          // FSG cells per axis
  std::uint32_t bins = 1000;         // temporal bins m
  std::uint32_t subbins = 2;         // slabs v
  std::uint32_t mbbSegments = 1;     // R-tree r
  std::uint32_t fanout = kDefaultRTreeFanout;
  std::uint64_t candidateBufferBytes = kDefaultCandidateBufferBytes;

  /// Compact "key=value" description of the parameters relevant to `kind`.
  std::string describe(IndexKind kind) const;
};

struct SearchOutcome {
  BatchedRun run;
  double buildSeconds = 0.0;
  double scheduleSeconds = 0.0;
  /// Schedule entries served from a spatial slab (spatiotemporal only).
  std::size_t slabScheduled = 0;
};

/// Builds the requested index over `entries` and searches it with `queries`.
SearchOutcome run_search(IndexKind kind, const IndexParams& params, std::span<const SegmentST> entries,
                         std::span<const SegmentST> queries, double d, const BatchOptions& batch = {});

/// FSG search over an index loaded from disk.
SearchOutcome run_search(const FsgIndex& index, const IndexParams& params, std::span<const SegmentST> entries,
                         std::span<const SegmentST> queries, double d, const BatchOptions& batch = {});

inline constexpr const char* kResultsCsvHeader = "query_traj,query_seg,entry_traj,entry_seg,t_begin,t_end";

void write_results_csv(const ResultSet& results, std::ostream& out);
void write_results_csv(const ResultSet& results, const std::string& path);
/// Throws ParseError naming the line on malformed input.
ResultSet read_results_csv(std::istream& in);
ResultSet read_results_csv(const std::string& path);

inline constexpr const char* kMetricsCsvHeader =
    "index,params,d,entries,queries,invocations,reserved_records,result_records,dedup_ratio,"
    "candidates_refined,overflow_events,build_seconds,search_seconds";

struct MetricsRow {
  IndexKind kind = IndexKind::Temporal;
  std::string params;
  double d = 0.0;
  std::size_t entries = 0;
  std::size_t queries = 0;
  RunMetrics metrics;
  double buildSeconds = 0.0;
};

std::string format_metrics_row(const MetricsRow& row);

/// Appends one row, writing the header first if the file is new or empty.
void append_metrics_csv(const MetricsRow& row, const std::string& path);

}  // namespace trajsearch
