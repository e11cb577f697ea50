#include "trajsearch/search.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "trajsearch/errors.hpp"
#include "trajsearch/spatiotemporal_index.hpp"
#include "trajsearch/temporal_index.hpp"

namespace trajsearch {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename T>
bool parse_field(std::string_view s, T& out) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

std::size_t slab_scheduled(const Schedule& schedule) {
  std::size_t n = 0;
  for (const auto& s : schedule) n += s.selector != ArraySelector::Temporal;
  return n;
}

}  // namespace

IndexKind parse_index_kind(const std::string& name) {
  if (name == "fsg") return IndexKind::Fsg;
  if (name == "temporal") return IndexKind::Temporal;
  if (name == "st" || name == "spatiotemporal") return IndexKind::SpatioTemporal;
  if (name == "rtree") return IndexKind::RTree;
  throw ConfigError("unknown index kind '" + name + "' (expected fsg, temporal, st or rtree)");
}

const char* index_kind_name(IndexKind kind) noexcept {
  switch (kind) {
    case IndexKind::Fsg: return "fsg";
    case IndexKind::Temporal: return "temporal";
    case IndexKind::SpatioTemporal: return "st";
    case IndexKind::RTree: return "rtree";
  }
  return "?";
}

std::string IndexParams::describe(IndexKind kind) const {
  switch (kind) {
    case IndexKind::Fsg:
      return "cells=" + std::to_string(cells) + " candidate_buffer=" + std::to_string(candidateBufferBytes);
    case IndexKind::Temporal: return "m=" + std::to_string(bins);
    case IndexKind::SpatioTemporal: return "m=" + std::to_string(bins) + " v=" + std::to_string(subbins);
    case IndexKind::RTree: return "r=" + std::to_string(mbbSegments) + " fanout=" + std::to_string(fanout);
  }
  return {};
}

SearchOutcome run_search(IndexKind kind, const IndexParams& params, std::span<const SegmentST> entries,
                         std::span<const SegmentST> queries, double d, const BatchOptions& batch) {
  SearchOutcome out;
  auto t0 = Clock::now();
  switch (kind) {
    case IndexKind::Fsg: {
      const auto index = FsgIndex::build(entries, {params.cells, params.cells, params.cells});
      out.buildSeconds = seconds_since(t0);
      auto searched = run_search(index, params, entries, queries, d, batch);
      searched.buildSeconds = out.buildSeconds;
      return searched;
    }
    case IndexKind::Temporal: {
      const auto index = TemporalIndex::build(entries, params.bins);
      out.buildSeconds = seconds_since(t0);
      t0 = Clock::now();
      const auto schedule = build_schedule_temporal(index, queries);
      out.scheduleSeconds = seconds_since(t0);
      out.run = search_temporal(index, queries, schedule, d, batch);
      return out;
    }
    case IndexKind::SpatioTemporal: {
      const auto index = SpatioTemporalIndex::build(entries, params.bins, params.subbins);
      out.buildSeconds = seconds_since(t0);
      t0 = Clock::now();
      const auto schedule = build_schedule_st(index, queries, d);
      out.scheduleSeconds = seconds_since(t0);
      out.slabScheduled = slab_scheduled(schedule);
      out.run = search_spatiotemporal(index, queries, schedule, d, batch);
      return out;
    }
    case IndexKind::RTree: {
      const auto index = RTreeIndex::build(entries, params.mbbSegments, params.fanout);
      out.buildSeconds = seconds_since(t0);
      out.run = search_rtree(index, entries, queries, d, batch);
      return out;
    }
  }
  throw ConfigError("run_search: invalid index kind");
}

SearchOutcome run_search(const FsgIndex& index, const IndexParams& params, std::span<const SegmentST> entries,
                         std::span<const SegmentST> queries, double d, const BatchOptions& batch) {
  SpatialSearchOptions opts;
  opts.candidateBufferEntries = params.candidateBufferBytes / sizeof(std::uint32_t);
  opts.batch = batch;
  SearchOutcome out;
  out.run = search_spatial(index, entries, queries, d, opts);
  return out;
}

void write_results_csv(const ResultSet& results, std::ostream& out) {
  out << kResultsCsvHeader << '\n';
  for (const auto& r : results) {
    out << r.queryTrajectoryId << ',' << r.querySegmentId << ',' << r.entryTrajectoryId << ',' << r.entrySegmentId
        << ',' << fmt17(r.interval.begin) << ',' << fmt17(r.interval.end) << '\n';
  }
}

void write_results_csv(const ResultSet& results, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_results_csv(results, out);
  if (!out) throw IoError("write failed for '" + path + "'");
}

ResultSet read_results_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kResultsCsvHeader) {
    throw ParseError(0, "results CSV line 1: expected header '" + std::string(kResultsCsvHeader) + "'");
  }
  std::vector<Interaction> raw;
  std::size_t lineNo = 1;
  while (std::getline(in, line)) {
    ++lineNo;
    if (line.empty()) continue;
    std::vector<std::string_view> fields;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      fields.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    Interaction rec{};
    if (fields.size() != 6 || !parse_field(fields[0], rec.queryTrajectoryId) ||
        !parse_field(fields[1], rec.querySegmentId) || !parse_field(fields[2], rec.entryTrajectoryId) ||
        !parse_field(fields[3], rec.entrySegmentId) || !parse_field(fields[4], rec.interval.begin) ||
        !parse_field(fields[5], rec.interval.end)) {
      throw ParseError(raw.size(), "results CSV line " + std::to_string(lineNo) + ": malformed record");
    }
    raw.push_back(rec);
  }
  return dedup_results(std::move(raw));
}

ResultSet read_results_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return read_results_csv(in);
}

std::string format_metrics_row(const MetricsRow& row) {
  const auto& m = row.metrics;
  std::ostringstream os;
  os << index_kind_name(row.kind) << ',' << row.params << ',' << fmt17(row.d) << ',' << row.entries << ','
     << row.queries << ',' << m.invocations << ',' << m.reservedRecords << ',' << m.resultRecords << ','
     << fmt17(m.dedup_ratio()) << ',' << m.candidatesRefined << ',' << m.overflowEvents << ','
     << fmt17(row.buildSeconds) << ',' << fmt17(m.wallSeconds);
  return os.str();
}

void append_metrics_csv(const MetricsRow& row, const std::string& path) {
  std::error_code ec;
  const bool fresh = !std::filesystem::exists(path, ec) || std::filesystem::file_size(path, ec) == 0;
  std::ofstream out(path, std::ios::app);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  if (fresh) out << kMetricsCsvHeader << '\n';
  out << format_metrics_row(row) << '\n';
  if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace trajsearch
