#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "trajsearch/dataset.hpp"
#include "trajsearch/errors.hpp"
#include "trajsearch/search.hpp"

using namespace trajsearch;

TEST(SearchIo, ParseIndexKind) {
  EXPECT_EQ(parse_index_kind("fsg"), IndexKind::Fsg);
  EXPECT_EQ(parse_index_kind("st"), IndexKind::SpatioTemporal);
  EXPECT_EQ(parse_index_kind("rtree"), IndexKind::RTree);
  EXPECT_THROW(parse_index_kind("kd"), ConfigError);
  EXPECT_STREQ(index_kind_name(IndexKind::Temporal), "temporal");
}

TEST(SearchIo, ResultsCsvRoundTrip) {
  const ResultSet rs = dedup_results({{1, 2, 3, 4, {0.1, 1.0 / 3.0}}, {0, 0, 9, 8, {2.5, 2.5}}});
  std::stringstream buf;
  write_results_csv(rs, buf);
  EXPECT_EQ(buf.str().substr(0, buf.str().find('\n')), kResultsCsvHeader);
  EXPECT_EQ(read_results_csv(buf), rs);
  std::stringstream bad;
  bad << kResultsCsvHeader << "\n1,2,3\n";
  EXPECT_THROW(read_results_csv(bad), ParseError);
}

TEST(SearchIo, MetricsRowAndFile) {
  MetricsRow row;
  row.kind = IndexKind::RTree;
  row.params = "r=4";
  row.d = 2;
  row.entries = 10;
  row.queries = 3;
  row.metrics.invocations = 2;
  const auto line = format_metrics_row(row);
  EXPECT_EQ(line.rfind("rtree,r=4,2,10,3,2,", 0), 0u) << line;
  const auto path = (std::filesystem::temp_directory_path() / "trajsearch_metrics_test.csv").string();
  std::filesystem::remove(path);
  append_metrics_csv(row, path);
  append_metrics_csv(row, path);
  std::ifstream in(path);
  std::string first;
  std::getline(in, first);
  EXPECT_EQ(first, kMetricsCsvHeader);
  int rows = 0;
  for (std::string l; std::getline(in, l);) ++rows;
  EXPECT_EQ(rows, 2);
  std::filesystem::remove(path);
}

TEST(SearchIo, AllIndexesAgree) {
  RandomWalkParams p;
  p.nTrajectories = 25;
  p.nTimesteps = 40;
  p.initialBox = 25;
  const auto d = generate_random_walk(p);
  p.seed = 123;
  p.nTrajectories = 3;
  const auto q = generate_random_walk(p);
  const auto oracle = brute_force_oracle(d.view(), q.view(), 2.5);
  IndexParams params;
  params.cells = 8;
  params.bins = 30;
  params.mbbSegments = 3;
  params.candidateBufferBytes = 1 << 20;
  for (auto kind : {IndexKind::Fsg, IndexKind::Temporal, IndexKind::SpatioTemporal, IndexKind::RTree}) {
    const auto out = run_search(kind, params, d.view(), q.view(), 2.5);
    EXPECT_EQ(out.run.results, oracle) << index_kind_name(kind);
  }
}
