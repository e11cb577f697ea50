#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "trajsearch/dataset.hpp"
#include "trajsearch/errors.hpp"

using namespace trajsearch;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("trajsearch_test_" + name)).string();
}

}  // namespace

TEST(Dataset, RandomWalkCountsAndContinuity) {
  RandomWalkParams p;
  p.nTrajectories = 7;
  p.nTimesteps = 30;
  p.seed = 11;
  const auto ds = generate_random_walk(p);
  ASSERT_EQ(ds.size(), 7u * 29u);
  EXPECT_NO_THROW(validate_dataset(ds.view()));
  for (const auto& s : ds.segments) {
    EXPECT_NEAR(s.tEnd - s.tStart, 1.0, 1e-12);
    EXPECT_LE(std::abs(s.end.x - s.start.x), p.stepMax);
    EXPECT_LE(std::abs(s.end.y - s.start.y), p.stepMax);
    EXPECT_LE(std::abs(s.end.z - s.start.z), p.stepMax);
  }
  for (std::uint32_t t = 0; t < 7; ++t) {
    const auto& first = ds.segments[t * 29];
    EXPECT_GE(first.tStart, 0.0);
    EXPECT_LE(first.tStart, p.startWindow);
    EXPECT_GE(first.start.x, 0.0);
    EXPECT_LE(first.start.x, p.initialBox);
  }
}

TEST(Dataset, SingleStepTrajectory) {
  RandomWalkParams p;
  p.nTrajectories = 1;
  p.nTimesteps = 2;
  const auto ds = generate_random_walk(p);
  ASSERT_EQ(ds.size(), 1u);
}

TEST(Dataset, GenerationIsDeterministicAndSeedSensitive) {
  RandomWalkParams p;
  p.nTrajectories = 4;
  p.nTimesteps = 10;
  p.seed = 5;
  EXPECT_EQ(generate_random_walk(p).segments, generate_random_walk(p).segments);
  auto other = p;
  other.seed = 6;
  EXPECT_NE(generate_random_walk(p).segments, generate_random_walk(other).segments);
}

TEST(Dataset, StreamingMatchesInMemory) {
  DenseWalkParams p;
  p.nParticles = 9;
  p.nTimesteps = 20;
  std::vector<SegmentST> streamed;
  generate_random_dense(p, [&](std::span<const SegmentST> t) { streamed.insert(streamed.end(), t.begin(), t.end()); });
  EXPECT_EQ(streamed, generate_random_dense(p).segments);
}

TEST(Dataset, DenseCubeSideAndCounts) {
  DenseWalkParams p;
  EXPECT_NEAR(p.cube_side(), 83.64, 0.01);
  p.nParticles = 265;
  const auto ds = generate_random_dense(p);
  EXPECT_EQ(ds.size(), 50'880u);
  EXPECT_NO_THROW(validate_dataset(ds.view()));
  EXPECT_EQ(ds.units, "pc");
  const double L = p.cube_side();
  for (const auto& s : ds.segments) {
    EXPECT_EQ(s.tStart, static_cast<double>(s.segmentId));
    for (int k = 0; k < 3; ++k) {
      const double step = std::abs(s.end[k] - s.start[k]);
      EXPECT_GE(step, p.stepMin);
      EXPECT_LE(step, p.stepMax);
      if (s.segmentId == 0) {
        EXPECT_GE(s.start[k], 0.0);
        EXPECT_LE(s.start[k], L);
      }
    }
  }
}

TEST(Dataset, DenseParticlesStayNearTheCube) {
  // A particle that leaves by more than 20% is turned around: it can overshoot
  // the margin by at most one step.
  DenseWalkParams p;
  p.nParticles = 64;
  p.density = 1.0;  // L = 4: steps of 1-5 leave the cube constantly
  const auto ds = generate_random_dense(p);
  const double L = p.cube_side();
  const double margin = p.escapeFraction * L + p.stepMax;
  for (const auto& s : ds.segments) {
    for (int k = 0; k < 3; ++k) {
      EXPECT_GE(s.end[k], -margin);
      EXPECT_LE(s.end[k], L + margin);
    }
  }
}

TEST(Dataset, BinaryRoundTripIsBitExact) {
  RandomWalkParams p;
  p.nTrajectories = 3;
  p.nTimesteps = 5;
  const auto ds = generate_random_walk(p);
  std::stringstream buf;
  write_dataset_binary(ds.view(), buf);
  EXPECT_EQ(read_dataset_binary(buf).segments, ds.segments);
}

TEST(Dataset, CsvRoundTripIsExact) {
  RandomWalkParams p;
  p.nTrajectories = 3;
  p.nTimesteps = 5;
  const auto ds = generate_random_walk(p);
  std::stringstream buf;
  write_dataset_csv(ds.view(), buf);
  EXPECT_EQ(buf.str().substr(0, buf.str().find('\n')), kDatasetCsvHeader);
  EXPECT_EQ(read_dataset_csv(buf).segments, ds.segments);
}

TEST(Dataset, FileRoundTripAndWriter) {
  RandomWalkParams p;
  p.nTrajectories = 4;
  p.nTimesteps = 6;
  const auto ds = generate_random_walk(p);
  for (const auto* name : {"rt.bin", "rt.csv"}) {
    const auto path = temp_path(name);
    {
      DatasetWriter w(path, format_for_path(path), ds.size());
      w.append(std::span(ds.segments).first(5));
      w.append(std::span(ds.segments).subspan(5));
      w.finish();
    }
    EXPECT_EQ(read_dataset(path).segments, ds.segments) << name;
    std::filesystem::remove(path);
  }
}

TEST(Dataset, WriterRejectsCountMismatch) {
  const auto path = temp_path("short.bin");
  DatasetWriter w(path, DatasetFormat::Binary, 3);
  EXPECT_THROW(w.finish(), PreconditionError);
  std::filesystem::remove(path);
}

TEST(Dataset, CsvMissingColumnNamesTheLine) {
  std::stringstream in;
  in << kDatasetCsvHeader << "\n0,0,0,0,0,0,1,1,1,1\n0,1,1,1,1,1,2,2,2\n";
  try {
    read_dataset_csv(in);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
    EXPECT_EQ(e.record(), 1u);
  }
}

TEST(Dataset, CsvBadHeader) {
  std::stringstream in("a,b,c\n");
  EXPECT_THROW(read_dataset_csv(in), FormatError);
}

TEST(Dataset, BinaryWrongMagic) {
  std::stringstream in("XXXX\0\0\0\0\0\0\0\0");
  EXPECT_THROW(read_dataset_binary(in), FormatError);
}

TEST(Dataset, ValidationCatchesBrokenContinuity) {
  std::vector<SegmentST> segs = {{0, 0, {0, 0, 0}, {1, 0, 0}, 0, 1}, {0, 1, {1, 0, 0.5}, {2, 0, 0}, 1, 2}};
  try {
    validate_dataset(segs);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.record(), 1u);
  }
  segs[1].start.z = 0;
  EXPECT_NO_THROW(validate_dataset(segs));
  segs[1].tEnd = 0.5;  // non-monotone time
  EXPECT_THROW(validate_dataset(segs), ParseError);
}

TEST(Dataset, MissingFileIsIoError) {
  EXPECT_THROW(read_dataset("/nonexistent/path/data.csv"), IoError);
}

TEST(Dataset, MetadataSidecar) {
  DenseWalkParams p;
  const auto meta = describe_dataset(p);
  const auto path = temp_path("meta.bin");
  write_metadata(meta, 12'582'912, path);
  std::ifstream in(path + ".meta.json");
  std::stringstream text;
  text << in.rdbuf();
  EXPECT_NE(text.str().find("\"cube_side\""), std::string::npos);
  EXPECT_NE(text.str().find("12582912"), std::string::npos);
  std::filesystem::remove(path + ".meta.json");
}
