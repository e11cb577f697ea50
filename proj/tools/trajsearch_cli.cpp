// trajsearch: dataset generation, index building, distance-threshold search,
// scenario benchmarks and oracle verification.
//
// Exit codes: 0 ok, 1 usage or configuration error, 2 I/O or format error,
// 3 verification failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "trajsearch/dataset.hpp"
#include "trajsearch/engine.hpp"
#include "trajsearch/errors.hpp"
#include "trajsearch/fsg_index.hpp"
#include "trajsearch/rtree_index.hpp"
#include "trajsearch/search.hpp"
#include "trajsearch/spatiotemporal_index.hpp"
#include "trajsearch/temporal_index.hpp"

using namespace trajsearch;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitVerify = 3;

struct VerificationFailure : Error {
  using Error::Error;
};

struct IndexFlags {
  std::string index = "temporal";
  std::uint32_t cells = 50;
  std::uint32_t bins = 1000;
  std::uint32_t subbins = 2;
  std::uint32_t mbbSegments = 1;
  std::uint64_t candidateBuffer = kDefaultCandidateBufferBytes;
  std::size_t resultCapacity = kDefaultResultCapacity;
  unsigned workers = 0;

  void add_to(CLI::App* cmd, bool withIndex = true) {
    if (withIndex) {
      cmd->add_option("--index", index, "Index kind")
          ->check(CLI::IsMember({"fsg", "temporal", "st", "rtree"}))
          ->capture_default_str();
    }
    cmd->add_option("--cells", cells, "FSG cells per axis")->check(CLI::PositiveNumber)->capture_default_str();
    cmd->add_option("--bins", bins, "Temporal bins m")->check(CLI::PositiveNumber)->capture_default_str();
    cmd->add_option("--subbins", subbins, "Spatial slabs v per dimension")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--mbb-segments", mbbSegments, "R-tree segments per leaf MBB (r)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--candidate-buffer", candidateBuffer, "FSG candidate buffer in bytes")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--result-capacity", resultCapacity, "Result buffer capacity in records")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--workers", workers, "Worker threads (0: all cores)")->capture_default_str();
  }

  IndexParams params() const {
    IndexParams p;
    p.cells = cells;
    p.bins = bins;
    p.subbins = subbins;
    p.mbbSegments = mbbSegments;
    p.candidateBufferBytes = candidateBuffer;
    return p;
  }

  BatchOptions batch() const {
    BatchOptions b;
    b.resultCapacity = resultCapacity;
    b.workers = workers;
    return b;
  }
};

// --- generate ----------------------------------------------------------------

struct GenerateArgs {
  std::string kind;
  std::string output;
  std::string format;
  std::uint64_t seed = 1;
  std::uint32_t trajectories = 0;
  std::uint32_t timesteps = 0;
  std::uint32_t particles = 0;
  double startWindow = RandomWalkParams{}.startWindow;
  double initialBox = RandomWalkParams{}.initialBox;
  double stepMax = 0.0;
  double stepMin = DenseWalkParams{}.stepMin;
  double density = DenseWalkParams{}.density;
  double escapeFraction = DenseWalkParams{}.escapeFraction;
};

int cmd_generate(const GenerateArgs& a) {
  const DatasetFormat format = a.format.empty() ? format_for_path(a.output)
                                                : (a.format == "bin" ? DatasetFormat::Binary : DatasetFormat::Csv);
  TrajectoryDataset meta;
  std::uint64_t count = 0;
  std::function<void(const TrajectorySink&)> run;

  if (a.kind == "random-dense" || a.kind == "s3-queries") {
    DenseWalkParams p;
    p.seed = a.seed;
    p.density = a.density;
    p.stepMin = a.stepMin;
    if (a.stepMax > 0.0) p.stepMax = a.stepMax;
    p.escapeFraction = a.escapeFraction;
    if (a.kind == "s3-queries") p.nParticles = 265;
    if (a.particles) p.nParticles = a.particles;
    if (a.timesteps) p.nTimesteps = a.timesteps;
    meta = describe_dataset(p);
    count = std::uint64_t{p.nParticles} * (p.nTimesteps - 1);
    run = [p](const TrajectorySink& sink) { generate_random_dense(p, sink); };
  } else {
    RandomWalkParams p;
    p.seed = a.seed;
    p.startWindow = a.startWindow;
    p.initialBox = a.initialBox;
    if (a.stepMax > 0.0) p.stepMax = a.stepMax;
    if (a.kind == "s1-queries") p.nTrajectories = 100;
    if (a.trajectories) p.nTrajectories = a.trajectories;
    if (a.timesteps) p.nTimesteps = a.timesteps;
    meta = describe_dataset(p);
    count = std::uint64_t{p.nTrajectories} * (p.nTimesteps - 1);
    run = [p](const TrajectorySink& sink) { generate_random_walk(p, sink); };
  }
  if (a.kind == "random-1m") meta.name = "random-1m";

  DatasetWriter writer(a.output, format, count);
  run([&](std::span<const SegmentST> traj) { writer.append(traj); });
  writer.finish();
  write_metadata(meta, count, a.output);

  nlohmann::json summary;
  summary["output"] = a.output;
  summary["name"] = meta.name;
  summary["segments"] = count;
  summary["units"] = meta.units;
  summary["seed"] = a.seed;
  if (meta.parameters.count("cube_side")) summary["cube_side"] = std::stod(meta.parameters["cube_side"]);
  std::cout << summary.dump() << '\n';
  return kExitOk;
}

// --- build-index -------------------------------------------------------------

struct BuildArgs {
  std::string dataset;
  std::string output;
  IndexFlags flags;
};

int cmd_build_index(const BuildArgs& a) {
  const auto ds = read_dataset(a.dataset);
  const auto kind = parse_index_kind(a.flags.index);
  const auto t0 = std::chrono::steady_clock::now();
  nlohmann::json info;
  info["index"] = index_kind_name(kind);
  info["entries"] = ds.size();
  switch (kind) {
    case IndexKind::Fsg: {
      const auto index = FsgIndex::build(ds.view(), {a.flags.cells, a.flags.cells, a.flags.cells});
      info["nonempty_cells"] = index.cells().size();
      info["lookup_entries"] = index.lookup().size();
      info["cell_size"] = index.spec().cellSize;
      if (!a.output.empty()) index.save(a.output);
      break;
    }
    case IndexKind::Temporal: {
      const auto index = TemporalIndex::build(ds.view(), a.flags.bins);
      std::size_t nonEmpty = 0;
      for (const auto& b : index.bins()) nonEmpty += !b.members.empty();
      info["bins"] = index.bins().size();
      info["nonempty_bins"] = nonEmpty;
      info["bin_length"] = index.bin_length();
      break;
    }
    case IndexKind::SpatioTemporal: {
      const auto bounds = max_subbin_count(ds.view());
      const auto index = SpatioTemporalIndex::build(ds.view(), a.flags.bins, a.flags.subbins);
      info["bins"] = index.m();
      info["subbins"] = index.v();
      info["max_subbins"] = bounds.admissible;
      info["array_sizes"] = {index.array(0).size(), index.array(1).size(), index.array(2).size()};
      break;
    }
    case IndexKind::RTree: {
      const auto index = RTreeIndex::build(ds.view(), a.flags.mbbSegments);
      info["leaf_entries"] = index.leaf_entries().size();
      info["height"] = index.height();
      info["r"] = index.r();
      break;
    }
  }
  info["build_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!a.output.empty() && kind != IndexKind::Fsg) {
    throw ConfigError("--output: only the fsg index has an on-disk format");
  }
  std::cout << info.dump() << '\n';
  return kExitOk;
}

// --- search ------------------------------------------------------------------

struct SearchArgs {
  std::string dataset;
  std::string queries;
  std::string output;
  std::string metrics;
  std::string fsgIndex;
  std::vector<double> distances;
  IndexFlags flags;
};

int cmd_search(const SearchArgs& a) {
  if (a.distances.size() != 1) throw ConfigError("search takes exactly one --distance");
  const double d = a.distances.front();
  const auto entries = read_dataset(a.dataset);
  const auto queries = read_dataset(a.queries);
  const auto kind = parse_index_kind(a.flags.index);
  SearchOutcome out;
  std::string params = a.flags.params().describe(kind);
  if (!a.fsgIndex.empty()) {
    if (kind != IndexKind::Fsg) throw ConfigError("--fsg-index requires --index fsg");
    const auto index = FsgIndex::load(a.fsgIndex);
    const auto& n = index.spec().counts;
    params = "index=" + a.fsgIndex + " cells=" + std::to_string(n[0]) + "/" + std::to_string(n[1]) + "/" +
             std::to_string(n[2]) + " candidate_buffer=" + std::to_string(a.flags.params().candidateBufferBytes);
    out = run_search(index, a.flags.params(), entries.view(), queries.view(), d, a.flags.batch());
  } else {
    out = run_search(kind, a.flags.params(), entries.view(), queries.view(), d, a.flags.batch());
  }
  write_results_csv(out.run.results, a.output);
  MetricsRow row{kind, params, d, entries.size(), queries.size(), out.run.metrics, out.buildSeconds};
  if (!a.metrics.empty()) append_metrics_csv(row, a.metrics);
  std::cout << kMetricsCsvHeader << '\n' << format_metrics_row(row) << '\n';
  return kExitOk;
}

// --- verify ------------------------------------------------------------------

struct VerifyArgs {
  std::string dataset;
  std::string queries;
  std::string results;
  std::vector<std::string> indexes;
  std::vector<double> distances;
  double tolerance = 1e-9;
  IndexFlags flags;
};

int cmd_verify(const VerifyArgs& a) {
  if (a.distances.empty()) throw ConfigError("verify needs at least one --distance");
  if (!a.results.empty() && a.distances.size() != 1) throw ConfigError("--results takes exactly one --distance");
  const auto entries = read_dataset(a.dataset);
  const auto queries = read_dataset(a.queries);
  std::vector<std::string> kinds = a.indexes;
  if (kinds.empty() && a.results.empty()) kinds = {"fsg", "temporal", "st", "rtree"};

  bool ok = true;
  for (double d : a.distances) {
    const auto oracle = brute_force_oracle(entries.view(), queries.view(), d);
    auto check = [&](const std::string& label, const ResultSet& got) {
      const auto rep = compare_result_sets(got, oracle, a.tolerance);
      std::cout << (rep.equivalent ? "PASS " : "FAIL ") << label << " d=" << d << " (" << got.size()
                << " records vs oracle " << oracle.size() << "): " << rep.summary() << '\n';
      ok = ok && rep.equivalent;
    };
    if (!a.results.empty()) check(a.results, read_results_csv(a.results));
    for (const auto& k : kinds) {
      const auto kind = parse_index_kind(k);
      const auto out = run_search(kind, a.flags.params(), entries.view(), queries.view(), d, a.flags.batch());
      check(std::string(index_kind_name(kind)) + " [" + a.flags.params().describe(kind) + "]", out.run.results);
    }
  }
  if (!ok) throw VerificationFailure("result sets differ from the brute-force oracle");
  return kExitOk;
}

// --- bench -------------------------------------------------------------------

struct BenchArgs {
  std::string scenario = "s1-desk";
  std::string dataset;
  std::string queries;
  std::string output;
  std::vector<std::string> indexes;
  std::vector<double> distances;
  std::vector<std::uint32_t> cells;
  std::vector<std::uint32_t> bins;
  std::vector<std::uint32_t> subbins;
  std::vector<std::uint32_t> mbbSegments;
  unsigned trials = 3;
  std::uint64_t seed = 1;
  IndexFlags flags;
};

struct Scenario {
  TrajectoryDataset entries;
  TrajectoryDataset queries;
  std::vector<double> distances;
};

Scenario make_scenario(const BenchArgs& a) {
  Scenario s;
  if (!a.dataset.empty() || !a.queries.empty()) {
    if (a.dataset.empty() || a.queries.empty()) throw ConfigError("custom scenario needs --dataset and --queries");
    s.entries = read_dataset(a.dataset);
    s.queries = read_dataset(a.queries);
    return s;
  }
  // Query sets come from the same generator with a different seed.
  const std::uint64_t qseed = a.seed + 0x9E3779B97F4A7C15ull;
  if (a.scenario == "s1" || a.scenario == "s1-desk") {
    RandomWalkParams d;
    d.seed = a.seed;
    RandomWalkParams q = d;
    q.seed = qseed;
    q.nTrajectories = 100;
    if (a.scenario == "s1-desk") {
      d.nTrajectories = 250;
      q.nTrajectories = 10;
    }
    s.entries = generate_random_walk(d);
    s.queries = generate_random_walk(q);
    s.distances = {5, 10, 20, 30, 40, 50};
  } else if (a.scenario == "s3" || a.scenario == "s3-desk") {
    DenseWalkParams d;
    d.seed = a.seed;
    DenseWalkParams q = d;
    q.seed = qseed;
    q.nParticles = 265;
    if (a.scenario == "s3-desk") {
      d.nParticles = 2048;
      q.nParticles = 32;
    }
    s.entries = generate_random_dense(d);
    s.queries = generate_random_dense(q);
    s.distances = {0.5, 1, 2, 3, 4, 5};
  } else {
    throw ConfigError("unknown scenario '" + a.scenario + "' (s1, s1-desk, s3, s3-desk, or --dataset/--queries)");
  }
  return s;
}

int cmd_bench(const BenchArgs& a) {
  Scenario sc = make_scenario(a);
  const auto distances = a.distances.empty() ? sc.distances : a.distances;
  if (distances.empty()) throw ConfigError("bench needs at least one --distance for a custom scenario");
  std::vector<std::string> kinds = a.indexes;
  if (kinds.empty()) kinds = {"fsg", "temporal", "st", "rtree"};

  auto orDefault = [](const std::vector<std::uint32_t>& v, std::uint32_t def) {
    return v.empty() ? std::vector<std::uint32_t>{def} : v;
  };
  struct Config {
    IndexKind kind;
    IndexParams params;
  };
  std::vector<Config> configs;
  for (const auto& k : kinds) {
    const auto kind = parse_index_kind(k);
    IndexParams base = a.flags.params();
    std::vector<std::uint32_t> sweep;
    std::uint32_t IndexParams::*field = nullptr;
    switch (kind) {
      case IndexKind::Fsg: sweep = orDefault(a.cells, base.cells); field = &IndexParams::cells; break;
      case IndexKind::Temporal: sweep = orDefault(a.bins, base.bins); field = &IndexParams::bins; break;
      case IndexKind::SpatioTemporal: sweep = orDefault(a.subbins, base.subbins); field = &IndexParams::subbins; break;
      case IndexKind::RTree: sweep = orDefault(a.mbbSegments, base.mbbSegments); field = &IndexParams::mbbSegments; break;
    }
    for (auto value : sweep) {
      IndexParams p = base;
      p.*field = value;
      configs.push_back({kind, p});
    }
  }

  std::ofstream file;
  if (!a.output.empty()) {
    file.open(a.output);
    if (!file) throw IoError("cannot open '" + a.output + "' for writing");
  }
  const std::string header =
      "scenario,index,params,d,trials,mean_seconds,std_seconds,result_records,candidates_refined,invocations,"
      "slab_scheduled";
  std::cout << header << '\n';
  if (file) file << header << '\n';

  bool consistent = true;
  for (double d : distances) {
    std::optional<std::size_t> expected;
    for (const auto& c : configs) {
      std::vector<double> times;
      SearchOutcome last;
      for (unsigned t = 0; t < std::max(1u, a.trials); ++t) {
        last = run_search(c.kind, c.params, sc.entries.view(), sc.queries.view(), d, a.flags.batch());
        times.push_back(last.run.metrics.wallSeconds + last.scheduleSeconds);
      }
      const double mean = std::accumulate(times.begin(), times.end(), 0.0) / times.size();
      double var = 0.0;
      for (double t : times) var += (t - mean) * (t - mean);
      const double sd = times.size() > 1 ? std::sqrt(var / (times.size() - 1)) : 0.0;
      const std::size_t records = last.run.results.size();
      if (expected && *expected != records) consistent = false;
      if (!expected) expected = records;

      char line[512];
      std::snprintf(line, sizeof line, "%s,%s,%s,%.17g,%u,%.6g,%.6g,%zu,%llu,%zu,%zu",
                    a.dataset.empty() ? a.scenario.c_str() : "custom", index_kind_name(c.kind),
                    c.params.describe(c.kind).c_str(), d, static_cast<unsigned>(times.size()), mean, sd, records,
                    static_cast<unsigned long long>(last.run.metrics.candidatesRefined),
                    last.run.metrics.invocations, last.slabScheduled);
      std::cout << line << std::endl;
      if (file) file << line << '\n';
    }
  }
  if (!consistent) throw VerificationFailure("record counts disagree across configurations at the same d");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distance-threshold search over trajectory segment databases"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Generate a synthetic trajectory dataset");
  g->add_option("kind", gen.kind, "random-1m, random-walk, random-dense, s1-queries or s3-queries")
      ->required()
      ->check(CLI::IsMember({"random-1m", "random-walk", "random-dense", "s1-queries", "s3-queries"}));
  g->add_option("-o,--output", gen.output, "Output file (.csv, or .bin/.trj for binary)")->required();
  g->add_option("--format", gen.format, "Force the output format")->check(CLI::IsMember({"csv", "bin"}));
  g->add_option("--seed", gen.seed, "Random seed")->capture_default_str();
  g->add_option("--trajectories", gen.trajectories, "Random-walk trajectory count")->check(CLI::PositiveNumber);
  g->add_option("--particles", gen.particles, "Random-dense particle count")->check(CLI::PositiveNumber);
  g->add_option("--timesteps", gen.timesteps, "Timesteps per trajectory (>= 2)")->check(CLI::Range(2u, 1u << 30));
  g->add_option("--start-window", gen.startWindow, "Random-walk start times in [0, W]")->capture_default_str();
  g->add_option("--initial-box", gen.initialBox, "Random-walk initial cube side")->capture_default_str();
  g->add_option("--step-max", gen.stepMax, "Maximum per-axis step");
  g->add_option("--step-min", gen.stepMin, "Random-dense minimum per-axis step")->capture_default_str();
  g->add_option("--density", gen.density, "Random-dense particles per unit volume")->capture_default_str();
  g->add_option("--escape-fraction", gen.escapeFraction, "Random-dense escape margin as a fraction of the side")
      ->capture_default_str();

  BuildArgs build;
  auto* b = app.add_subcommand("build-index", "Build an index and report its structure");
  b->add_option("--dataset", build.dataset, "Entry dataset")->required();
  b->add_option("-o,--output", build.output, "Save the index (fsg only)");
  build.flags.add_to(b);

  SearchArgs search;
  auto* s = app.add_subcommand("search", "Run a distance-threshold search");
  s->add_option("--dataset", search.dataset, "Entry dataset")->required();
  s->add_option("--queries", search.queries, "Query dataset")->required();
  s->add_option("-d,--distance", search.distances, "Distance threshold")->required();
  s->add_option("-o,--output", search.output, "Results CSV")->required();
  s->add_option("--metrics", search.metrics, "Append a metrics row to this CSV");
  s->add_option("--fsg-index", search.fsgIndex, "Use a saved FSG index");
  search.flags.add_to(s);

  BenchArgs bench;
  auto* bn = app.add_subcommand("bench", "Sweep indexes and parameters over a scenario");
  bn->add_option("--scenario", bench.scenario, "s1, s1-desk, s3 or s3-desk")->capture_default_str();
  bn->add_option("--dataset", bench.dataset, "Custom entry dataset");
  bn->add_option("--queries", bench.queries, "Custom query dataset");
  bn->add_option("-o,--output", bench.output, "Write the table to this CSV");
  bn->add_option("--index", bench.indexes, "Index kinds (repeatable; default all)")
      ->check(CLI::IsMember({"fsg", "temporal", "st", "rtree"}));
  bn->add_option("-d,--distance", bench.distances, "Distance thresholds (repeatable)");
  bn->add_option("--sweep-cells", bench.cells, "FSG cells per axis to sweep")->delimiter(',');
  bn->add_option("--sweep-bins", bench.bins, "Temporal bin counts to sweep")->delimiter(',');
  bn->add_option("--sweep-subbins", bench.subbins, "Slab counts to sweep")->delimiter(',');
  bn->add_option("--sweep-mbb-segments", bench.mbbSegments, "R-tree r values to sweep")->delimiter(',');
  bn->add_option("--trials", bench.trials, "Trials per configuration")->capture_default_str();
  bn->add_option("--seed", bench.seed, "Scenario seed")->capture_default_str();
  bench.flags.add_to(bn, false);

  VerifyArgs verify;
  auto* v = app.add_subcommand("verify", "Compare indexes or a results file against the brute-force oracle");
  v->add_option("--dataset", verify.dataset, "Entry dataset")->required();
  v->add_option("--queries", verify.queries, "Query dataset")->required();
  v->add_option("-d,--distance", verify.distances, "Distance thresholds (repeatable)")->required();
  v->add_option("--results", verify.results, "Results CSV to check");
  v->add_option("--index", verify.indexes, "Index kinds to check (repeatable)")
      ->check(CLI::IsMember({"fsg", "temporal", "st", "rtree"}));
  v->add_option("--tolerance", verify.tolerance, "Interval endpoint tolerance")->capture_default_str();
  verify.flags.add_to(v, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*g) return cmd_generate(gen);
    if (*b) return cmd_build_index(build);
    if (*s) return cmd_search(search);
    if (*bn) return cmd_bench(bench);
    if (*v) return cmd_verify(verify);
  } catch (const VerificationFailure& e) {
    std::cerr << "verification failed: " << e.what() << '\n';
    return kExitVerify;
  } catch (const IntegrityError& e) {
    std::cerr << "integrity error: " << e.what() << '\n';
    return kExitVerify;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << '\n';
    return kExitIo;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kExitIo;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
