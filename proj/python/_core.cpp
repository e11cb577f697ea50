#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "trajsearch/dataset.hpp"
#include "trajsearch/errors.hpp"
#include "trajsearch/search.hpp"

namespace py = pybind11;
using namespace trajsearch;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// Columns follow the dataset CSV: traj, seg, x0, y0, z0, t0, x1, y1, z1, t1.
std::vector<SegmentST> to_segments(const Array& a) {
  if (a.ndim() != 2 || a.shape(1) != 10) throw py::value_error("segments must have shape (n, 10)");
  const auto r = a.unchecked<2>();
  std::vector<SegmentST> out(static_cast<std::size_t>(a.shape(0)));
  for (py::ssize_t i = 0; i < a.shape(0); ++i) {
    auto& s = out[static_cast<std::size_t>(i)];
    s.trajectoryId = static_cast<std::uint32_t>(r(i, 0));
    s.segmentId = static_cast<std::uint32_t>(r(i, 1));
    s.start = {r(i, 2), r(i, 3), r(i, 4)};
    s.tStart = r(i, 5);
    s.end = {r(i, 6), r(i, 7), r(i, 8)};
    s.tEnd = r(i, 9);
  }
  return out;
}

Array from_segments(std::span<const SegmentST> segs) {
  Array a({static_cast<py::ssize_t>(segs.size()), py::ssize_t{10}});
  auto w = a.mutable_unchecked<2>();
  for (py::ssize_t i = 0; i < a.shape(0); ++i) {
    const auto& s = segs[static_cast<std::size_t>(i)];
    const double row[10] = {double(s.trajectoryId), double(s.segmentId), s.start.x, s.start.y, s.start.z,
                            s.tStart, s.end.x, s.end.y, s.end.z, s.tEnd};
    for (int k = 0; k < 10; ++k) w(i, k) = row[k];
  }
  return a;
}

// Columns follow the results CSV: query traj, query seg, entry traj, entry seg, t_begin, t_end.
Array from_results(const ResultSet& rs) {
  Array a({static_cast<py::ssize_t>(rs.size()), py::ssize_t{6}});
  auto w = a.mutable_unchecked<2>();
  for (py::ssize_t i = 0; i < a.shape(0); ++i) {
    const auto& r = rs.records[static_cast<std::size_t>(i)];
    const double row[6] = {double(r.queryTrajectoryId), double(r.querySegmentId), double(r.entryTrajectoryId),
                           double(r.entrySegmentId), r.interval.begin, r.interval.end};
    for (int k = 0; k < 6; ++k) w(i, k) = row[k];
  }
  return a;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Distance-threshold search over 3-D trajectory segments";

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<PreconditionError>(m, "PreconditionError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<ComputationError>(m, "ComputationError", base.ptr());
  py::register_exception<IntegrityError>(m, "IntegrityError", base.ptr());
  py::register_exception<CapacityError>(m, "CapacityError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());
  py::register_exception<FormatError>(m, "FormatError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());

  m.def(
      "generate_random_walk",
      [](std::uint32_t trajectories, std::uint32_t timesteps, std::uint64_t seed, double startWindow,
         double initialBox, double stepMax) {
        RandomWalkParams p;
        p.nTrajectories = trajectories;
        p.nTimesteps = timesteps;
        p.seed = seed;
        p.startWindow = startWindow;
        p.initialBox = initialBox;
        p.stepMax = stepMax;
        return from_segments(generate_random_walk(p).view());
      },
      py::arg("trajectories") = 2500, py::arg("timesteps") = 400, py::arg("seed") = 1,
      py::arg("start_window") = 100.0, py::arg("initial_box") = 1000.0, py::arg("step_max") = 1.0);

  m.def(
      "generate_random_dense",
      [](std::uint32_t particles, std::uint32_t timesteps, std::uint64_t seed, double density) {
        DenseWalkParams p;
        p.nParticles = particles;
        p.nTimesteps = timesteps;
        p.seed = seed;
        p.density = density;
        return from_segments(generate_random_dense(p).view());
      },
      py::arg("particles") = 65536, py::arg("timesteps") = 193, py::arg("seed") = 1, py::arg("density") = 0.112);

  m.def("read_dataset", [](const std::string& path) { return from_segments(read_dataset(path).view()); });
  m.def("write_dataset", [](const Array& segs, const std::string& path) {
    TrajectoryDataset ds;
    ds.segments = to_segments(segs);
    write_dataset(ds, path);
  });

  m.def(
      "interaction_interval",
      [](Array entry, Array query, double d) -> py::object {
        const auto e = to_segments(entry.reshape({1, 10}));
        const auto q = to_segments(query.reshape({1, 10}));
        const auto iv = interaction_interval(e[0], q[0], d);
        if (!iv) return py::none();
        return py::make_tuple(iv->begin, iv->end);
      },
      py::arg("entry"), py::arg("query"), py::arg("d"));

  m.def(
      "search",
      [](const Array& entries, const Array& queries, double d, const std::string& index, std::uint32_t cells,
         std::uint32_t bins, std::uint32_t subbins, std::uint32_t mbbSegments, std::size_t resultCapacity,
         unsigned workers) {
        const auto e = to_segments(entries);
        const auto q = to_segments(queries);
        IndexParams p;
        p.cells = cells;
        p.bins = bins;
        p.subbins = subbins;
        p.mbbSegments = mbbSegments;
        BatchOptions batch;
        batch.resultCapacity = resultCapacity;
        batch.workers = workers;
        SearchOutcome out;
        {
          py::gil_scoped_release release;
          out = run_search(parse_index_kind(index), p, e, q, d, batch);
        }
        py::dict metrics;
        metrics["invocations"] = out.run.metrics.invocations;
        metrics["candidates_refined"] = out.run.metrics.candidatesRefined;
        metrics["reserved_records"] = out.run.metrics.reservedRecords;
        metrics["build_seconds"] = out.buildSeconds;
        metrics["search_seconds"] = out.run.metrics.wallSeconds;
        return py::make_tuple(from_results(out.run.results), metrics);
      },
      py::arg("entries"), py::arg("queries"), py::arg("d"), py::arg("index") = "temporal", py::arg("cells") = 50,
      py::arg("bins") = 1000, py::arg("subbins") = 2, py::arg("mbb_segments") = 1,
      py::arg("result_capacity") = kDefaultResultCapacity, py::arg("workers") = 0);

  m.def(
      "brute_force",
      [](const Array& entries, const Array& queries, double d) {
        const auto e = to_segments(entries);
        const auto q = to_segments(queries);
        ResultSet rs;
        {
          py::gil_scoped_release release;
          rs = brute_force_oracle(e, q, d);
        }
        return from_results(rs);
      },
      py::arg("entries"), py::arg("queries"), py::arg("d"));
}
