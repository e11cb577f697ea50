#include "trajsearch/fsg_index.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <utility>

#include "binary_io.hpp"
#include "trajsearch/errors.hpp"

namespace trajsearch {
namespace {

using detail::get;
using detail::put;

// Closed-extent cell range [kmin, kmax] along one axis, clamped to [0, n-1];
// false when the interval misses the grid.
bool axis_range(double lo, double hi, double origin, double size, std::uint32_t n, std::uint32_t& kmin,
                std::uint32_t& kmax) {
  const double a = (lo - origin) / size;
  const double b = (hi - origin) / size;
  const double last = static_cast<double>(n - 1);
  const double fmin = std::ceil(a - 1.0);
  const double fmax = std::floor(b);
  if (!(fmin <= last) || !(fmax >= 0.0)) return false;
  kmin = static_cast<std::uint32_t>(std::max(fmin, 0.0));
  kmax = static_cast<std::uint32_t>(std::min(fmax, last));
  return kmin <= kmax;
}

}  // namespace

std::uint64_t linearize(std::uint32_t cx, std::uint32_t cy, std::uint32_t cz, const GridSpec& spec) {
  if (cx >= spec.counts[0] || cy >= spec.counts[1] || cz >= spec.counts[2]) {
    throw PreconditionError("linearize: cell (" + std::to_string(cx) + "," + std::to_string(cy) + "," +
                            std::to_string(cz) + ") outside grid");
  }
  return std::uint64_t{cx} * spec.counts[1] * spec.counts[2] + std::uint64_t{cy} * spec.counts[2] + cz;
}

CellBlock rasterize_block(const Mbb& box, const GridSpec& spec) noexcept {
  CellBlock block;
  for (int axis = 0; axis < 3; ++axis) {
    if (!axis_range(box.min[axis], box.max[axis], spec.origin[axis], spec.cellSize[axis], spec.counts[axis],
                    block.lo[axis], block.hi[axis])) {
      return CellBlock{};
    }
  }
  block.empty = false;
  return block;
}

std::vector<CellCoord> rasterize_mbb(const Mbb& box, const GridSpec& spec) {
  const auto block = rasterize_block(box, spec);
  std::vector<CellCoord> out;
  if (block.empty) return out;
  out.reserve(block.size());
  for (std::uint32_t x = block.lo[0]; x <= block.hi[0]; ++x)
    for (std::uint32_t y = block.lo[1]; y <= block.hi[1]; ++y)
      for (std::uint32_t z = block.lo[2]; z <= block.hi[2]; ++z) out.push_back({x, y, z});
  return out;
}

FsgIndex FsgIndex::build(std::span<const SegmentST> entries, std::array<std::uint32_t, 3> counts) {
  if (entries.empty()) throw PreconditionError("build_fsg: empty dataset");
  if (entries.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw ConfigError("build_fsg: too many entries for 32-bit ids");
  }
  for (auto c : counts) {
    if (c == 0) throw ConfigError("build_fsg: cell counts must be >= 1");
  }

  Mbb extent = mbb_of_segment(entries.front());
  for (const auto& e : entries) {
    const auto box = mbb_of_segment(e);
    for (int axis = 0; axis < 3; ++axis) {
      extent.min[axis] = std::min(extent.min[axis], box.min[axis]);
      extent.max[axis] = std::max(extent.max[axis], box.max[axis]);
    }
  }

  FsgIndex index;
  index.spec_.origin = extent.min;
  index.spec_.counts = counts;
  for (int axis = 0; axis < 3; ++axis) {
    const double width = extent.max[axis] - extent.min[axis];
    index.spec_.cellSize[axis] = width > 0.0 ? width / counts[axis] : 1.0;
  }

  std::vector<std::pair<std::uint64_t, std::uint32_t>> pairs;
  pairs.reserve(entries.size() * 2);
  for (std::uint32_t id = 0; id < entries.size(); ++id) {
    const auto block = rasterize_block(mbb_of_segment(entries[id]), index.spec_);
    for (std::uint32_t x = block.lo[0]; !block.empty && x <= block.hi[0]; ++x)
      for (std::uint32_t y = block.lo[1]; y <= block.hi[1]; ++y)
        for (std::uint32_t z = block.lo[2]; z <= block.hi[2]; ++z)
          pairs.emplace_back(linearize(x, y, z, index.spec_), id);
  }
  std::sort(pairs.begin(), pairs.end());

  index.lookup_.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto pos = static_cast<std::uint32_t>(i);
    if (index.cells_.empty() || index.cells_.back().h != pairs[i].first) {
      index.cells_.push_back({pairs[i].first, pos, pos});
    } else {
      index.cells_.back().aMax = pos;
    }
    index.lookup_.push_back(pairs[i].second);
  }
  return index;
}

FsgIndex FsgIndex::from_parts(GridSpec spec, std::vector<FsgCell> cells, std::vector<std::uint32_t> lookup) {
  for (int axis = 0; axis < 3; ++axis) {
    if (spec.counts[axis] == 0 || !(spec.cellSize[axis] > 0.0)) {
      throw FormatError("FSG: invalid grid spec on axis " + std::to_string(axis));
    }
  }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& c = cells[i];
    if (c.h >= spec.total_cells()) throw FormatError("FSG: cell " + std::to_string(c.h) + " outside grid");
    if (i > 0 && cells[i - 1].h >= c.h) throw FormatError("FSG: G not strictly sorted at " + std::to_string(i));
    if (c.aMin > c.aMax || c.aMax >= lookup.size()) {
      throw FormatError("FSG: invalid A range for cell " + std::to_string(c.h));
    }
  }
  FsgIndex index;
  index.spec_ = spec;
  index.cells_ = std::move(cells);
  index.lookup_ = std::move(lookup);
  return index;
}

const FsgCell* FsgIndex::find_cell(std::uint64_t h) const noexcept {
  auto it = std::lower_bound(cells_.begin(), cells_.end(), h,
                             [](const FsgCell& c, std::uint64_t key) { return c.h < key; });
  return (it != cells_.end() && it->h == h) ? &*it : nullptr;
}

CandidateResult FsgIndex::get_candidates(const SegmentST& query, double d, std::size_t capacity,
                                         std::vector<std::uint32_t>& out) const {
  out.clear();
  CandidateResult res;
  const auto block = rasterize_block(expand_mbb(mbb_of_segment(query), d), spec_);
  if (block.empty) return res;
  const std::uint32_t zSpan = block.hi[2] - block.lo[2];
  for (std::uint32_t x = block.lo[0]; x <= block.hi[0]; ++x) {
    for (std::uint32_t y = block.lo[1]; y <= block.hi[1]; ++y) {
      // Cells of one z-row are consecutive in h: one binary search per row.
      const std::uint64_t h0 = linearize(x, y, block.lo[2], spec_);
      const std::uint64_t h1 = h0 + zSpan;
      auto it = std::lower_bound(cells_.begin(), cells_.end(), h0,
                                 [](const FsgCell& c, std::uint64_t key) { return c.h < key; });
      for (; it != cells_.end() && it->h <= h1; ++it) {
        const std::uint64_t n = std::uint64_t{it->aMax} - it->aMin + 1;
        res.total += n;
        if (res.total > capacity) {
          res.overflow = true;
          continue;
        }
        out.insert(out.end(), lookup_.begin() + it->aMin, lookup_.begin() + it->aMax + 1);
      }
    }
  }
  return res;
}

void FsgIndex::save(std::ostream& out) const {
  out.write("FSG1", 4);
  for (int axis = 0; axis < 3; ++axis) put(out, spec_.origin[axis]);
  for (double s : spec_.cellSize) put(out, s);
  for (auto c : spec_.counts) put(out, c);
  put<std::uint64_t>(out, cells_.size());
  for (const auto& c : cells_) {
    put(out, c.h);
    put(out, c.aMin);
    put(out, c.aMax);
  }
  put<std::uint64_t>(out, lookup_.size());
  for (auto id : lookup_) put(out, id);
}

FsgIndex FsgIndex::load(std::istream& in) {
  char magic[4] = {};
  if (!in.read(magic, 4) || std::memcmp(magic, "FSG1", 4) != 0) throw FormatError("not an FSG1 index file");
  GridSpec spec;
  bool ok = true;
  for (int axis = 0; axis < 3; ++axis) ok = ok && get(in, spec.origin[axis]);
  for (double& s : spec.cellSize) ok = ok && get(in, s);
  for (auto& c : spec.counts) ok = ok && get(in, c);
  std::uint64_t nCells = 0;
  ok = ok && get(in, nCells);
  if (!ok) throw FormatError("FSG1: truncated header");
  std::vector<FsgCell> cells;
  for (std::uint64_t i = 0; i < nCells; ++i) {
    FsgCell c{};
    if (!(get(in, c.h) && get(in, c.aMin) && get(in, c.aMax))) throw ParseError(i, "FSG1: truncated G record");
    cells.push_back(c);
  }
  std::uint64_t nLookup = 0;
  if (!get(in, nLookup)) throw FormatError("FSG1: truncated A header");
  std::vector<std::uint32_t> lookup;
  for (std::uint64_t i = 0; i < nLookup; ++i) {
    std::uint32_t id = 0;
    if (!get(in, id)) throw ParseError(i, "FSG1: truncated A record");
    lookup.push_back(id);
  }
  return from_parts(spec, std::move(cells), std::move(lookup));
}

void FsgIndex::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  save(out);
  if (!out) throw IoError("write failed for '" + path + "'");
}

FsgIndex FsgIndex::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  return load(in);
}

BatchedRun search_spatial(const FsgIndex& index, std::span<const SegmentST> entries,
                          std::span<const SegmentST> queries, double d, const SpatialSearchOptions& opts) {
  if (!(d > 0.0)) throw PreconditionError("search_spatial: d must be > 0");
  for (auto id : index.lookup()) {
    if (id >= entries.size()) throw PreconditionError("search_spatial: index does not match the entry array");
  }
  const std::uint64_t total = opts.candidateBufferEntries;
  const Kernel kernel = [&](std::uint32_t queryId, KernelContext& ctx) {
    const SegmentST& q = queries[queryId];
    auto& candidates = ctx.scratch();
    const std::size_t capacity = static_cast<std::size_t>(total / ctx.batch_size());
    const auto res = index.get_candidates(q, d, capacity, candidates);
    if (res.overflow) {
      ctx.overflow_candidates(res.total);
      return;
    }
    ctx.count_candidates(candidates.size());
    for (auto entryId : candidates) {
      if (auto hit = compare(entries[entryId], q, d)) {
        if (!ctx.emit(*hit)) return;
      }
    }
  };
  BatchOptions batch = opts.batch;
  if (!batch.describe) {
    batch.describe = [&](std::uint32_t i) {
      return "query " + std::to_string(i) + " (trajectory " + std::to_string(queries[i].trajectoryId) +
             ", segment " + std::to_string(queries[i].segmentId) + ")";
    };
  }
  return run_batched(kernel, queries.size(), batch);
}

}  // namespace trajsearch
