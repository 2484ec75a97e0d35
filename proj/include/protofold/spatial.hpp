#pragma once

#include "protofold/common.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace protofold {

struct GridConfig {
  double alpha = 1.0;
  double d_elec = 9.0;
  double d_vdw = 5.0;
  double d_cav = 8.0;
  double min_cell_size = 1.0;

  double max_cutoff() const { return std::max({d_elec, d_vdw, d_cav}); }
  void validate() const {
    if (!(alpha > 0.0)) throw ConfigError("grid alpha must be positive");
    if (!(d_elec > 0.0 && d_vdw > 0.0 && d_cav > 0.0)) throw ConfigError("cutoffs must be positive");
    if (!(min_cell_size >= 0.0)) throw ConfigError("min_cell_size must be non-negative");
  }
};

/// Uniform grid over the bounding box; buckets stored as CSR arrays.
struct HashGrid {
  double cell_size = 1.0;
  Vec3 r_min = Vec3::Zero();
  Vec3 r_max = Vec3::Zero();
  std::array<int, 3> dims{1, 1, 1};
  std::vector<int> cell_start;  // size cells + 1
  std::vector<int> cell_atoms;  // atom indices grouped by cell, ascending within a cell
  std::vector<int> atom_cell;

  std::size_t cell_count() const { return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2]; }

  std::array<int, 3> cell_coords(const Vec3& r) const {
    std::array<int, 3> k{};
    for (int d = 0; d < 3; ++d) {
      int c = static_cast<int>(std::floor((r[d] - r_min[d]) / cell_size));
      k[static_cast<std::size_t>(d)] = std::clamp(c, 0, dims[static_cast<std::size_t>(d)] - 1);
    }
    return k;
  }
  std::size_t linear(int x, int y, int z) const {
    return (static_cast<std::size_t>(z) * dims[1] + static_cast<std::size_t>(y)) * dims[0] + static_cast<std::size_t>(x);
  }
  std::size_t cell_of(const Vec3& r) const {
    const auto k = cell_coords(r);
    return linear(k[0], k[1], k[2]);
  }
};

/// Cells above this count trigger a coarser grid (guards against very
/// elongated bounding boxes).
inline std::size_t grid_cell_cap(std::size_t n) { return std::max<std::size_t>(std::size_t{1} << 22, 64 * n); }

inline HashGrid build_grid(const Positions& r, const GridConfig& cfg) {
  cfg.validate();
  const std::size_t n = r.size();
  if (n == 0) throw ConfigError("build_grid: no atoms");
  HashGrid g;
  g.r_min = g.r_max = r[0];
  for (const auto& p : r) {
    if (!p.allFinite()) throw GeometryError("build_grid: non-finite coordinate");
    g.r_min = g.r_min.cwiseMin(p);
    g.r_max = g.r_max.cwiseMax(p);
  }
  const Vec3 ext = g.r_max - g.r_min;
  const double v_bb = ext.x() * ext.y() * ext.z();
  g.cell_size = std::cbrt(v_bb / (cfg.alpha * static_cast<double>(n)));
  if (!(g.cell_size >= cfg.min_cell_size)) g.cell_size = cfg.min_cell_size;
  if (!(g.cell_size > 0.0)) g.cell_size = 1.0;  // single point with a zero floor
  for (;;) {
    for (int d = 0; d < 3; ++d)
      g.dims[static_cast<std::size_t>(d)] = static_cast<int>(std::floor(ext[d] / g.cell_size)) + 1;
    if (g.cell_count() <= grid_cell_cap(n)) break;
    g.cell_size *= 1.25;
  }
  const std::size_t cells = g.cell_count();
  g.atom_cell.resize(n);
  g.cell_start.assign(cells + 1, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = g.cell_of(r[i]);
    g.atom_cell[i] = static_cast<int>(c);
    ++g.cell_start[c + 1];
  }
  for (std::size_t c = 0; c < cells; ++c) g.cell_start[c + 1] += g.cell_start[c];
  g.cell_atoms.resize(n);
  std::vector<int> fill(g.cell_start.begin(), g.cell_start.end() - 1);
  for (std::size_t i = 0; i < n; ++i)
    g.cell_atoms[static_cast<std::size_t>(fill[static_cast<std::size_t>(g.atom_cell[i])]++)] = static_cast<int>(i);
  return g;
}

/// Per-atom neighbor lists in CSR form, without self. Row order is
/// deterministic for given coordinates; brute-force rows are ascending.
struct NeighborTable {
  std::vector<int> offset{0};
  std::vector<int> index;

  std::size_t atoms() const { return offset.size() - 1; }
  std::size_t count(std::size_t i) const { return static_cast<std::size_t>(offset[i + 1] - offset[i]); }
  const int* begin(std::size_t i) const { return index.data() + offset[i]; }
  const int* end(std::size_t i) const { return index.data() + offset[i + 1]; }
  std::vector<int> list(std::size_t i) const { return {begin(i), end(i)}; }
};

namespace detail {

/// Stencil rows: for each (dy, dz) with a non-empty row, the largest |dx|
/// such that the cell-center offset lies within rc. With `tight`, the test is
/// instead the minimum gap between the two cells, which is what an exact
/// distance filter needs.
struct StencilRow {
  int dy, dz, dx_max;
};

inline std::vector<StencilRow> stencil_rows(double s, double rc, bool tight = false) {
  const int reach = static_cast<int>(std::ceil(rc / s)) + (tight ? 1 : 0);
  auto gap = [tight](int k) {
    const int a = std::abs(k);
    return tight ? std::max(a - 1, 0) : a;
  };
  std::vector<StencilRow> rows;
  for (int dz = -reach; dz <= reach; ++dz)
    for (int dy = -reach; dy <= reach; ++dy) {
      const int yz = gap(dy) * gap(dy) + gap(dz) * gap(dz);
      int dx = -1;
      while (dx < reach && s * s * static_cast<double>(gap(dx + 1) * gap(dx + 1) + yz) <= rc * rc) ++dx;
      if (dx >= 0) rows.push_back({dy, dz, dx});
    }
  return rows;
}

/// Symmetric CSR table from unordered pairs. Rows fill in pair order, so
/// pairs sorted by (a, b) with a < b give ascending rows.
inline NeighborTable table_from_pairs(std::size_t n, const std::vector<std::pair<int, int>>& pairs) {
  NeighborTable t;
  t.offset.assign(n + 1, 0);
  for (const auto& [a, b] : pairs) {
    ++t.offset[static_cast<std::size_t>(a) + 1];
    ++t.offset[static_cast<std::size_t>(b) + 1];
  }
  for (std::size_t i = 0; i < n; ++i) t.offset[i + 1] += t.offset[i];
  t.index.resize(static_cast<std::size_t>(t.offset[n]));
  std::vector<int> fill(t.offset.begin(), t.offset.end() - 1);
  for (const auto& [a, b] : pairs) {
    t.index[static_cast<std::size_t>(fill[static_cast<std::size_t>(a)]++)] = b;
    t.index[static_cast<std::size_t>(fill[static_cast<std::size_t>(b)]++)] = a;
  }
  return t;
}

}  // namespace detail

/// Enumerates every unordered pair of atoms in cells within d_cut + sqrt(3) s_c
/// of each other (with `tight`: cells no more than d_cut apart) exactly once,
/// grouped by the first atom: begin(i), then span(i, first, last) over
/// contiguous runs of cell_atoms, then end(i). Along x a stencil row is a
/// contiguous run of cells, hence one run of atoms. Cell pairs are taken with
/// c <= c'.
template <typename Begin, typename Span, typename End>
void for_each_candidate_pair(const HashGrid& g, double d_cut, Begin&& begin, Span&& span, End&& end,
                             bool tight = false) {
  // the tight radius carries a little slack for atoms binned across a cell face by rounding
  const auto rows = tight ? detail::stencil_rows(g.cell_size, d_cut + 1e-9 * g.cell_size, true)
                          : detail::stencil_rows(g.cell_size, d_cut + std::sqrt(3.0) * g.cell_size);
  const std::size_t cells = g.cell_count();
  const int nx = g.dims[0], ny = g.dims[1], nz = g.dims[2];
  const int* ca = g.cell_atoms.data();
  const int* cs = g.cell_start.data();
  std::vector<std::pair<int, int>> spans;
  for (std::size_t c = 0; c < cells; ++c) {
    const int b = cs[c], e = cs[c + 1];
    if (b == e) continue;
    const int cx = static_cast<int>(c % static_cast<std::size_t>(nx));
    const int cy = static_cast<int>((c / static_cast<std::size_t>(nx)) % static_cast<std::size_t>(ny));
    const int cz = static_cast<int>(c / (static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny)));
    spans.clear();
    for (const auto& row : rows) {
      // rows before this cell's own row hold only lower cell indices
      if (row.dz < 0 || (row.dz == 0 && row.dy < 0)) continue;
      const int y = cy + row.dy, z = cz + row.dz;
      if (y < 0 || y >= ny || z >= nz) continue;
      const int x0 = (row.dz == 0 && row.dy == 0) ? cx + 1 : std::max(0, cx - row.dx_max);
      const int x1 = std::min(nx - 1, cx + row.dx_max);
      if (x0 > x1) continue;
      const std::size_t lin = g.linear(0, y, z);
      const int sb = cs[lin + static_cast<std::size_t>(x0)], se = cs[lin + static_cast<std::size_t>(x1) + 1];
      if (sb < se) spans.emplace_back(sb, se);
    }
    for (int k = b; k < e; ++k) {
      const int i = ca[k];
      begin(i);
      if (k + 1 < e) span(i, ca + k + 1, ca + e);
      for (const auto& [sb, se] : spans) span(i, ca + sb, ca + se);
      end(i);
    }
  }
}

namespace detail {

template <typename Keep>
NeighborTable gather_cells(const HashGrid& g, double d_cut, Keep keep, bool tight = false) {
  std::vector<std::pair<int, int>> pairs;
  for_each_candidate_pair(
      g, d_cut, [](int) {},
      [&](int i, const int* first, const int* last) {
        for (; first != last; ++first)
          if (keep(i, *first)) pairs.emplace_back(i, *first);
      },
      [](int) {}, tight);
  return table_from_pairs(g.atom_cell.size(), pairs);
}

}  // namespace detail

/// Superset table: for every atom, all atoms in cells whose centers lie within
/// d_cut + sqrt(3) s_c of the atom's cell center.
inline NeighborTable build_neighbor_table(const HashGrid& g, double d_cut) {
  return detail::gather_cells(g, d_cut, [](int, int) { return true; });
}

/// Exact table {j : |r_i - r_j| <= d_cut} straight from the grid, without
/// materializing the superset.
inline NeighborTable grid_neighbors(const HashGrid& g, const Positions& r, double d_cut) {
  const double c2 = d_cut * d_cut;
  return detail::gather_cells(g, d_cut, [&](int i, int j) {
    return (r[static_cast<std::size_t>(i)] - r[static_cast<std::size_t>(j)]).squaredNorm() <= c2;
  }, true);
}

/// Exact sub-table {j : |r_i - r_j| <= d_cut}, order preserved.
inline NeighborTable filter_neighbors(const NeighborTable& t, const Positions& r, double d_cut) {
  NeighborTable f;
  const std::size_t n = t.atoms();
  f.offset.assign(n + 1, 0);
  f.index.reserve(t.index.size() / 2);
  const double c2 = d_cut * d_cut;
  for (std::size_t i = 0; i < n; ++i) {
    for (const int* p = t.begin(i); p != t.end(i); ++p)
      if ((r[i] - r[static_cast<std::size_t>(*p)]).squaredNorm() <= c2) f.index.push_back(*p);
    f.offset[i + 1] = static_cast<int>(f.index.size());
  }
  return f;
}

/// O(n^2) reference neighbor sets (also the brute-force pipeline mode). Each
/// unordered pair is tested once.
inline NeighborTable brute_force_neighbors(const Positions& r, double d_cut) {
  const std::size_t n = r.size();
  const double c2 = d_cut * d_cut;
  std::vector<std::pair<int, int>> pairs;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if ((r[i] - r[j]).squaredNorm() <= c2) pairs.emplace_back(static_cast<int>(i), static_cast<int>(j));
  return detail::table_from_pairs(n, pairs);
}

}  // namespace protofold
