#include "test_util.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace protofold;
using pft::sorted_rows;

TEST(Spatial, SingleAtom) {
  const HashGrid g = build_grid({Vec3(1, 2, 3)}, GridConfig{});
  int occupied = 0;
  for (std::size_t c = 0; c < g.cell_count(); ++c) occupied += g.cell_start[c + 1] > g.cell_start[c];
  EXPECT_EQ(occupied, 1);
  const auto t = build_neighbor_table(g, 9.0);
  EXPECT_EQ(t.count(0), 0u);
}

TEST(Spatial, CubeCornersGetDistinctBuckets) {
  Positions r;
  for (int k = 0; k < 8; ++k) r.emplace_back(k & 1, (k >> 1) & 1, (k >> 2) & 1);
  GridConfig cfg;
  cfg.alpha = 8.0;
  cfg.min_cell_size = 0.0;
  const HashGrid g = build_grid(r, cfg);
  EXPECT_NEAR(g.cell_size, std::cbrt(1.0 / 64.0), 1e-12);
  EXPECT_LT(g.cell_size, 1.0);
  std::set<int> cells(g.atom_cell.begin(), g.atom_cell.end());
  EXPECT_EQ(cells.size(), 8u);
}

TEST(Spatial, CellSizeFormula) {
  std::mt19937_64 rng(1);
  const auto r = pft::random_cloud(500, 30.0, rng);
  GridConfig cfg;
  cfg.min_cell_size = 0.0;
  const HashGrid g = build_grid(r, cfg);
  const Vec3 e = g.r_max - g.r_min;
  EXPECT_NEAR(g.cell_size, std::cbrt(e.prod() / 500.0), 1e-12);
  // default floor
  const HashGrid f = build_grid(pft::random_cloud(500, 3.0, rng), GridConfig{});
  EXPECT_DOUBLE_EQ(f.cell_size, 1.0);
}

TEST(Spatial, RehashAndLookup) {
  std::mt19937_64 rng(2);
  const auto r = pft::random_cloud(500, 25.0, rng);
  const HashGrid g = build_grid(r, GridConfig{});
  std::vector<int> hits(r.size(), 0);
  for (std::size_t c = 0; c < g.cell_count(); ++c)
    for (int k = g.cell_start[c]; k < g.cell_start[c + 1]; ++k) {
      const int i = g.cell_atoms[static_cast<std::size_t>(k)];
      ++hits[static_cast<std::size_t>(i)];
      EXPECT_EQ(g.cell_of(r[static_cast<std::size_t>(i)]), c);
      // componentwise floor((r - r_min)/s)
      const auto kc = g.cell_coords(r[static_cast<std::size_t>(i)]);
      for (int d = 0; d < 3; ++d)
        EXPECT_EQ(kc[static_cast<std::size_t>(d)],
                  std::min(static_cast<int>(std::floor((r[static_cast<std::size_t>(i)][d] - g.r_min[d]) / g.cell_size)),
                           g.dims[static_cast<std::size_t>(d)] - 1));
    }
  for (int h : hits) EXPECT_EQ(h, 1);
}

TEST(Spatial, TwoAtomExamples) {
  {
    const Positions r{Vec3(0, 0, 0), Vec3(20, 0, 0)};
    const auto t = build_neighbor_table(build_grid(r, GridConfig{}), 9.0);
    EXPECT_EQ(t.count(0), 0u);
    EXPECT_EQ(t.count(1), 0u);
  }
  {
    const Positions r{Vec3(0, 0, 0), Vec3(1, 0, 0)};
    const auto t = build_neighbor_table(build_grid(r, GridConfig{}), 9.0);
    EXPECT_EQ(t.list(0), std::vector<int>{1});
    EXPECT_EQ(t.list(1), std::vector<int>{0});
  }
}

TEST(Spatial, FilteredTableEqualsBruteForce) {
  std::mt19937_64 rng(3);
  for (double box : {12.0, 25.0, 60.0}) {
    const auto r = pft::random_cloud(500, box, rng);
    const GridConfig cfg;
    const HashGrid g = build_grid(r, cfg);
    const auto super = build_neighbor_table(g, cfg.max_cutoff());
    const auto super_rows = sorted_rows(super);
    for (std::size_t i = 0; i < r.size(); ++i) {
      const auto& row = super_rows[i];
      EXPECT_EQ(std::adjacent_find(row.begin(), row.end()), row.end());
      EXPECT_EQ(std::count(row.begin(), row.end(), static_cast<int>(i)), 0);
    }
    for (double d : {cfg.d_elec, cfg.d_vdw, cfg.d_cav}) {
      const auto b = brute_force_neighbors(r, d);
      for (std::size_t i = 0; i < r.size(); ++i) EXPECT_TRUE(std::is_sorted(b.begin(i), b.end(i)));
      const auto f = sorted_rows(filter_neighbors(super, r, d));
      EXPECT_EQ(f, sorted_rows(b));
      EXPECT_EQ(sorted_rows(grid_neighbors(g, r, d)), sorted_rows(b));
      // symmetry
      for (std::size_t i = 0; i < r.size(); ++i)
        for (int j : f[i]) EXPECT_TRUE(std::binary_search(f[static_cast<std::size_t>(j)].begin(), f[static_cast<std::size_t>(j)].end(), static_cast<int>(i)));
    }
  }
}

TEST(Spatial, SupersetHoldsForSmallCells) {
  // cells much smaller than the cutoff exercise the stencil radius
  std::mt19937_64 rng(4);
  const auto r = pft::random_cloud(300, 15.0, rng);
  GridConfig cfg;
  cfg.alpha = 20.0;
  cfg.min_cell_size = 0.0;
  const HashGrid g = build_grid(r, cfg);
  EXPECT_LT(g.cell_size, 1.0);
  const auto f = filter_neighbors(build_neighbor_table(g, 5.0), r, 5.0);
  EXPECT_EQ(sorted_rows(f), sorted_rows(brute_force_neighbors(r, 5.0)));
  EXPECT_EQ(sorted_rows(grid_neighbors(g, r, 5.0)), sorted_rows(brute_force_neighbors(r, 5.0)));
}

TEST(Spatial, ElongatedChainRespectsCellCap) {
  Positions r;
  for (int i = 0; i < 1000; ++i) r.emplace_back(3.8 * i, 0.01 * (i % 3), 0.02 * (i % 5));
  const HashGrid g = build_grid(r, GridConfig{});
  EXPECT_LE(g.cell_count(), grid_cell_cap(r.size()));
  const auto f = filter_neighbors(build_neighbor_table(g, 9.0), r, 9.0);
  EXPECT_EQ(sorted_rows(f), sorted_rows(brute_force_neighbors(r, 9.0)));
}

TEST(Spatial, Errors) {
  EXPECT_THROW(build_grid({}, GridConfig{}), ConfigError);
  EXPECT_THROW(build_grid({Vec3(0, 0, std::nan(""))}, GridConfig{}), GeometryError);
  GridConfig bad;
  bad.alpha = 0.0;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = GridConfig{};
  bad.d_vdw = -1;
  EXPECT_THROW(bad.validate(), ConfigError);
}
