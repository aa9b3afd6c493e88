#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include "daf/dct.hpp"
#include "daf/features.hpp"
#include "daf/hog.hpp"
#include "daf/lfs.hpp"
#include "daf/rng.hpp"

namespace {

daf::Block random_block(std::size_t side, daf::Rng& rng) {
  daf::Block b(side);
  for (double& v : b.data) v = rng.uniform01();
  return b;
}

// O(N^4) transform straight from the type-II definition; the oracle the
// separable implementation is checked against.
daf::Block dct2_definition(const daf::Block& p) {
  const std::size_t n = p.side;
  daf::Block c(n);
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = 0; v < n; ++v) {
      const double au = u == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
      const double av = v == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
      double acc = 0.0;
      for (std::size_t x = 0; x < n; ++x) {
        for (std::size_t y = 0; y < n; ++y) {
          acc += p.at(x, y) *
                 std::cos(std::numbers::pi * (2.0 * x + 1.0) * u / (2.0 * n)) *
                 std::cos(std::numbers::pi * (2.0 * y + 1.0) * v / (2.0 * n));
        }
      }
      c.at(u, v) = au * av * acc;
    }
  }
  return c;
}

daf::GrayImage image_from(const std::vector<std::vector<double>>& rows) {
  daf::GrayImage img(static_cast<int>(rows[0].size()), static_cast<int>(rows.size()));
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) img.at(y, x) = rows[y][x];
  }
  return img;
}

}  // namespace

TEST_CASE("dct2 of a constant block concentrates on the DC coefficient") {
  daf::Block ones(16);
  for (double& v : ones.data) v = 1.0;
  const daf::Block c = daf::dct2(ones);
  REQUIRE(std::abs(c.at(0, 0) - 16.0) < 1e-9);
  for (std::size_t u = 0; u < 16; ++u) {
    for (std::size_t v = 0; v < 16; ++v) {
      if (u == 0 && v == 0) continue;
      REQUIRE(std::abs(c.at(u, v)) < 1e-9);
    }
  }
}

TEST_CASE("dct2 matches the O(N^4) definition") {
  daf::Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const daf::Block p = random_block(16, rng);
    const daf::Block fast = daf::dct2(p);
    const daf::Block slow = dct2_definition(p);
    for (std::size_t i = 0; i < p.data.size(); ++i) {
      REQUIRE(std::abs(fast.data[i] - slow.data[i]) < 1e-9);
    }
  }
}

TEST_CASE("dct2 round trip and Parseval") {
  daf::Rng rng(7);
  const daf::DctPlan plan(16);
  for (int trial = 0; trial < 100; ++trial) {
    const daf::Block p = random_block(16, rng);
    const daf::Block c = plan.forward(p);
    const daf::Block back = plan.inverse(c);
    double pixel_energy = 0.0;
    double coeff_energy = 0.0;
    for (std::size_t i = 0; i < p.data.size(); ++i) {
      REQUIRE(std::abs(back.data[i] - p.data[i]) < 1e-6);
      pixel_energy += p.data[i] * p.data[i];
      coeff_energy += c.data[i] * c.data[i];
    }
    REQUIRE(std::abs(pixel_energy - coeff_energy) < 1e-6);
  }
}

TEST_CASE("hog of a constant patch is all zero") {
  daf::Block flat(16);
  for (double& v : flat.data) v = 0.42;
  const auto h = daf::hog(flat, 8, 9);
  REQUIRE(h.size() == 36);
  for (double v : h) REQUIRE(v == 0.0);
}

TEST_CASE("hog output length is cells x bins") {
  daf::Rng rng(13);
  const daf::Block p = random_block(16, rng);
  REQUIRE(daf::hog(p, 8, 9).size() == 36);
  REQUIRE(daf::hog(p, 4, 9).size() == 144);
  REQUIRE(daf::hog(p, 16, 12).size() == 12);
  REQUIRE_THROWS_AS(daf::hog(p, 5, 9), daf::GeometryError);
}

TEST_CASE("vertical step edge lands entirely in the 0-degree bin") {
  // Step at x = 4: gradient support is columns 3 and 4, inside the two
  // left cells only. All orientation mass belongs to bin 0.
  daf::Block edge(16);
  for (std::size_t y = 0; y < 16; ++y) {
    for (std::size_t x = 0; x < 16; ++x) {
      edge.at(y, x) = x >= 4 ? 1.0 : 0.0;
    }
  }
  const auto h = daf::hog(edge, 8, 9);
  // Cells row-major: (0,0), (0,1), (1,0), (1,1); 9 bins each.
  for (std::size_t cell = 0; cell < 4; ++cell) {
    for (std::size_t bin = 0; bin < 9; ++bin) {
      const double v = h[cell * 9 + bin];
      const bool left_cell = cell == 0 || cell == 2;
      if (left_cell && bin == 0) {
        REQUIRE(v > 0.0);
      } else {
        REQUIRE(v == 0.0);
      }
    }
  }
}

TEST_CASE("lfs band partition covers the plane with contiguous bands") {
  for (int q : {1, 2, 3, 5}) {
    std::vector<int> seen(static_cast<std::size_t>(q), 0);
    int last = 0;
    for (std::size_t r = 0; r <= 30; ++r) {
      const int band = daf::lfs_band(r, 0, 16, q);
      REQUIRE(band >= last);  // contiguous in radius
      REQUIRE(band < q);
      ++seen[static_cast<std::size_t>(band)];
      last = band;
    }
    for (int count : seen) REQUIRE(count > 0);
  }
}

TEST_CASE("lfs of a constant patch: only band 0, column 0") {
  daf::Block ones(16);
  for (double& v : ones.data) v = 1.0;
  const daf::Block c = daf::dct2(ones);  // single coefficient 16 at (0,0)
  const auto f = daf::lfs(c, 3);
  REQUIRE(f.size() == 48);
  // Band 0 holds radii 0..10, so column 0 has 11 in-band rows. The other
  // slots only see DCT rounding residue.
  REQUIRE(std::abs(f[0] - std::log(17.0) / 11.0) < 1e-12);
  for (std::size_t i = 1; i < f.size(); ++i) REQUIRE(std::abs(f[i]) < 1e-12);
}

TEST_CASE("lfs with q=1 reduces to plain column means of log magnitudes") {
  daf::Rng rng(19);
  const daf::Block p = random_block(16, rng);
  const daf::Block c = daf::dct2(p);
  const auto f = daf::lfs(c, 1);
  REQUIRE(f.size() == 16);
  for (std::size_t v = 0; v < 16; ++v) {
    double mean = 0.0;
    for (std::size_t u = 0; u < 16; ++u) mean += std::log1p(std::fabs(c.at(u, v)));
    mean /= 16.0;
    REQUIRE(std::abs(f[v] - mean) < 1e-12);
  }
}

TEST_CASE("lfs is invariant to permuting a column's in-band entries") {
  daf::Rng rng(21);
  daf::Block c = random_block(16, rng);
  const auto base = daf::lfs(c, 3);
  // Swap two coefficients of column 2 that share band 1: radii 11..20.
  std::swap(c.data[9 * 16 + 2], c.data[12 * 16 + 2]);  // u=9 and u=12, v=2
  REQUIRE(daf::lfs_band(9, 2, 16, 3) == daf::lfs_band(12, 2, 16, 3));
  const auto swapped = daf::lfs(c, 3);
  for (std::size_t i = 0; i < base.size(); ++i) {
    REQUIRE(std::abs(base[i] - swapped[i]) < 1e-12);
  }
}

TEST_CASE("partition geometry") {
  daf::GrayImage img(256, 256);
  daf::PatchConfig cfg;
  cfg.grid = 16;
  const auto patches = daf::partition(img, cfg);
  REQUIRE(patches.size() == 256);
  REQUIRE(patches[0].side == 16);

  cfg.grid = 1;
  REQUIRE(daf::partition(img, cfg).size() == 1);
  REQUIRE(daf::partition(img, cfg)[0].side == 256);

  cfg.grid = 3;
  REQUIRE_THROWS_AS(daf::partition(img, cfg), daf::GeometryError);
}

TEST_CASE("partition is row-major with correct content") {
  daf::GrayImage img(4, 4);
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 4; ++x) img.at(y, x) = y * 4 + x;
  }
  daf::PatchConfig cfg;
  cfg.grid = 2;
  const auto patches = daf::partition(img, cfg);
  REQUIRE(patches.size() == 4);
  REQUIRE(patches[0].at(0, 0) == 0.0);
  REQUIRE(patches[1].at(0, 0) == 2.0);  // second patch of the first row
  REQUIRE(patches[2].at(0, 0) == 8.0);
  REQUIRE(patches[3].at(1, 1) == 15.0);
}

TEST_CASE("multiscale window blocks equal constituent patch means") {
  daf::Rng rng(31);
  daf::PatchConfig cfg;
  cfg.grid = 4;
  cfg.windows = {{2, 2}, {1, 1}};
  daf::PatchGrid grid;
  grid.grid = 4;
  grid.rows = daf::Matrix(16, 5);
  for (std::size_t r = 0; r < 16; ++r) {
    for (std::size_t c = 0; c < 5; ++c) grid.rows.at(r, c) = rng.uniform01();
  }
  const auto fused = daf::multiscale(grid, cfg);
  REQUIRE(fused.size() == (4 + 16) * 5);

  // First window placement covers patches {0, 1, 4, 5}.
  for (std::size_t c = 0; c < 5; ++c) {
    const double mean = (grid.rows.at(0, c) + grid.rows.at(1, c) +
                         grid.rows.at(4, c) + grid.rows.at(5, c)) /
                        4.0;
    REQUIRE(std::abs(fused[c] - mean) < 1e-6);
  }
  // The (1,1) block is the identity on per-patch rows.
  for (std::size_t r = 0; r < 16; ++r) {
    for (std::size_t c = 0; c < 5; ++c) {
      REQUIRE(fused[4 * 5 + r * 5 + c] == grid.rows.at(r, c));
    }
  }
}

TEST_CASE("n=2 single window output is the elementwise mean of all rows") {
  daf::PatchConfig cfg;
  cfg.grid = 2;
  cfg.windows = {{2, 2}};
  daf::PatchGrid grid;
  grid.grid = 2;
  grid.rows = daf::Matrix(4, 3);
  const double planted[4][3] = {{1, 2, 3}, {5, 6, 7}, {9, 10, 11}, {13, 14, 15}};
  for (std::size_t r = 0; r < 4; ++r) {
    for (std::size_t c = 0; c < 3; ++c) grid.rows.at(r, c) = planted[r][c];
  }
  const auto fused = daf::multiscale(grid, cfg);
  REQUIRE(fused.size() == 3);
  REQUIRE(fused[0] == 7.0);
  REQUIRE(fused[1] == 8.0);
  REQUIRE(fused[2] == 9.0);
}

TEST_CASE("identical patches make every window feature equal") {
  daf::PatchConfig cfg;
  cfg.grid = 4;
  cfg.windows = {{4, 4}, {2, 2}, {1, 1}};
  daf::PatchGrid grid;
  grid.grid = 4;
  grid.rows = daf::Matrix(16, 7);
  daf::Rng rng(37);
  std::vector<double> shared(7);
  for (double& v : shared) v = rng.uniform01();
  for (std::size_t r = 0; r < 16; ++r) {
    for (std::size_t c = 0; c < 7; ++c) grid.rows.at(r, c) = shared[c];
  }
  const auto fused = daf::multiscale(grid, cfg);
  REQUIRE(fused.size() == (1 + 4 + 16) * 7);
  for (std::size_t i = 0; i < fused.size(); ++i) {
    REQUIRE(std::abs(fused[i] - shared[i % 7]) < 1e-9);
  }
}

TEST_CASE("window exceeding the grid is rejected") {
  daf::PatchConfig cfg;
  cfg.grid = 2;
  cfg.windows = {{3, 1}};
  daf::GrayImage img(32, 32);
  REQUIRE_THROWS_AS(daf::extract(img, cfg), daf::GeometryError);
}

TEST_CASE("default configuration dimension is 28560") {
  const daf::PatchConfig cfg;
  REQUIRE(daf::patch_feature_dimension(cfg, 256) == 84);
  REQUIRE(daf::feature_dimension(cfg, 256) == 28560);
  // Placement counts 4 / 16 / 64 / 256 for windows 8, 4, 2, 1.
  REQUIRE(daf::window_placements_per_side(16, {8, 8}) == 2);
  REQUIRE(daf::window_placements_per_side(16, {4, 4}) == 4);
  REQUIRE(daf::window_placements_per_side(16, {2, 2}) == 8);
  REQUIRE(daf::window_placements_per_side(16, {1, 1}) == 16);
}

TEST_CASE("dimension formula holds for every legal small config") {
  daf::Rng rng(41);
  for (int n : {1, 2, 4, 8}) {
    for (int m = 1; m <= n; ++m) {
      for (int s = 1; s <= n; ++s) {
        daf::PatchConfig cfg;
        cfg.grid = n;
        cfg.hog_cell = 8;
        cfg.hog_bins = 4;
        cfg.freq_bands = 2;
        cfg.windows = {{m, s}};
        const int image_size = n * 8;
        daf::GrayImage img(image_size, image_size);
        for (double& p : img.pixels) p = rng.uniform01();
        const auto fv = daf::extract(img, cfg);
        REQUIRE(fv.size() == daf::feature_dimension(cfg, image_size));
      }
    }
  }
}

TEST_CASE("windows [(1,1)] reproduce per-patch features exactly") {
  daf::Rng rng(43);
  daf::GrayImage img(64, 64);
  for (double& p : img.pixels) p = rng.uniform01();
  daf::PatchConfig cfg;
  cfg.grid = 4;
  cfg.windows = {{1, 1}};
  const auto fused = daf::extract(img, cfg);
  const daf::PatchGrid grid = daf::compute_patch_grid(img, cfg);
  REQUIRE(fused.size() == grid.rows.rows() * grid.rows.cols());
  for (std::size_t r = 0; r < grid.rows.rows(); ++r) {
    for (std::size_t c = 0; c < grid.rows.cols(); ++c) {
      REQUIRE(fused[r * grid.rows.cols() + c] == grid.rows.at(r, c));
    }
  }
}

TEST_CASE("extract is deterministic") {
  daf::Rng rng(47);
  daf::GrayImage img(64, 64);
  for (double& p : img.pixels) p = rng.uniform01();
  daf::PatchConfig cfg;
  cfg.grid = 8;
  cfg.windows = {{2, 2}, {1, 1}};
  const auto a = daf::extract(img, cfg);
  const auto b = daf::extract(img, cfg);
  REQUIRE(a == b);
  for (double v : a) REQUIRE(std::isfinite(v));
}

TEST_CASE("recalc mode: single-patch windows match the averaging mode") {
  daf::Rng rng(53);
  daf::GrayImage img(64, 64);
  for (double& p : img.pixels) p = rng.uniform01();
  daf::PatchConfig avg;
  avg.grid = 8;
  avg.windows = {{1, 1}};
  daf::PatchConfig recalc = avg;
  recalc.recalc_windows = true;
  REQUIRE(daf::extract(img, avg) == daf::extract(img, recalc));
}

TEST_CASE("recalc mode dimension accounts for window size") {
  daf::PatchConfig cfg;
  cfg.grid = 8;
  cfg.hog_cell = 4;
  cfg.hog_bins = 9;
  cfg.freq_bands = 3;
  cfg.windows = {{2, 2}, {1, 1}};
  cfg.recalc_windows = true;
  const int image_size = 64;  // patch side 8
  // (2,2) windows: 16 placements of region side 16: hog 4 cells early?
  //   hog cell scales to 8 -> (16/8)^2 * 9 = 36; lfs 3 * 16 = 48 -> 84.
  // (1,1) windows: 64 placements: hog (8/4)^2 * 9 = 36; lfs 3 * 8 = 24 -> 60.
  REQUIRE(daf::feature_dimension(cfg, image_size) == 16 * 84 + 64 * 60);
  daf::Rng rng(59);
  daf::GrayImage img(image_size, image_size);
  for (double& p : img.pixels) p = rng.uniform01();
  REQUIRE(daf::extract(img, cfg).size() == daf::feature_dimension(cfg, image_size));
}
