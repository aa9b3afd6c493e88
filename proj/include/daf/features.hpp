#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "daf/dct.hpp"
#include "daf/error.hpp"
#include "daf/hog.hpp"
#include "daf/image.hpp"
#include "daf/lfs.hpp"
#include "daf/matrix.hpp"

namespace daf {

/// Sliding window over the patch grid: side and stride in patches.
struct Window {
  int size = 1;
  int stride = 1;
};

/// Geometry and knobs of the patch feature pipeline.
struct PatchConfig {
  int grid = 16;      // patches per side
  int hog_cell = 8;   // pixels
  int hog_bins = 9;
  int freq_bands = 3; // q
  std::vector<Window> windows{{8, 8}, {4, 4}, {2, 2}, {1, 1}};
  bool recalc_windows = false;  // recompute per window instead of averaging

  void validate(int image_size) const {
    if (grid < 1) throw InvalidSpec("grid must be >= 1");
    if (image_size % grid != 0) {
      throw GeometryError("image size not divisible by grid");
    }
    const int patch_side = image_size / grid;
    if (hog_cell < 1 || patch_side % hog_cell != 0) {
      throw GeometryError("patch side not divisible by hog cell");
    }
    if (hog_bins < 1) throw InvalidSpec("hog bins must be >= 1");
    if (freq_bands < 1) throw InvalidSpec("freq bands must be >= 1");
    if (windows.empty()) throw InvalidSpec("at least one window required");
    for (const Window& w : windows) {
      if (w.size < 1 || w.size > grid) {
        throw GeometryError("window size outside [1, grid]");
      }
      if (w.stride < 1) throw InvalidSpec("window stride must be >= 1");
    }
  }
};

inline std::size_t window_placements_per_side(int grid, const Window& w) {
  return static_cast<std::size_t>((grid - w.size) / w.stride + 1);
}

/// Per-patch feature length: HOG histogram plus q LFS column statistics.
inline std::size_t patch_feature_dimension(const PatchConfig& cfg, int image_size) {
  const std::size_t patch_side = static_cast<std::size_t>(image_size / cfg.grid);
  return hog_dimension(patch_side, cfg.hog_cell, cfg.hog_bins) +
         lfs_dimension(patch_side, cfg.freq_bands);
}

/// Feature length contributed by one window placement. Averaged windows
/// reuse the per-patch length; recomputed windows cover size*patch_side
/// pixels with a proportionally scaled HOG cell (cell count unchanged) and
/// a full-resolution LFS, so their frequency part grows with the window.
inline std::size_t window_feature_dimension(const PatchConfig& cfg, int image_size,
                                            const Window& w) {
  const std::size_t patch_side = static_cast<std::size_t>(image_size / cfg.grid);
  if (!cfg.recalc_windows) return patch_feature_dimension(cfg, image_size);
  const std::size_t region_side = patch_side * static_cast<std::size_t>(w.size);
  return hog_dimension(region_side, cfg.hog_cell * w.size, cfg.hog_bins) +
         lfs_dimension(region_side, cfg.freq_bands);
}

/// Total feature vector length for this configuration.
inline std::size_t feature_dimension(const PatchConfig& cfg, int image_size) {
  cfg.validate(image_size);
  std::size_t dim = 0;
  for (const Window& w : cfg.windows) {
    const std::size_t per_side = window_placements_per_side(cfg.grid, w);
    dim += per_side * per_side * window_feature_dimension(cfg, image_size, w);
  }
  return dim;
}

/// Splits a square image into grid x grid non-overlapping patches,
/// row-major.
inline std::vector<Block> partition(const GrayImage& img, const PatchConfig& cfg) {
  if (img.width != img.height) throw GeometryError("partition: image not square");
  if (img.width % cfg.grid != 0) {
    throw GeometryError("partition: image size not divisible by grid");
  }
  const int side = img.width / cfg.grid;
  std::vector<Block> patches;
  patches.reserve(static_cast<std::size_t>(cfg.grid) * cfg.grid);
  for (int py = 0; py < cfg.grid; ++py) {
    for (int px = 0; px < cfg.grid; ++px) {
      Block patch(static_cast<std::size_t>(side));
      for (int y = 0; y < side; ++y) {
        for (int x = 0; x < side; ++x) {
          patch.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x)) =
              img.at(py * side + y, px * side + x);
        }
      }
      patches.push_back(std::move(patch));
    }
  }
  return patches;
}

/// HOG and LFS of one pixel block, concatenated (spatial first).
inline std::vector<double> block_features(const Block& block, int hog_cell,
                                          int hog_bins, int freq_bands,
                                          const DctPlan& plan) {
  std::vector<double> row = hog(block, hog_cell, hog_bins);
  const Block coeffs = plan.forward(block);
  const std::vector<double> freq = lfs(coeffs, freq_bands);
  row.insert(row.end(), freq.begin(), freq.end());
  return row;
}

/// Per-patch feature rows in patch order: grid^2 rows of equal length.
struct PatchGrid {
  int grid = 0;
  Matrix rows;  // grid^2 x d_patch
};

inline PatchGrid compute_patch_grid(const GrayImage& img, const PatchConfig& cfg) {
  cfg.validate(img.width);
  const std::vector<Block> patches = partition(img, cfg);
  const std::size_t d_patch = patch_feature_dimension(cfg, img.width);
  PatchGrid out;
  out.grid = cfg.grid;
  out.rows = Matrix(patches.size(), d_patch);
  const DctPlan plan(patches.front().side);
  for (std::size_t i = 0; i < patches.size(); ++i) {
    const std::vector<double> row =
        block_features(patches[i], cfg.hog_cell, cfg.hog_bins, cfg.freq_bands, plan);
    std::copy(row.begin(), row.end(), out.rows.row(i));
  }
  return out;
}

/// Multi-scale fusion by window averaging: for each window placement
/// (row-major, windows in configuration order) emit the mean of the covered
/// per-patch rows; all placements are concatenated.
inline std::vector<double> multiscale(const PatchGrid& grid, const PatchConfig& cfg) {
  if (grid.grid != cfg.grid || grid.rows.rows() != static_cast<std::size_t>(cfg.grid) * cfg.grid) {
    throw GeometryError("multiscale: grid/config mismatch");
  }
  const std::size_t d_patch = grid.rows.cols();
  std::vector<double> out;
  for (const Window& w : cfg.windows) {
    if (w.size > cfg.grid) throw GeometryError("multiscale: window exceeds grid");
    const std::size_t per_side = window_placements_per_side(cfg.grid, w);
    for (std::size_t wy = 0; wy < per_side; ++wy) {
      for (std::size_t wx = 0; wx < per_side; ++wx) {
        std::vector<double> mean(d_patch, 0.0);
        for (int dy = 0; dy < w.size; ++dy) {
          for (int dx = 0; dx < w.size; ++dx) {
            const std::size_t patch_index =
                (wy * static_cast<std::size_t>(w.stride) + dy) * cfg.grid +
                wx * static_cast<std::size_t>(w.stride) + dx;
            const double* row = grid.rows.row(patch_index);
            for (std::size_t k = 0; k < d_patch; ++k) mean[k] += row[k];
          }
        }
        const double inv = 1.0 / (static_cast<double>(w.size) * w.size);
        for (double& v : mean) v *= inv;
        out.insert(out.end(), mean.begin(), mean.end());
      }
    }
  }
  return out;
}

namespace detail {

/// Copies the pixel region covered by one window placement.
inline Block window_region(const GrayImage& img, const PatchConfig& cfg,
                           const Window& w, std::size_t wy, std::size_t wx) {
  const int patch_side = img.width / cfg.grid;
  const std::size_t region_side = static_cast<std::size_t>(patch_side) * w.size;
  Block region(region_side);
  const std::size_t y0 = wy * static_cast<std::size_t>(w.stride) * patch_side;
  const std::size_t x0 = wx * static_cast<std::size_t>(w.stride) * patch_side;
  for (std::size_t y = 0; y < region_side; ++y) {
    for (std::size_t x = 0; x < region_side; ++x) {
      region.at(y, x) = img.at(static_cast<int>(y0 + y), static_cast<int>(x0 + x));
    }
  }
  return region;
}

inline std::vector<double> extract_recalc(const GrayImage& img, const PatchConfig& cfg) {
  std::vector<double> out;
  for (const Window& w : cfg.windows) {
    const std::size_t per_side = window_placements_per_side(cfg.grid, w);
    const int patch_side = img.width / cfg.grid;
    const DctPlan plan(static_cast<std::size_t>(patch_side) * w.size);
    for (std::size_t wy = 0; wy < per_side; ++wy) {
      for (std::size_t wx = 0; wx < per_side; ++wx) {
        const Block region = window_region(img, cfg, w, wy, wx);
        const std::vector<double> row = block_features(
            region, cfg.hog_cell * w.size, cfg.hog_bins, cfg.freq_bands, plan);
        out.insert(out.end(), row.begin(), row.end());
      }
    }
  }
  return out;
}

}  // namespace detail

/// Full task-specific feature vector of one normalized image:
/// partition -> per-patch HOG + LFS -> multi-scale window fusion.
inline std::vector<double> extract(const GrayImage& img, const PatchConfig& cfg) {
  cfg.validate(img.width);
  if (cfg.recalc_windows) return detail::extract_recalc(img, cfg);
  const PatchGrid grid = compute_patch_grid(img, cfg);
  return multiscale(grid, cfg);
}

}  // namespace daf
