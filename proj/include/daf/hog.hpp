#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "daf/dct.hpp"
#include "daf/error.hpp"

namespace daf {

/// Histogram of oriented gradients over one square patch.
///
/// Central-difference gradients (edge pixels clamp their neighbor index),
/// unsigned orientation in [0, 180) binned with linear interpolation
/// between the two nearest bin centers (centers at i * 180/bins, so a pure
/// horizontal gradient lands entirely in bin 0), magnitude-weighted
/// per-cell histograms, and a single L2 normalization across all cells.
inline std::vector<double> hog(const Block& patch, int cell_size, int n_bins,
                               double epsilon = 1e-6) {
  const std::size_t side = patch.side;
  if (cell_size <= 0 || n_bins <= 0) {
    throw InvalidSpec("hog: cell size and bin count must be positive");
  }
  if (side % static_cast<std::size_t>(cell_size) != 0) {
    throw GeometryError("hog: patch side not divisible by cell size");
  }
  const std::size_t cells = side / static_cast<std::size_t>(cell_size);
  std::vector<double> histogram(cells * cells * static_cast<std::size_t>(n_bins),
                                0.0);

  const double bin_width = 180.0 / n_bins;
  auto clamp = [side](std::ptrdiff_t i) {
    if (i < 0) return std::size_t{0};
    if (i >= static_cast<std::ptrdiff_t>(side)) return side - 1;
    return static_cast<std::size_t>(i);
  };

  for (std::size_t y = 0; y < side; ++y) {
    for (std::size_t x = 0; x < side; ++x) {
      const double gx = 0.5 * (patch.at(y, clamp(static_cast<std::ptrdiff_t>(x) + 1)) -
                               patch.at(y, clamp(static_cast<std::ptrdiff_t>(x) - 1)));
      const double gy = 0.5 * (patch.at(clamp(static_cast<std::ptrdiff_t>(y) + 1), x) -
                               patch.at(clamp(static_cast<std::ptrdiff_t>(y) - 1), x));
      const double magnitude = std::sqrt(gx * gx + gy * gy);
      if (magnitude == 0.0) continue;

      double angle = std::atan2(gy, gx) * 180.0 / std::numbers::pi;
      if (angle < 0.0) angle += 180.0;  // unsigned orientation
      if (angle >= 180.0) angle -= 180.0;

      const double t = angle / bin_width;
      const int lower = static_cast<int>(std::floor(t));
      const double frac = t - lower;
      const int bin_lo = lower % n_bins;
      const int bin_hi = (lower + 1) % n_bins;

      const std::size_t cell =
          (y / static_cast<std::size_t>(cell_size)) * cells +
          x / static_cast<std::size_t>(cell_size);
      double* h = histogram.data() + cell * static_cast<std::size_t>(n_bins);
      h[bin_lo] += magnitude * (1.0 - frac);
      h[bin_hi] += magnitude * frac;
    }
  }

  // Single-block L2 normalization; an all-zero histogram stays zero.
  double sum_sq = 0.0;
  for (double v : histogram) sum_sq += v * v;
  const double norm = std::sqrt(sum_sq + epsilon * epsilon);
  for (double& v : histogram) v /= norm;
  return histogram;
}

inline std::size_t hog_dimension(std::size_t patch_side, int cell_size,
                                 int n_bins) {
  const std::size_t cells = patch_side / static_cast<std::size_t>(cell_size);
  return cells * cells * static_cast<std::size_t>(n_bins);
}

}  // namespace daf
