#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "daf/dct.hpp"
#include "daf/error.hpp"

namespace daf {

/// Band index of DCT coefficient (u, v) under q contiguous bands of the
/// Manhattan radius u + v in [0, 2N-2]. Bands are as equal-width as the
/// integer range allows and partition the plane exactly.
inline int lfs_band(std::size_t u, std::size_t v, std::size_t side, int q) {
  const std::size_t radius = u + v;
  const std::size_t range = 2 * side - 1;  // radii 0 .. 2N-2
  const auto band = static_cast<int>(radius * static_cast<std::size_t>(q) / range);
  return band >= q ? q - 1 : band;
}

/// Local frequency statistics of one DCT coefficient map: coefficients pass
/// through log(1 + |c|), then each band contributes one value per column,
/// the mean over that column's in-band entries (0 when the band does not
/// reach the column). Bands are concatenated low to high: q * side values.
inline std::vector<double> lfs(const Block& coeffs, int q) {
  if (q < 1) throw InvalidSpec("lfs: need at least one frequency band");
  const std::size_t side = coeffs.side;
  std::vector<double> out(static_cast<std::size_t>(q) * side, 0.0);
  std::vector<std::size_t> tallies(static_cast<std::size_t>(q) * side, 0);

  for (std::size_t u = 0; u < side; ++u) {
    for (std::size_t v = 0; v < side; ++v) {
      const int band = lfs_band(u, v, side, q);
      const std::size_t slot = static_cast<std::size_t>(band) * side + v;
      out[slot] += std::log1p(std::fabs(coeffs.at(u, v)));
      ++tallies[slot];
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (tallies[i] > 0) out[i] /= static_cast<double>(tallies[i]);
  }
  return out;
}

inline std::size_t lfs_dimension(std::size_t patch_side, int q) {
  return static_cast<std::size_t>(q) * patch_side;
}

}  // namespace daf
