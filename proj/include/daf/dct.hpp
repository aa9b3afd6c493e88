#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "daf/error.hpp"

namespace daf {

/// Square coefficient/pixel block used by the frequency features.
struct Block {
  std::size_t side = 0;
  std::vector<double> data;  // row-major, side*side

  Block() = default;
  explicit Block(std::size_t s) : side(s), data(s * s, 0.0) {}

  double& at(std::size_t r, std::size_t c) { return data[r * side + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * side + c]; }
};

/// Orthonormal type-II DCT basis for one block size. Row u of the basis is
/// a(u) * cos(pi * (2x + 1) * u / (2N)) with a(0) = sqrt(1/N) and
/// a(u>0) = sqrt(2/N), so the transform matrix is orthogonal and the
/// inverse is its transpose.
class DctPlan {
 public:
  explicit DctPlan(std::size_t side) : side_(side), basis_(side * side) {
    const double n = static_cast<double>(side);
    for (std::size_t u = 0; u < side; ++u) {
      const double scale = u == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
      for (std::size_t x = 0; x < side; ++x) {
        basis_[u * side + x] =
            scale * std::cos(std::numbers::pi * (2.0 * x + 1.0) * u / (2.0 * n));
      }
    }
  }

  std::size_t side() const { return side_; }

  /// C = M * P * M^T (separable: rows first, then columns).
  Block forward(const Block& pixels) const {
    check(pixels);
    Block tmp(side_);  // rows transformed: tmp[x][v]
    for (std::size_t x = 0; x < side_; ++x) {
      for (std::size_t v = 0; v < side_; ++v) {
        double acc = 0.0;
        for (std::size_t y = 0; y < side_; ++y) {
          acc += basis_[v * side_ + y] * pixels.at(x, y);
        }
        tmp.at(x, v) = acc;
      }
    }
    Block coeffs(side_);
    for (std::size_t u = 0; u < side_; ++u) {
      for (std::size_t v = 0; v < side_; ++v) {
        double acc = 0.0;
        for (std::size_t x = 0; x < side_; ++x) {
          acc += basis_[u * side_ + x] * tmp.at(x, v);
        }
        coeffs.at(u, v) = acc;
      }
    }
    return coeffs;
  }

  /// P = M^T * C * M; exact reconstruction up to rounding.
  Block inverse(const Block& coeffs) const {
    check(coeffs);
    Block tmp(side_);  // tmp[u][y]
    for (std::size_t u = 0; u < side_; ++u) {
      for (std::size_t y = 0; y < side_; ++y) {
        double acc = 0.0;
        for (std::size_t v = 0; v < side_; ++v) {
          acc += basis_[v * side_ + y] * coeffs.at(u, v);
        }
        tmp.at(u, y) = acc;
      }
    }
    Block pixels(side_);
    for (std::size_t x = 0; x < side_; ++x) {
      for (std::size_t y = 0; y < side_; ++y) {
        double acc = 0.0;
        for (std::size_t u = 0; u < side_; ++u) {
          acc += basis_[u * side_ + x] * tmp.at(u, y);
        }
        pixels.at(x, y) = acc;
      }
    }
    return pixels;
  }

 private:
  void check(const Block& b) const {
    if (b.side != side_) throw DimensionMismatch("dct: block side mismatch");
  }

  std::size_t side_;
  std::vector<double> basis_;  // basis_[u * side + x]
};

/// One-shot orthonormal 2-D DCT of a square block.
inline Block dct2(const Block& pixels) {
  return DctPlan(pixels.side).forward(pixels);
}

inline Block idct2(const Block& coeffs) {
  return DctPlan(coeffs.side).inverse(coeffs);
}

}  // namespace daf
