#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "daf/error.hpp"
#include "daf/image.hpp"
#include "daf/rng.hpp"

namespace daf {

/// One active degradation: Gaussian blur or a JPEG round trip.
struct PerturbSpec {
  enum class Kind { blur, jpeg };
  Kind kind = Kind::blur;
  double blur_sigma = 1.0;
  int jpeg_quality = 65;

  static PerturbSpec blur(double sigma) {
    PerturbSpec s;
    s.kind = Kind::blur;
    s.blur_sigma = sigma;
    return s;
  }

  static PerturbSpec jpeg(int quality) {
    PerturbSpec s;
    s.kind = Kind::jpeg;
    s.jpeg_quality = quality;
    return s;
  }

  void validate() const {
    if (kind == Kind::blur && !(blur_sigma > 0.0)) {
      throw InvalidSpec("blur sigma must be > 0");
    }
    if (kind == Kind::jpeg && (jpeg_quality < 1 || jpeg_quality > 100)) {
      throw InvalidSpec("jpeg quality must be in [1, 100]");
    }
  }
};

/// Normalized 1-D Gaussian kernel of radius ceil(3 sigma); the 2-D kernel is
/// its outer product, so separable passes match the full convolution.
inline std::vector<double> gaussian_kernel(double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double w = std::exp(-0.5 * (i * i) / (sigma * sigma));
    kernel[i + radius] = w;
    sum += w;
  }
  for (double& w : kernel) w /= sum;
  return kernel;
}

namespace detail {

// Reflect with edge repetition: -1 -> 0, n -> n-1.
inline int reflect_index(int i, int n) {
  while (i < 0 || i >= n) {
    if (i < 0) i = -i - 1;
    if (i >= n) i = 2 * n - 1 - i;
  }
  return i;
}

}  // namespace detail

inline GrayImage gaussian_blur(const GrayImage& img, double sigma) {
  if (!(sigma > 0.0)) throw InvalidSpec("blur sigma must be > 0");
  const std::vector<double> kernel = gaussian_kernel(sigma);
  const int radius = static_cast<int>(kernel.size() / 2);

  GrayImage horizontal(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        acc += kernel[k + radius] * img.at(y, detail::reflect_index(x + k, img.width));
      }
      horizontal.at(y, x) = acc;
    }
  }
  GrayImage out(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        acc += kernel[k + radius] * horizontal.at(detail::reflect_index(y + k, img.height), x);
      }
      out.at(y, x) = std::clamp(acc, 0.0, 1.0);
    }
  }
  return out;
}

/// Applies the requested degradation. Output dimensions match the input;
/// intensities stay in [0, 1]. Both kinds are deterministic; the seed is
/// part of the signature so callers can treat all sample transforms alike.
inline GrayImage perturb(const GrayImage& img, const PerturbSpec& spec,
                         std::uint64_t /*rng_seed*/ = 0) {
  spec.validate();
  if (spec.kind == PerturbSpec::Kind::blur) {
    return gaussian_blur(img, spec.blur_sigma);
  }
  const std::vector<std::uint8_t> encoded = encode_jpeg_gray(img, spec.jpeg_quality);
  GrayImage decoded = decode_jpeg_to_gray(encoded);
  if (decoded.width != img.width || decoded.height != img.height) {
    throw Error("jpeg round trip changed dimensions");
  }
  return decoded;
}

/// Train-time augmentation: each transform fires independently with its
/// probability. Defaults follow the 0.5-probability scheme but the whole
/// stage ships disabled.
struct AugmentSpec {
  bool enabled = false;
  double flip_prob = 0.5;
  double crop_prob = 0.5;
  double noise_prob = 0.5;
  double crop_factor = 0.875;
  double noise_sigma = 0.02;

  void validate() const {
    auto prob_ok = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!prob_ok(flip_prob) || !prob_ok(crop_prob) || !prob_ok(noise_prob)) {
      throw InvalidSpec("augment probabilities must lie in [0, 1]");
    }
    if (!(crop_factor > 0.0 && crop_factor <= 1.0)) {
      throw InvalidSpec("crop factor must lie in (0, 1]");
    }
    if (noise_sigma < 0.0) throw InvalidSpec("noise sigma must be >= 0");
  }
};

inline GrayImage flip_horizontal(const GrayImage& img) {
  GrayImage out(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      out.at(y, x) = img.at(y, img.width - 1 - x);
    }
  }
  return out;
}

inline GrayImage augment(const GrayImage& img, const AugmentSpec& spec,
                         std::uint64_t rng_seed) {
  if (!spec.enabled) return img;
  spec.validate();
  Rng rng(rng_seed);
  GrayImage out = img;

  if (rng.bernoulli(spec.flip_prob)) {
    out = flip_horizontal(out);
  }
  if (rng.bernoulli(spec.crop_prob)) {
    const int size = out.width;
    const int side = std::max(1, static_cast<int>(std::lround(spec.crop_factor * size)));
    const int max_offset = size - side;
    const int ox = max_offset > 0 ? static_cast<int>(rng.below(static_cast<std::uint64_t>(max_offset) + 1)) : 0;
    const int oy = max_offset > 0 ? static_cast<int>(rng.below(static_cast<std::uint64_t>(max_offset) + 1)) : 0;
    GrayImage crop(side, side);
    for (int y = 0; y < side; ++y) {
      for (int x = 0; x < side; ++x) {
        crop.at(y, x) = out.at(oy + y, ox + x);
      }
    }
    out = resize_gray(crop, size);
  }
  if (rng.bernoulli(spec.noise_prob) && spec.noise_sigma > 0.0) {
    for (double& p : out.pixels) {
      p = std::clamp(p + rng.normal(0.0, spec.noise_sigma), 0.0, 1.0);
    }
  }
  for (double& p : out.pixels) p = std::clamp(p, 0.0, 1.0);
  return out;
}

}  // namespace daf
