#pragma once

#include <cmath>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include "daf/error.hpp"
#include "daf/image.hpp"
#include "daf/manifest.hpp"
#include "daf/parallel.hpp"
#include "daf/rng.hpp"

namespace daf {

/// Synthetic desk-scale corpus: "real" images are smooth random
/// low-frequency fields plus sensor-like noise; "fake" images add a
/// low-amplitude high-frequency periodic artifact on top of the same
/// construction. Two artifact variants ("hfA", "hfB" with different period
/// ranges) exercise per-generator reporting. Amplitude 0 produces a null
/// corpus whose classes are identically distributed.
struct FixtureSpec {
  int count = 200;  // total images; half real, half fake
  int size = 256;
  double artifact_amplitude = 0.04;
  double noise_sigma = 0.02;
  int coarse_grid = 8;  // control points per side of the smooth field
  std::uint64_t seed = 0;
  int threads = 0;
};

namespace detail {

inline GrayImage smooth_field(int size, int coarse_grid, double noise_sigma, Rng& rng) {
  const int control = coarse_grid + 1;
  std::vector<double> coarse(static_cast<std::size_t>(control) * control);
  for (double& v : coarse) v = rng.uniform(0.2, 0.8);
  GrayImage img(size, size);
  img.pixels = bilinear_resize(coarse, control, control, size, size);
  for (double& p : img.pixels) {
    p = std::clamp(p + rng.normal(0.0, noise_sigma), 0.0, 1.0);
  }
  return img;
}

inline void add_periodic_artifact(GrayImage& img, double amplitude,
                                  double period_lo, double period_hi, Rng& rng) {
  if (amplitude == 0.0) return;
  const double px = rng.uniform(period_lo, period_hi);
  const double py = rng.uniform(period_lo, period_hi);
  const double phase_x = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double phase_y = rng.uniform(0.0, 2.0 * std::numbers::pi);
  for (int y = 0; y < img.height; ++y) {
    const double sy = std::sin(2.0 * std::numbers::pi * y / py + phase_y);
    for (int x = 0; x < img.width; ++x) {
      const double sx = std::sin(2.0 * std::numbers::pi * x / px + phase_x);
      double& p = img.at(y, x);
      p = std::clamp(p + amplitude * sx * sy, 0.0, 1.0);
    }
  }
}

}  // namespace detail

/// Writes the corpus under out_dir (real/, fake/, manifest.csv) and
/// returns the manifest. Rows interleave real and fake so any prefix stays
/// class balanced.
inline Manifest generate_fixture(const std::string& out_dir, const FixtureSpec& spec) {
  if (spec.count < 2 || spec.count % 2 != 0) {
    throw InvalidSpec("fixture count must be even and >= 2");
  }
  if (spec.size < 8) throw InvalidSpec("fixture size must be >= 8");
  if (spec.artifact_amplitude < 0.0) {
    throw InvalidSpec("artifact amplitude must be >= 0");
  }

  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(fs::path(out_dir) / "real", ec);
  fs::create_directories(fs::path(out_dir) / "fake", ec);
  if (!fs::is_directory(fs::path(out_dir) / "real") ||
      !fs::is_directory(fs::path(out_dir) / "fake")) {
    throw IoError("cannot create fixture directories under " + out_dir);
  }

  const int pairs = spec.count / 2;
  Manifest manifest;
  manifest.base_dir = out_dir;
  manifest.rows.resize(static_cast<std::size_t>(spec.count));

  parallel_for(static_cast<std::size_t>(pairs), spec.threads, [&](std::size_t i) {
    char name[64];

    Rng real_rng(derive_seed(spec.seed, 2 * i));
    const GrayImage real_img =
        detail::smooth_field(spec.size, spec.coarse_grid, spec.noise_sigma, real_rng);
    std::snprintf(name, sizeof(name), "real/r_%05zu.png", i);
    write_png_gray((fs::path(out_dir) / name).string(), real_img);
    manifest.rows[2 * i] = {name, 0, "real"};

    Rng fake_rng(derive_seed(spec.seed, 2 * i + 1));
    GrayImage fake_img =
        detail::smooth_field(spec.size, spec.coarse_grid, spec.noise_sigma, fake_rng);
    const bool variant_a = i % 2 == 0;
    if (variant_a) {
      detail::add_periodic_artifact(fake_img, spec.artifact_amplitude, 2.5, 3.5,
                                    fake_rng);
    } else {
      detail::add_periodic_artifact(fake_img, spec.artifact_amplitude, 2.0, 2.5,
                                    fake_rng);
    }
    std::snprintf(name, sizeof(name), "fake/f_%05zu.png", i);
    write_png_gray((fs::path(out_dir) / name).string(), fake_img);
    manifest.rows[2 * i + 1] = {name, 1, variant_a ? "hfA" : "hfB"};
  });

  save_manifest(manifest, (fs::path(out_dir) / "manifest.csv").string());
  return manifest;
}

}  // namespace daf
