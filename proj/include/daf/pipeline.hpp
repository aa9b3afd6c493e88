#pragma once

#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "daf/config.hpp"
#include "daf/features.hpp"
#include "daf/image.hpp"
#include "daf/manifest.hpp"
#include "daf/metrics.hpp"
#include "daf/parallel.hpp"
#include "daf/perturb.hpp"
#include "daf/store.hpp"

namespace daf {

/// Decode -> normalize -> (optional perturb) -> feature vector.
inline std::vector<double> extract_from_file(const std::string& path,
                                             const RunConfig& cfg,
                                             const std::optional<PerturbSpec>& perturbation) {
  GrayImage img = load_image(path, cfg.input_size);
  if (perturbation) img = perturb(img, *perturbation);
  return extract(img, cfg.patch);
}

struct ExtractionFailure {
  std::size_t row = 0;
  std::string path;
  std::string message;
};

struct ExtractionResult {
  std::size_t attempted = 0;
  std::size_t succeeded = 0;
  std::vector<ExtractionFailure> failures;
};

/// Extracts every manifest row into a feature cache, block-parallel with
/// rows written in manifest order. Failed rows are skipped and reported.
inline ExtractionResult extract_manifest_to_cache(
    const Manifest& manifest, const RunConfig& cfg, const std::string& out_path,
    const std::optional<PerturbSpec>& perturbation = std::nullopt, int threads = 0,
    std::size_t block_rows = 64) {
  const std::size_t dim = cfg.feature_dim();
  std::string manifest_blob;
  for (const ManifestRow& row : manifest.rows) {
    manifest_blob += row.path;
    manifest_blob += '\n';
  }
  CacheWriter writer(out_path, dim,
                     fnv1a64(manifest_blob.data(), manifest_blob.size()));
  writer.open(manifest.rows.size());

  ExtractionResult result;
  result.attempted = manifest.rows.size();

  std::vector<std::vector<double>> block(block_rows);
  std::vector<std::string> errors(block_rows);
  for (std::size_t begin = 0; begin < manifest.rows.size(); begin += block_rows) {
    const std::size_t end = std::min(begin + block_rows, manifest.rows.size());
    const std::size_t count = end - begin;
    parallel_for(count, threads, [&](std::size_t i) {
      errors[i].clear();
      block[i].clear();
      const ManifestRow& row = manifest.rows[begin + i];
      try {
        block[i] = extract_from_file(manifest.resolve(row), cfg, perturbation);
      } catch (const Error& e) {
        errors[i] = e.what();
      }
    });
    for (std::size_t i = 0; i < count; ++i) {
      if (!errors[i].empty()) {
        result.failures.push_back(
            {begin + i, manifest.rows[begin + i].path, errors[i]});
        continue;
      }
      writer.append_row(manifest.rows[begin + i].label, block[i]);
      ++result.succeeded;
    }
  }
  writer.close();
  return result;
}

/// Data source that extracts features from images on demand, so training
/// never holds more than the requested rows. Batch loads (for_training)
/// apply the augmentation policy under the current load nonce.
class ManifestSource : public DataSource {
 public:
  ManifestSource(Manifest manifest, RunConfig config)
      : manifest_(std::move(manifest)), config_(std::move(config)) {
    labels_.reserve(manifest_.rows.size());
    for (const ManifestRow& row : manifest_.rows) labels_.push_back(row.label);
    dim_ = config_.feature_dim();
  }

  std::size_t size() const override { return manifest_.rows.size(); }
  std::size_t dim() const override { return dim_; }
  const std::vector<int>& labels() const override { return labels_; }

  void set_load_nonce(std::uint64_t nonce) override { nonce_ = nonce; }

  Matrix load_rows(std::span<const std::size_t> indices, ResidencyAccounting* acct,
                   bool for_training) override {
    Matrix out(indices.size(), dim_, acct);
    const bool augmenting = for_training && config_.augment.enabled;
    parallel_for(indices.size(), config_.train.threads, [&](std::size_t i) {
      const std::size_t row_index = indices[i];
      if (row_index >= manifest_.rows.size()) {
        throw IndexOutOfRange("ManifestSource: row index out of range");
      }
      const ManifestRow& row = manifest_.rows[row_index];
      GrayImage img = load_image(manifest_.resolve(row), config_.input_size);
      if (augmenting) {
        img = augment(img, config_.augment, derive_seed(nonce_, row_index));
      }
      const std::vector<double> features = extract(img, config_.patch);
      std::copy(features.begin(), features.end(), out.row(i));
    });
    return out;
  }

 private:
  Manifest manifest_;
  RunConfig config_;
  std::vector<int> labels_;
  std::size_t dim_ = 0;
  std::uint64_t nonce_ = 0;
};

struct ScoredManifest {
  std::vector<double> scores;
  std::vector<int> labels;
  std::vector<std::string> tags;
  std::vector<ExtractionFailure> failures;
};

/// Scores every manifest row with a trained model (extraction and optional
/// perturbation happen here); failed rows are reported, not scored.
inline ScoredManifest score_manifest(const DeepForestModel& model,
                                     const RunConfig& cfg, const Manifest& manifest,
                                     const std::optional<PerturbSpec>& perturbation,
                                     int threads = 0) {
  if (cfg.feature_dim() != model.base_dim) {
    throw DimensionMismatch("config feature dimension " +
                            std::to_string(cfg.feature_dim()) +
                            " != model base dimension " +
                            std::to_string(model.base_dim));
  }
  const std::size_t n = manifest.rows.size();
  std::vector<double> scores(n, 0.0);
  std::vector<std::uint8_t> ok(n, 0);
  std::vector<std::string> errors(n);
  parallel_for(n, threads, [&](std::size_t i) {
    const ManifestRow& row = manifest.rows[i];
    try {
      const std::vector<double> features =
          extract_from_file(manifest.resolve(row), cfg, perturbation);
      scores[i] = predict_score(model, features);
      ok[i] = 1;
    } catch (const Error& e) {
      errors[i] = e.what();
    }
  });

  ScoredManifest result;
  for (std::size_t i = 0; i < n; ++i) {
    if (ok[i]) {
      result.scores.push_back(scores[i]);
      result.labels.push_back(manifest.rows[i].label);
      result.tags.push_back(manifest.rows[i].tag);
    } else {
      result.failures.push_back({i, manifest.rows[i].path, errors[i]});
    }
  }
  return result;
}

}  // namespace daf
