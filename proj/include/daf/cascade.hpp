#pragma once

#include <array>
#include <cstdint>
#include <numeric>
#include <vector>

#include "daf/error.hpp"
#include "daf/matrix.hpp"
#include "daf/parallel.hpp"
#include "daf/rng.hpp"
#include "daf/trees.hpp"

namespace daf {

struct CascadeConfig {
  int n_layers = 3;             // l
  int n_random = 2;             // A
  int n_completely_random = 2;  // B
  int cv_folds = 3;
  bool cross_fit = true;  // k-fold augmentation vectors (off = in-sample)
  ForestParams forest;

  int forests_per_layer() const { return n_random + n_completely_random; }
  std::size_t augment_dim() const {
    return 2 * static_cast<std::size_t>(forests_per_layer());
  }

  void validate() const {
    if (n_layers < 1) throw InvalidSpec("cascade needs at least one layer");
    if (n_random < 0 || n_completely_random < 0 || forests_per_layer() < 1) {
      throw InvalidSpec("cascade needs at least one forest per layer");
    }
    if (cv_folds < 2) throw InvalidSpec("cross-fitting needs >= 2 folds");
    forest.validate();
  }
};

/// One cascade layer: exactly A random forests followed by B completely
/// random forests. The order is a positional contract; forest j always
/// writes augmentation slots [2j, 2j+2).
struct CascadeLayer {
  std::vector<Forest> forests;
};

struct DeepForestModel {
  std::vector<CascadeLayer> layers;
  std::uint64_t base_dim = 0;
  CascadeConfig config;
};

/// Records which fold each training row belonged to and which rows each
/// fold model saw, so tests can audit that no sample received augmentation
/// from a forest trained on itself.
struct CascadeAudit {
  struct LayerAudit {
    std::size_t input_dim = 0;
    std::vector<int> fold_of_row;
    std::vector<std::vector<std::size_t>> fold_training_rows;
  };
  std::vector<LayerAudit> layers;
};

namespace detail {

inline std::vector<int> assign_folds(std::size_t n, int folds, Rng& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const std::size_t j = i + rng.below(n - i);
    std::swap(order[i], order[j]);
  }
  std::vector<int> fold_of_row(n);
  for (std::size_t i = 0; i < n; ++i) {
    fold_of_row[order[i]] = static_cast<int>(i % static_cast<std::size_t>(folds));
  }
  return fold_of_row;
}

}  // namespace detail

/// Trains one deep forest cascade on a batch. Training-time augmentation
/// vectors come from k-fold cross-fitting (a row's vector is produced by a
/// forest that never saw its fold); the persisted forests are refit on the
/// full layer input and serve at inference. Layer k > 1 consumes the base
/// features concatenated with layer k-1 augmentation, in forest order.
inline DeepForestModel fit_cascade(const Matrix& features, const std::vector<int>& labels,
                                   const CascadeConfig& cfg, std::uint64_t seed,
                                   int n_threads = 1, CascadeAudit* audit = nullptr) {
  cfg.validate();
  const std::size_t n = features.rows();
  if (n == 0) throw EmptyData("fit_cascade: no samples");
  if (n != labels.size()) throw LengthMismatch("fit_cascade: |X| != |y|");
  if (cfg.cross_fit && n < static_cast<std::size_t>(cfg.cv_folds)) {
    throw TooFewSamples("fit_cascade: fewer samples than folds");
  }

  DeepForestModel model;
  model.base_dim = features.cols();
  model.config = cfg;
  if (audit) audit->layers.clear();

  Matrix augment;  // previous layer's class vectors, empty before layer 1
  for (int layer_index = 0; layer_index < cfg.n_layers; ++layer_index) {
    const std::uint64_t layer_seed = derive_seed(seed, static_cast<std::uint64_t>(layer_index));
    const Matrix* augment_ptr = augment.empty() ? nullptr : &augment;
    const FeatureView input(features, augment_ptr);

    CascadeAudit::LayerAudit layer_audit;
    layer_audit.input_dim = input.cols();

    std::vector<int> fold_of_row;
    std::vector<std::vector<std::size_t>> fold_rows;  // training rows per fold model
    if (cfg.cross_fit) {
      Rng fold_rng(derive_seed(layer_seed, 0xf01d));
      fold_of_row = detail::assign_folds(n, cfg.cv_folds, fold_rng);
      fold_rows.resize(static_cast<std::size_t>(cfg.cv_folds));
      for (std::size_t r = 0; r < n; ++r) {
        for (int f = 0; f < cfg.cv_folds; ++f) {
          if (fold_of_row[r] != f) fold_rows[static_cast<std::size_t>(f)].push_back(r);
        }
      }
      layer_audit.fold_of_row = fold_of_row;
      layer_audit.fold_training_rows = fold_rows;
    }

    Matrix next_augment(n, cfg.augment_dim());
    CascadeLayer layer;
    for (int j = 0; j < cfg.forests_per_layer(); ++j) {
      const ForestKind kind =
          j < cfg.n_random ? ForestKind::random : ForestKind::completely_random;
      const std::uint64_t position_seed =
          derive_seed(layer_seed, static_cast<std::uint64_t>(j) + 1);

      if (cfg.cross_fit) {
        for (int f = 0; f < cfg.cv_folds; ++f) {
          const std::vector<std::size_t>& train_rows = fold_rows[static_cast<std::size_t>(f)];
          if (train_rows.empty()) {
            throw TooFewSamples("fit_cascade: empty cross-fit fold");
          }
          std::vector<int> train_labels(train_rows.size());
          for (std::size_t i = 0; i < train_rows.size(); ++i) {
            train_labels[i] = labels[train_rows[i]];
          }
          const FeatureView train_view(features, augment_ptr, &train_rows);
          const Forest fold_forest =
              fit_forest(train_view, train_labels, kind, cfg.forest,
                         derive_seed(position_seed, static_cast<std::uint64_t>(f) + 1),
                         n_threads);
          for (std::size_t r = 0; r < n; ++r) {
            if (fold_of_row[r] != f) continue;
            const auto p = predict_proba_row(fold_forest, input, r);
            next_augment.at(r, 2 * static_cast<std::size_t>(j)) = p[0];
            next_augment.at(r, 2 * static_cast<std::size_t>(j) + 1) = p[1];
          }
        }
      }

      Forest persisted = fit_forest(input, labels, kind, cfg.forest,
                                    derive_seed(position_seed, 0), n_threads);
      if (!cfg.cross_fit) {
        for (std::size_t r = 0; r < n; ++r) {
          const auto p = predict_proba_row(persisted, input, r);
          next_augment.at(r, 2 * static_cast<std::size_t>(j)) = p[0];
          next_augment.at(r, 2 * static_cast<std::size_t>(j) + 1) = p[1];
        }
      }
      layer.forests.push_back(std::move(persisted));
    }

    model.layers.push_back(std::move(layer));
    if (audit) audit->layers.push_back(std::move(layer_audit));
    augment = std::move(next_augment);
  }
  return model;
}

namespace detail {

/// Class vectors of every forest in one layer for a single sample whose
/// base features live behind `base_at` and whose previous augmentation is
/// `prev` (empty for layer 1).
template <typename BaseAt>
std::vector<double> layer_class_vectors(const CascadeLayer& layer, BaseAt&& base_at,
                                        std::size_t base_dim,
                                        const std::vector<double>& prev) {
  std::vector<double> out;
  out.reserve(2 * layer.forests.size());
  for (const Forest& forest : layer.forests) {
    const auto p = forest_proba(forest, [&](std::size_t f) {
      return f < base_dim ? base_at(f) : prev[f - base_dim];
    });
    out.push_back(p[0]);
    out.push_back(p[1]);
  }
  return out;
}

template <typename BaseAt>
std::vector<double> propagate(const DeepForestModel& model, BaseAt&& base_at) {
  std::vector<double> augment;
  for (const CascadeLayer& layer : model.layers) {
    augment = layer_class_vectors(layer, base_at, model.base_dim, augment);
  }
  return augment;  // last layer's concatenated class vectors
}

}  // namespace detail

/// Concatenated class vectors of the last layer, length (A+B)*2. This is
/// the payload used for feature-distribution dumps and visualization.
inline std::vector<double> last_layer_features(const DeepForestModel& model,
                                               const double* x, std::size_t dim) {
  if (model.layers.empty()) throw EmptyData("model has no layers");
  if (dim != model.base_dim) {
    throw DimensionMismatch("last_layer_features: feature dim mismatch");
  }
  return detail::propagate(model, [x](std::size_t f) { return x[f]; });
}

inline std::vector<double> last_layer_features(const DeepForestModel& model,
                                               const std::vector<double>& x) {
  return last_layer_features(model, x.data(), x.size());
}

/// Fake-class score in [0, 1]: mean fake probability over the last layer's
/// forests after propagating through the cascade.
inline double predict_score(const DeepForestModel& model, const double* x,
                            std::size_t dim) {
  const std::vector<double> last = last_layer_features(model, x, dim);
  double score = 0.0;
  for (std::size_t i = 1; i < last.size(); i += 2) score += last[i];
  return score / (static_cast<double>(last.size()) / 2.0);
}

inline double predict_score(const DeepForestModel& model, const std::vector<double>& x) {
  return predict_score(model, x.data(), x.size());
}

/// Scores a batch of rows; rows are independent, so this parallelizes
/// without affecting results.
inline std::vector<double> predict_scores(const DeepForestModel& model,
                                          const FeatureView& rows, int n_threads = 1) {
  if (rows.cols() != model.base_dim) {
    throw DimensionMismatch("predict_scores: feature dim mismatch");
  }
  std::vector<double> scores(rows.rows());
  parallel_for(rows.rows(), n_threads, [&](std::size_t r) {
    const std::vector<double> last = detail::propagate(
        model, [&rows, r](std::size_t f) { return rows.at(r, f); });
    double score = 0.0;
    for (std::size_t i = 1; i < last.size(); i += 2) score += last[i];
    scores[r] = score / (static_cast<double>(last.size()) / 2.0);
  });
  return scores;
}

}  // namespace daf
