#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "daf/cascade.hpp"
#include "daf/rng.hpp"

namespace {

struct Dataset {
  daf::Matrix x;
  std::vector<int> y;
};

Dataset ring_data(std::size_t n, std::uint64_t seed) {
  daf::Rng rng(seed);
  Dataset out;
  out.x = daf::Matrix(n, 6);
  out.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(rng.below(2));
    const double shift = label == 1 ? 1.0 : -1.0;
    for (std::size_t c = 0; c < 6; ++c) {
      out.x.at(i, c) = rng.normal(c < 3 ? shift : 0.0, 1.0);
    }
    out.y[i] = label;
  }
  return out;
}

daf::CascadeConfig small_config() {
  daf::CascadeConfig cfg;
  cfg.n_layers = 2;
  cfg.n_random = 1;
  cfg.n_completely_random = 1;
  cfg.cv_folds = 3;
  cfg.forest.n_trees = 8;
  return cfg;
}

bool forests_equal(const daf::Forest& a, const daf::Forest& b) {
  if (a.kind != b.kind || a.trees.size() != b.trees.size()) return false;
  for (std::size_t t = 0; t < a.trees.size(); ++t) {
    if (a.trees[t].size() != b.trees[t].size()) return false;
    for (std::size_t n = 0; n < a.trees[t].size(); ++n) {
      const auto& na = a.trees[t][n];
      const auto& nb = b.trees[t][n];
      if (na.feature != nb.feature || na.threshold != nb.threshold ||
          na.left != nb.left || na.right != nb.right ||
          na.counts[0] != nb.counts[0] || na.counts[1] != nb.counts[1]) {
        return false;
      }
    }
  }
  return true;
}

}  // namespace

TEST_CASE("cascade structure: l layers of A random then B completely random") {
  const Dataset data = ring_data(90, 3);
  daf::CascadeConfig cfg;
  cfg.n_layers = 3;
  cfg.n_random = 2;
  cfg.n_completely_random = 2;
  cfg.forest.n_trees = 4;
  daf::CascadeAudit audit;
  const auto model = daf::fit_cascade(data.x, data.y, cfg, 7, 1, &audit);

  REQUIRE(model.layers.size() == 3);
  REQUIRE(model.base_dim == 6);
  for (const auto& layer : model.layers) {
    REQUIRE(layer.forests.size() == 4);
    REQUIRE(layer.forests[0].kind == daf::ForestKind::random);
    REQUIRE(layer.forests[1].kind == daf::ForestKind::random);
    REQUIRE(layer.forests[2].kind == daf::ForestKind::completely_random);
    REQUIRE(layer.forests[3].kind == daf::ForestKind::completely_random);
  }

  // Layer dimensionality contract: d, then d + (A+B)*2.
  REQUIRE(audit.layers.size() == 3);
  REQUIRE(audit.layers[0].input_dim == 6);
  REQUIRE(audit.layers[1].input_dim == 6 + 8);
  REQUIRE(audit.layers[2].input_dim == 6 + 8);
  for (const auto& layer : model.layers) {
    for (std::size_t j = 0; j < layer.forests.size(); ++j) {
      REQUIRE(layer.forests[j].feature_dim ==
              (&layer == &model.layers.front() ? 6u : 14u));
    }
  }
}

TEST_CASE("single layer single forest cascade equals the forest prediction") {
  const Dataset data = ring_data(60, 5);
  daf::CascadeConfig cfg;
  cfg.n_layers = 1;
  cfg.n_random = 1;
  cfg.n_completely_random = 0;
  cfg.forest.n_trees = 9;
  const auto model = daf::fit_cascade(data.x, data.y, cfg, 11);

  daf::Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x(6);
    for (double& v : x) v = rng.uniform(-2.0, 2.0);
    const auto p = daf::predict_proba(model.layers[0].forests[0], x);
    REQUIRE(daf::predict_score(model, x) == p[1]);
  }
}

TEST_CASE("single-layer multi-forest score is the forest mean") {
  const Dataset data = ring_data(60, 17);
  daf::CascadeConfig cfg;
  cfg.n_layers = 1;
  cfg.n_random = 1;
  cfg.n_completely_random = 1;
  cfg.forest.n_trees = 5;
  const auto model = daf::fit_cascade(data.x, data.y, cfg, 19);
  daf::Rng rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x(6);
    for (double& v : x) v = rng.uniform(-2.0, 2.0);
    const double mean = 0.5 * (daf::predict_proba(model.layers[0].forests[0], x)[1] +
                               daf::predict_proba(model.layers[0].forests[1], x)[1]);
    REQUIRE(std::abs(daf::predict_score(model, x) - mean) < 1e-15);
  }
}

TEST_CASE("cross-fit audit: no row is augmented by a forest trained on it") {
  Dataset data = ring_data(45, 29);
  // Adversarial duplicate with flipped label; memorization would hand it a
  // perfectly confident augmentation vector.
  for (std::size_t c = 0; c < 6; ++c) data.x.at(1, c) = data.x.at(0, c);
  data.y[1] = 1 - data.y[0];

  daf::CascadeAudit audit;
  const auto model = daf::fit_cascade(data.x, data.y, small_config(), 31, 1, &audit);
  REQUIRE(model.layers.size() == 2);

  for (const auto& layer : audit.layers) {
    REQUIRE(layer.fold_of_row.size() == 45);
    REQUIRE(layer.fold_training_rows.size() == 3);
    for (std::size_t r = 0; r < layer.fold_of_row.size(); ++r) {
      const auto fold = static_cast<std::size_t>(layer.fold_of_row[r]);
      const auto& trained_on = layer.fold_training_rows[fold];
      REQUIRE(std::find(trained_on.begin(), trained_on.end(), r) == trained_on.end());
    }
    // Every fold model trains on the complement of its fold.
    for (std::size_t f = 0; f < 3; ++f) {
      std::set<std::size_t> trained(layer.fold_training_rows[f].begin(),
                                    layer.fold_training_rows[f].end());
      std::size_t in_fold = 0;
      for (std::size_t r = 0; r < 45; ++r) {
        if (static_cast<std::size_t>(layer.fold_of_row[r]) == f) {
          ++in_fold;
        } else {
          REQUIRE(trained.count(r) == 1);
        }
      }
      REQUIRE(trained.size() + in_fold == 45);
    }
  }
}

TEST_CASE("scores stay in [0,1] and the model is usable after fit") {
  const Dataset data = ring_data(75, 37);
  const auto model = daf::fit_cascade(data.x, data.y, small_config(), 41);
  daf::Rng rng(43);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> x(6);
    for (double& v : x) v = rng.uniform(-4.0, 4.0);
    const double score = daf::predict_score(model, x);
    REQUIRE(score >= 0.0);
    REQUIRE(score <= 1.0);
  }
  REQUIRE_THROWS_AS(daf::predict_score(model, {1.0, 2.0}), daf::DimensionMismatch);
}

TEST_CASE("last layer features: length, pairing, and consistency with score") {
  const Dataset data = ring_data(80, 47);
  daf::CascadeConfig cfg;
  cfg.n_layers = 2;
  cfg.n_random = 2;
  cfg.n_completely_random = 2;
  cfg.forest.n_trees = 4;
  const auto model = daf::fit_cascade(data.x, data.y, cfg, 53);

  daf::Rng rng(59);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> x(6);
    for (double& v : x) v = rng.uniform(-2.0, 2.0);
    const auto last = daf::last_layer_features(model, x);
    REQUIRE(last.size() == 8);
    double fake_mean = 0.0;
    for (std::size_t j = 0; j < 4; ++j) {
      REQUIRE(std::abs(last[2 * j] + last[2 * j + 1] - 1.0) < 1e-9);
      fake_mean += last[2 * j + 1];
    }
    REQUIRE(std::abs(daf::predict_score(model, x) - fake_mean / 4.0) < 1e-15);
  }
}

TEST_CASE("cascade training separates the ring data") {
  const Dataset train = ring_data(150, 61);
  const Dataset test = ring_data(100, 67);
  daf::CascadeConfig cfg = small_config();
  cfg.forest.n_trees = 20;
  const auto model = daf::fit_cascade(train.x, train.y, cfg, 71);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < test.y.size(); ++i) {
    const double score = daf::predict_score(model, test.x.row(i), 6);
    if ((score >= 0.5 ? 1 : 0) == test.y[i]) ++correct;
  }
  REQUIRE(static_cast<double>(correct) / 100.0 >= 0.85);
}

TEST_CASE("fit is deterministic and thread-count independent") {
  const Dataset data = ring_data(66, 73);
  const auto a = daf::fit_cascade(data.x, data.y, small_config(), 79, 1);
  const auto b = daf::fit_cascade(data.x, data.y, small_config(), 79, 3);
  REQUIRE(a.layers.size() == b.layers.size());
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    REQUIRE(a.layers[l].forests.size() == b.layers[l].forests.size());
    for (std::size_t f = 0; f < a.layers[l].forests.size(); ++f) {
      REQUIRE(forests_equal(a.layers[l].forests[f], b.layers[l].forests[f]));
    }
  }
}

TEST_CASE("in-sample augmentation switch still trains") {
  const Dataset data = ring_data(40, 83);
  daf::CascadeConfig cfg = small_config();
  cfg.cross_fit = false;
  const auto model = daf::fit_cascade(data.x, data.y, cfg, 89);
  REQUIRE(model.layers.size() == 2);
}

TEST_CASE("error paths") {
  daf::Matrix empty(0, 4);
  REQUIRE_THROWS_AS(daf::fit_cascade(empty, {}, small_config(), 0), daf::EmptyData);

  const Dataset tiny = ring_data(2, 97);
  REQUIRE_THROWS_AS(daf::fit_cascade(tiny.x, tiny.y, small_config(), 0),
                    daf::TooFewSamples);

  daf::CascadeConfig bad = small_config();
  bad.n_layers = 0;
  const Dataset data = ring_data(30, 101);
  REQUIRE_THROWS_AS(daf::fit_cascade(data.x, data.y, bad, 0), daf::InvalidSpec);
}
