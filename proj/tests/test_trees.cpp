#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <set>
#include <vector>

#include "daf/matrix.hpp"
#include "daf/rng.hpp"
#include "daf/trees.hpp"

namespace {

daf::Matrix matrix_from(const std::vector<std::vector<double>>& rows) {
  daf::Matrix m(rows.size(), rows[0].size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) m.at(r, c) = rows[r][c];
  }
  return m;
}

struct Blobs {
  daf::Matrix x;
  std::vector<int> y;
};

// Two Gaussian blobs in 4-D, centers at +/- 1.5 on every axis.
Blobs two_blobs(std::size_t n, std::uint64_t seed) {
  daf::Rng rng(seed);
  Blobs out;
  out.x = daf::Matrix(n, 4);
  out.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(rng.below(2));
    const double center = label == 1 ? 1.5 : -1.5;
    for (std::size_t c = 0; c < 4; ++c) {
      out.x.at(i, c) = rng.normal(center, 1.0);
    }
    out.y[i] = label;
  }
  return out;
}

// Independent oracle for the blob data: classify by nearest class centroid.
double nearest_centroid_accuracy(const Blobs& data) {
  std::array<std::vector<double>, 2> centroid{std::vector<double>(4, 0.0),
                                              std::vector<double>(4, 0.0)};
  std::array<std::size_t, 2> counts{0, 0};
  for (std::size_t i = 0; i < data.y.size(); ++i) {
    const auto label = static_cast<std::size_t>(data.y[i]);
    ++counts[label];
    for (std::size_t c = 0; c < 4; ++c) centroid[label][c] += data.x.at(i, c);
  }
  for (int label = 0; label < 2; ++label) {
    for (double& v : centroid[static_cast<std::size_t>(label)]) {
      v /= static_cast<double>(counts[static_cast<std::size_t>(label)]);
    }
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.y.size(); ++i) {
    double d0 = 0.0;
    double d1 = 0.0;
    for (std::size_t c = 0; c < 4; ++c) {
      d0 += std::pow(data.x.at(i, c) - centroid[0][c], 2);
      d1 += std::pow(data.x.at(i, c) - centroid[1][c], 2);
    }
    if ((d1 < d0 ? 1 : 0) == data.y[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.y.size());
}

int tree_depth(const daf::Tree& tree, std::int32_t node = 0) {
  if (tree[static_cast<std::size_t>(node)].is_leaf()) return 0;
  return 1 + std::max(tree_depth(tree, tree[static_cast<std::size_t>(node)].left),
                      tree_depth(tree, tree[static_cast<std::size_t>(node)].right));
}

}  // namespace

TEST_CASE("single-class data yields a single pure leaf") {
  const daf::Matrix x = matrix_from({{0.1, 1.0}, {0.4, 2.0}, {0.9, 3.0}});
  const std::vector<int> y{1, 1, 1};
  const daf::Tree tree = daf::fit_tree(daf::FeatureView(x), y,
                                       daf::ForestKind::random, {}, 0);
  REQUIRE(tree.size() == 1);
  REQUIRE(tree[0].is_leaf());
  REQUIRE(tree[0].counts[0] == 0);
  REQUIRE(tree[0].counts[1] == 3);
}

TEST_CASE("perfect split on (5,5) parent has gain 0.5 and is chosen") {
  // Feature 0 separates classes exactly; feature 1 is noise.
  std::vector<std::vector<double>> rows;
  std::vector<int> y;
  daf::Rng rng(3);
  for (int i = 0; i < 5; ++i) {
    rows.push_back({0.0 + 0.01 * i, rng.uniform01()});
    y.push_back(0);
    rows.push_back({1.0 + 0.01 * i, rng.uniform01()});
    y.push_back(1);
  }
  const daf::Matrix x = matrix_from(rows);
  daf::ForestParams params;
  params.candidate_features = 2;  // evaluate both features at the root
  daf::TreeFitAudit audit;
  const daf::Tree tree = daf::fit_tree(daf::FeatureView(x), y,
                                       daf::ForestKind::random, params, 0, &audit);

  REQUIRE(!tree[0].is_leaf());
  REQUIRE(tree[0].feature == 0);

  REQUIRE(!audit.nodes.empty());
  const auto& root = audit.nodes.front();
  const auto& chosen = root.candidates[static_cast<std::size_t>(root.chosen)];
  REQUIRE(chosen.feature == 0);
  REQUIRE(std::abs(chosen.gain - 0.5) < 1e-12);
  for (const auto& candidate : root.candidates) {
    REQUIRE(chosen.gain >= candidate.gain);
  }
}

TEST_CASE("chosen split dominates every evaluated candidate at every node") {
  daf::Rng rng(5);
  daf::Matrix x(80, 6);
  std::vector<int> y(80);
  for (std::size_t i = 0; i < 80; ++i) {
    for (std::size_t c = 0; c < 6; ++c) x.at(i, c) = rng.uniform01();
    y[i] = static_cast<int>(rng.below(2));
  }
  daf::TreeFitAudit audit;
  daf::fit_tree(daf::FeatureView(x), y, daf::ForestKind::random, {}, 17, &audit);
  REQUIRE(!audit.nodes.empty());
  for (const auto& node : audit.nodes) {
    REQUIRE(node.chosen >= 0);
    const double chosen_gain = node.candidates[static_cast<std::size_t>(node.chosen)].gain;
    for (const auto& candidate : node.candidates) {
      REQUIRE(chosen_gain >= candidate.gain);
    }
  }
}

TEST_CASE("xor corners solve at depth 2 with full accuracy") {
  std::vector<std::vector<double>> rows;
  std::vector<int> y;
  const double corners[4][3] = {{0, 0, 0}, {0, 1, 1}, {1, 0, 1}, {1, 1, 0}};
  for (const auto& corner : corners) {
    for (int dup = 0; dup < 4; ++dup) {
      rows.push_back({corner[0], corner[1]});
      y.push_back(static_cast<int>(corner[2]));
    }
  }
  const daf::Matrix x = matrix_from(rows);
  daf::ForestParams params;
  params.candidate_features = 2;
  const daf::Tree tree = daf::fit_tree(daf::FeatureView(x), y,
                                       daf::ForestKind::random, params, 0);
  REQUIRE(tree_depth(tree) == 2);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& leaf = daf::route_to_leaf(tree, [&](std::size_t f) { return x.at(i, f); });
    const int predicted = leaf.counts[1] > leaf.counts[0] ? 1 : 0;
    REQUIRE(predicted == y[i]);
  }
}

TEST_CASE("empty data is rejected") {
  daf::Matrix x(0, 3);
  REQUIRE_THROWS_AS(
      daf::fit_tree(daf::FeatureView(x), {}, daf::ForestKind::random, {}, 0),
      daf::EmptyData);
  REQUIRE_THROWS_AS(
      daf::fit_forest(daf::FeatureView(x), {}, daf::ForestKind::random, {}, 0),
      daf::EmptyData);
}

TEST_CASE("forest has the requested number of trees") {
  const Blobs data = two_blobs(50, 7);
  daf::ForestParams params;
  params.n_trees = 7;
  const daf::Forest forest = daf::fit_forest(daf::FeatureView(data.x), data.y,
                                             daf::ForestKind::random, params, 1);
  REQUIRE(forest.trees.size() == 7);
  REQUIRE(forest.feature_dim == 4);
  REQUIRE(!forest.has_val_accuracy());
}

TEST_CASE("equal seeds give identical forests, different seeds differ") {
  const Blobs data = two_blobs(60, 11);
  daf::ForestParams params;
  params.n_trees = 5;
  const auto view = daf::FeatureView(data.x);
  const daf::Forest a = daf::fit_forest(view, data.y, daf::ForestKind::random, params, 42);
  const daf::Forest b = daf::fit_forest(view, data.y, daf::ForestKind::random, params, 42);
  REQUIRE(a.trees.size() == b.trees.size());
  for (std::size_t t = 0; t < a.trees.size(); ++t) {
    REQUIRE(a.trees[t].size() == b.trees[t].size());
    for (std::size_t n = 0; n < a.trees[t].size(); ++n) {
      REQUIRE(a.trees[t][n].feature == b.trees[t][n].feature);
      REQUIRE(a.trees[t][n].threshold == b.trees[t][n].threshold);
      REQUIRE(a.trees[t][n].counts[0] == b.trees[t][n].counts[0]);
      REQUIRE(a.trees[t][n].counts[1] == b.trees[t][n].counts[1]);
    }
  }
  const daf::Forest c = daf::fit_forest(view, data.y, daf::ForestKind::random, params, 43);
  bool any_difference = c.trees.size() != a.trees.size();
  for (std::size_t t = 0; !any_difference && t < a.trees.size(); ++t) {
    any_difference = a.trees[t].size() != c.trees[t].size();
  }
  REQUIRE((any_difference || a.trees[0][0].threshold != c.trees[0][0].threshold));
}

TEST_CASE("forest fitting is independent of thread count") {
  const Blobs data = two_blobs(80, 13);
  daf::ForestParams params;
  params.n_trees = 8;
  const auto view = daf::FeatureView(data.x);
  const daf::Forest serial =
      daf::fit_forest(view, data.y, daf::ForestKind::random, params, 5, 1);
  const daf::Forest threaded =
      daf::fit_forest(view, data.y, daf::ForestKind::random, params, 5, 4);
  for (std::size_t t = 0; t < serial.trees.size(); ++t) {
    REQUIRE(serial.trees[t].size() == threaded.trees[t].size());
    for (std::size_t n = 0; n < serial.trees[t].size(); ++n) {
      REQUIRE(serial.trees[t][n].threshold == threaded.trees[t][n].threshold);
    }
  }
}

TEST_CASE("blob forest reaches training accuracy matching the oracle") {
  const Blobs data = two_blobs(200, 17);
  REQUIRE(nearest_centroid_accuracy(data) >= 0.99);

  daf::ForestParams params;
  params.n_trees = 25;
  const daf::Forest forest = daf::fit_forest(daf::FeatureView(data.x), data.y,
                                             daf::ForestKind::random, params, 23);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.y.size(); ++i) {
    const auto p = daf::predict_proba(forest, data.x.row(i), 4);
    if ((p[1] >= 0.5 ? 1 : 0) == data.y[i]) ++correct;
  }
  REQUIRE(static_cast<double>(correct) / 200.0 >= 0.99);
}

TEST_CASE("completely random thresholds stay inside observed ranges") {
  const Blobs data = two_blobs(100, 19);
  daf::ForestParams params;
  params.n_trees = 10;
  const daf::Forest forest =
      daf::fit_forest(daf::FeatureView(data.x), data.y,
                      daf::ForestKind::completely_random, params, 29);

  // Global range bounds every node range.
  std::array<double, 4> lo{};
  std::array<double, 4> hi{};
  for (std::size_t c = 0; c < 4; ++c) {
    lo[c] = hi[c] = data.x.at(0, c);
    for (std::size_t i = 1; i < 100; ++i) {
      lo[c] = std::min(lo[c], data.x.at(i, c));
      hi[c] = std::max(hi[c], data.x.at(i, c));
    }
  }
  for (const daf::Tree& tree : forest.trees) {
    for (const daf::TreeNode& node : tree) {
      if (node.is_leaf()) continue;
      REQUIRE(node.threshold > lo[static_cast<std::size_t>(node.feature)]);
      REQUIRE(node.threshold <= hi[static_cast<std::size_t>(node.feature)]);
    }
  }
}

TEST_CASE("completely random forest still separates the blobs") {
  const Blobs data = two_blobs(200, 31);
  daf::ForestParams params;
  params.n_trees = 25;
  const daf::Forest forest =
      daf::fit_forest(daf::FeatureView(data.x), data.y,
                      daf::ForestKind::completely_random, params, 37);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.y.size(); ++i) {
    const auto p = daf::predict_proba(forest, data.x.row(i), 4);
    if ((p[1] >= 0.5 ? 1 : 0) == data.y[i]) ++correct;
  }
  REQUIRE(static_cast<double>(correct) / 200.0 >= 0.95);
}

TEST_CASE("bootstrap resample has input cardinality and valid indices") {
  daf::Rng rng(41);
  const auto sample = daf::bootstrap_sample(57, rng);
  REQUIRE(sample.size() == 57);
  std::set<std::size_t> unique;
  for (std::size_t i : sample) {
    REQUIRE(i < 57);
    unique.insert(i);
  }
  REQUIRE(unique.size() > 1);
}

TEST_CASE("predict_proba distributions are valid and exact in easy cases") {
  // Hand-built forest: two single-leaf trees with opposite pure counts.
  daf::Forest forest;
  forest.kind = daf::ForestKind::random;
  forest.feature_dim = 3;
  daf::TreeNode pure_real;
  pure_real.counts[0] = 4;
  daf::TreeNode pure_fake;
  pure_fake.counts[1] = 9;
  forest.trees.push_back({pure_real});
  forest.trees.push_back({pure_fake});

  const std::vector<double> x{0.0, 0.0, 0.0};
  const auto p = daf::predict_proba(forest, x);
  REQUIRE(p[0] == 0.5);
  REQUIRE(p[1] == 0.5);

  forest.trees = {{pure_fake}, {pure_fake}};
  const auto all_fake = daf::predict_proba(forest, x);
  REQUIRE(all_fake[0] == 0.0);
  REQUIRE(all_fake[1] == 1.0);

  REQUIRE_THROWS_AS(daf::predict_proba(forest, {0.0}), daf::DimensionMismatch);
}

TEST_CASE("predict_proba sums to one on random forests and inputs") {
  const Blobs data = two_blobs(120, 43);
  daf::ForestParams params;
  params.n_trees = 12;
  const daf::Forest forest = daf::fit_forest(daf::FeatureView(data.x), data.y,
                                             daf::ForestKind::random, params, 47);
  daf::Rng rng(53);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x(4);
    for (double& v : x) v = rng.uniform(-3.0, 3.0);
    const auto p = daf::predict_proba(forest, x);
    REQUIRE(p[0] >= 0.0);
    REQUIRE(p[1] >= 0.0);
    REQUIRE(std::abs(p[0] + p[1] - 1.0) < 1e-9);
  }
}

TEST_CASE("max depth cap limits growth") {
  daf::Rng rng(59);
  daf::Matrix x(128, 2);
  std::vector<int> y(128);
  for (std::size_t i = 0; i < 128; ++i) {
    x.at(i, 0) = rng.uniform01();
    x.at(i, 1) = rng.uniform01();
    y[i] = static_cast<int>(rng.below(2));
  }
  daf::ForestParams params;
  params.max_depth = 3;
  const daf::Tree tree =
      daf::fit_tree(daf::FeatureView(x), y, daf::ForestKind::random, params, 61);
  REQUIRE(tree_depth(tree) <= 3);
}
