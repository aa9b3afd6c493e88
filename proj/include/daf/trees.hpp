#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "daf/error.hpp"
#include "daf/matrix.hpp"
#include "daf/parallel.hpp"
#include "daf/rng.hpp"

namespace daf {

enum class ForestKind : std::uint8_t {
  random = 0,            // CART: best Gini split among sqrt(d) candidates
  completely_random = 1  // uniform feature, uniform threshold in its range
};

struct ForestParams {
  int n_trees = 100;
  int max_depth = 64;
  int min_samples_split = 2;
  int candidate_features = 0;  // 0 = ceil(sqrt(feature_dim))
  bool bootstrap = true;

  void validate() const {
    if (n_trees < 1) throw InvalidSpec("n_trees must be >= 1");
    if (max_depth < 1) throw InvalidSpec("max_depth must be >= 1");
    if (min_samples_split < 2) throw InvalidSpec("min_samples_split must be >= 2");
    if (candidate_features < 0) throw InvalidSpec("candidate_features must be >= 0");
  }
};

/// Internal nodes route x to `left` iff x[feature] < threshold.
/// Leaves carry raw class counts so both hard votes and calibrated
/// distributions can be reported.
struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::uint64_t counts[2] = {0, 0};

  bool is_leaf() const { return feature < 0; }
};

using Tree = std::vector<TreeNode>;

/// Candidate split considered at one CART node; used by tests to check
/// that the chosen split dominates the pool.
struct SplitCandidate {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

struct NodeSplitAudit {
  std::vector<SplitCandidate> candidates;
  int chosen = -1;  // index into candidates
};

struct TreeFitAudit {
  std::vector<NodeSplitAudit> nodes;
};

template <typename FeatureAt>
const TreeNode& route_to_leaf(const Tree& tree, FeatureAt&& feature_at) {
  const TreeNode* node = &tree[0];
  while (!node->is_leaf()) {
    const std::size_t next =
        feature_at(static_cast<std::size_t>(node->feature)) < node->threshold
            ? node->left
            : node->right;
    node = &tree[next];
  }
  return *node;
}

namespace detail {

inline double gini(const std::array<std::uint64_t, 2>& counts) {
  const double n = static_cast<double>(counts[0] + counts[1]);
  if (n == 0.0) return 0.0;
  const double p0 = counts[0] / n;
  const double p1 = counts[1] / n;
  return 1.0 - p0 * p0 - p1 * p1;
}

/// k distinct values from [0, n), ascending (partial Fisher-Yates).
inline std::vector<std::size_t> sample_features(std::size_t n, std::size_t k, Rng& rng) {
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + rng.below(n - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return pool;
}

struct BestSplit {
  bool found = false;
  std::size_t feature = 0;
  double threshold = 0.0;
  double gain = -1.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const FeatureView& x, const std::vector<int>& y, ForestKind kind,
              const ForestParams& params, Rng& rng, TreeFitAudit* audit)
      : x_(x), y_(y), kind_(kind), params_(params), rng_(rng), audit_(audit) {
    n_candidates_ = params.candidate_features > 0
                        ? static_cast<std::size_t>(params.candidate_features)
                        : static_cast<std::size_t>(
                              std::ceil(std::sqrt(static_cast<double>(x.cols()))));
    n_candidates_ = std::min(n_candidates_, x.cols());
  }

  Tree build(std::vector<std::size_t>& rows) {
    Tree tree;
    grow(tree, rows, 0, rows.size(), 0);
    return tree;
  }

 private:
  std::array<std::uint64_t, 2> count_classes(const std::vector<std::size_t>& rows,
                                             std::size_t begin, std::size_t end) const {
    std::array<std::uint64_t, 2> counts{0, 0};
    for (std::size_t i = begin; i < end; ++i) ++counts[y_[rows[i]] == 1 ? 1 : 0];
    return counts;
  }

  std::int32_t make_leaf(Tree& tree, const std::array<std::uint64_t, 2>& counts) {
    TreeNode leaf;
    leaf.counts[0] = counts[0];
    leaf.counts[1] = counts[1];
    tree.push_back(leaf);
    return static_cast<std::int32_t>(tree.size() - 1);
  }

  BestSplit best_cart_split(const std::vector<std::size_t>& rows, std::size_t begin,
                            std::size_t end,
                            const std::array<std::uint64_t, 2>& parent_counts) {
    const std::size_t n = end - begin;
    const double parent_gini = gini(parent_counts);
    const double total = static_cast<double>(n);

    const std::vector<std::size_t> features =
        sample_features(x_.cols(), n_candidates_, rng_);

    BestSplit best;
    NodeSplitAudit node_audit;
    std::vector<std::pair<double, int>> column(n);

    for (const std::size_t f : features) {
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t row = rows[begin + i];
        column[i] = {x_.at(row, f), y_[row]};
      }
      std::sort(column.begin(), column.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      if (column.front().first == column.back().first) continue;

      std::array<std::uint64_t, 2> left{0, 0};
      for (std::size_t i = 0; i + 1 < n; ++i) {
        ++left[column[i].second == 1 ? 1 : 0];
        if (column[i].first == column[i + 1].first) continue;

        const std::array<std::uint64_t, 2> right{parent_counts[0] - left[0],
                                                 parent_counts[1] - left[1]};
        const double n_left = static_cast<double>(i + 1);
        const double n_right = total - n_left;
        const double gain = parent_gini - (n_left / total) * gini(left) -
                            (n_right / total) * gini(right);

        // Midpoint of the adjacent distinct values; fall back to the upper
        // value when rounding collapses the midpoint onto the lower one.
        double threshold = 0.5 * (column[i].first + column[i + 1].first);
        if (!(threshold > column[i].first)) threshold = column[i + 1].first;

        if (audit_) {
          node_audit.candidates.push_back(
              {static_cast<int>(f), threshold, gain});
        }
        // Strict improvement keeps the lowest feature index and lowest
        // threshold on ties (features ascend, thresholds ascend).
        if (!best.found || gain > best.gain) {
          best.found = true;
          best.feature = f;
          best.threshold = threshold;
          best.gain = gain;
          if (audit_) {
            node_audit.chosen = static_cast<int>(node_audit.candidates.size()) - 1;
          }
        }
      }
    }
    if (audit_ && best.found) audit_->nodes.push_back(std::move(node_audit));
    return best;
  }

  BestSplit best_random_split(const std::vector<std::size_t>& rows, std::size_t begin,
                              std::size_t end) {
    const std::size_t dim = x_.cols();
    auto feature_range = [&](std::size_t f, double& lo, double& hi) {
      lo = hi = x_.at(rows[begin], f);
      for (std::size_t i = begin + 1; i < end; ++i) {
        const double v = x_.at(rows[i], f);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    };

    BestSplit best;
    double lo = 0.0;
    double hi = 0.0;
    std::size_t feature = 0;
    bool found = false;
    for (int attempt = 0; attempt < 64 && !found; ++attempt) {
      feature = rng_.below(dim);
      feature_range(feature, lo, hi);
      found = hi > lo;
    }
    if (!found) {
      for (feature = 0; feature < dim; ++feature) {
        feature_range(feature, lo, hi);
        if (hi > lo) {
          found = true;
          break;
        }
      }
    }
    if (!found) return best;

    double threshold = lo + rng_.uniform01() * (hi - lo);
    while (!(threshold > lo)) threshold = lo + rng_.uniform01() * (hi - lo);
    best.found = true;
    best.feature = feature;
    best.threshold = threshold;
    best.gain = 0.0;
    return best;
  }

  std::int32_t grow(Tree& tree, std::vector<std::size_t>& rows, std::size_t begin,
                    std::size_t end, int depth) {
    const auto counts = count_classes(rows, begin, end);
    const std::size_t n = end - begin;
    const bool pure = counts[0] == 0 || counts[1] == 0;
    if (pure || n < static_cast<std::size_t>(params_.min_samples_split) ||
        depth >= params_.max_depth) {
      return make_leaf(tree, counts);
    }

    const BestSplit split = kind_ == ForestKind::random
                                ? best_cart_split(rows, begin, end, counts)
                                : best_random_split(rows, begin, end);
    if (!split.found) return make_leaf(tree, counts);

    const auto middle = std::stable_partition(
        rows.begin() + static_cast<std::ptrdiff_t>(begin),
        rows.begin() + static_cast<std::ptrdiff_t>(end), [&](std::size_t row) {
          return x_.at(row, split.feature) < split.threshold;
        });
    const std::size_t split_at =
        static_cast<std::size_t>(middle - rows.begin());
    if (split_at == begin || split_at == end) {
      // Threshold failed to separate (can only happen through repeated
      // rounding); refuse the degenerate split.
      return make_leaf(tree, counts);
    }

    const std::size_t index = tree.size();
    tree.emplace_back();
    tree[index].feature = static_cast<std::int32_t>(split.feature);
    tree[index].threshold = split.threshold;
    const std::int32_t left = grow(tree, rows, begin, split_at, depth + 1);
    const std::int32_t right = grow(tree, rows, split_at, end, depth + 1);
    tree[index].left = left;
    tree[index].right = right;
    return static_cast<std::int32_t>(index);
  }

  const FeatureView& x_;
  const std::vector<int>& y_;
  ForestKind kind_;
  const ForestParams& params_;
  Rng& rng_;
  TreeFitAudit* audit_;
  std::size_t n_candidates_ = 0;
};

}  // namespace detail

/// Uniform resample of size n with replacement over [0, n).
inline std::vector<std::size_t> bootstrap_sample(std::size_t n, Rng& rng) {
  std::vector<std::size_t> rows(n);
  for (std::size_t& r : rows) r = rng.below(n);
  return rows;
}

/// Grows a single decision tree on all rows of x.
inline Tree fit_tree(const FeatureView& x, const std::vector<int>& y, ForestKind kind,
                     const ForestParams& params, std::uint64_t seed,
                     TreeFitAudit* audit = nullptr) {
  params.validate();
  if (x.rows() == 0) throw EmptyData("fit_tree: no samples");
  if (x.rows() != y.size()) throw LengthMismatch("fit_tree: |X| != |y|");
  Rng rng(seed);
  std::vector<std::size_t> rows(x.rows());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  detail::TreeBuilder builder(x, y, kind, params, rng, audit);
  return builder.build(rows);
}

struct Forest {
  ForestKind kind = ForestKind::random;
  std::vector<Tree> trees;
  std::uint64_t feature_dim = 0;
  double val_accuracy = -1.0;  // set by assembly; negative means unset

  bool has_val_accuracy() const { return val_accuracy >= 0.0; }
};

/// Bags n_trees trees, each fit on an independent bootstrap resample of the
/// input (same cardinality, drawn with replacement) under a per-tree seed
/// derived from (seed, tree index). Safe to parallelize: per-tree streams
/// are fixed ahead of scheduling.
inline Forest fit_forest(const FeatureView& x, const std::vector<int>& y,
                         ForestKind kind, const ForestParams& params,
                         std::uint64_t seed, int n_threads = 1) {
  params.validate();
  if (x.rows() == 0) throw EmptyData("fit_forest: no samples");
  if (x.rows() != y.size()) throw LengthMismatch("fit_forest: |X| != |y|");

  Forest forest;
  forest.kind = kind;
  forest.feature_dim = x.cols();
  forest.trees.resize(static_cast<std::size_t>(params.n_trees));
  parallel_for(forest.trees.size(), n_threads, [&](std::size_t t) {
    Rng rng(derive_seed(seed, t));
    std::vector<std::size_t> rows;
    if (params.bootstrap) {
      rows = bootstrap_sample(x.rows(), rng);
    } else {
      rows.resize(x.rows());
      std::iota(rows.begin(), rows.end(), std::size_t{0});
    }
    detail::TreeBuilder builder(x, y, kind, params, rng, nullptr);
    forest.trees[t] = builder.build(rows);
  });
  return forest;
}

namespace detail {

template <typename FeatureAt>
std::array<double, 2> forest_proba(const Forest& forest, FeatureAt&& feature_at) {
  std::array<double, 2> mean{0.0, 0.0};
  for (const Tree& tree : forest.trees) {
    const TreeNode& leaf = route_to_leaf(tree, feature_at);
    const double total = static_cast<double>(leaf.counts[0] + leaf.counts[1]);
    mean[0] += leaf.counts[0] / total;
    mean[1] += leaf.counts[1] / total;
  }
  const double inv = 1.0 / static_cast<double>(forest.trees.size());
  mean[0] *= inv;
  mean[1] *= inv;
  return mean;
}

}  // namespace detail

/// Class distribution for one sample: average of per-tree leaf frequencies.
inline std::array<double, 2> predict_proba(const Forest& forest, const double* x,
                                           std::size_t dim) {
  if (dim != forest.feature_dim) {
    throw DimensionMismatch("predict_proba: feature dim mismatch");
  }
  return detail::forest_proba(forest, [x](std::size_t f) { return x[f]; });
}

inline std::array<double, 2> predict_proba(const Forest& forest,
                                           const std::vector<double>& x) {
  return predict_proba(forest, x.data(), x.size());
}

/// Same, reading one row of a (possibly augmented) feature view in place.
inline std::array<double, 2> predict_proba_row(const Forest& forest,
                                               const FeatureView& x,
                                               std::size_t row) {
  if (x.cols() != forest.feature_dim) {
    throw DimensionMismatch("predict_proba_row: feature dim mismatch");
  }
  return detail::forest_proba(
      forest, [&x, row](std::size_t f) { return x.at(row, f); });
}

}  // namespace daf
