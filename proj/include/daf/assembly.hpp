#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "daf/cascade.hpp"
#include "daf/data.hpp"
#include "daf/error.hpp"
#include "daf/matrix.hpp"
#include "daf/metrics.hpp"
#include "daf/rng.hpp"

namespace daf {

/// Per-training-sample positive weights driving batch sampling.
struct SampleWeights {
  std::vector<double> values;

  static SampleWeights uniform(std::size_t n) {
    SampleWeights w;
    w.values.assign(n, 1.0);
    return w;
  }

  std::size_t size() const { return values.size(); }

  void validate() const {
    for (double w : values) {
      if (!(w > 0.0)) throw InvalidSpec("sample weights must stay positive");
    }
  }
};

namespace detail {

/// Fenwick tree over weights; supports prefix-sum search for O(log n)
/// weighted draws.
class WeightIndex {
 public:
  explicit WeightIndex(const std::vector<double>& weights)
      : n_(weights.size()), tree_(weights.size() + 1, 0.0) {
    for (std::size_t i = 1; i <= n_; ++i) {
      tree_[i] += weights[i - 1];
      const std::size_t parent = i + (i & (~i + 1));
      if (parent <= n_) tree_[parent] += tree_[i];
    }
    total_ = 0.0;
    for (double w : weights) total_ += w;
  }

  double total() const { return total_; }

  void remove(std::size_t index, double weight) {
    total_ -= weight;
    for (std::size_t i = index + 1; i <= n_; i += i & (~i + 1)) {
      tree_[i] -= weight;
    }
  }

  /// Smallest index whose prefix sum exceeds target.
  std::size_t find(double target) const {
    std::size_t pos = 0;
    std::size_t bit = std::bit_floor(n_);
    double acc = 0.0;
    while (bit != 0) {
      const std::size_t next = pos + bit;
      if (next <= n_ && acc + tree_[next] <= target) {
        pos = next;
        acc += tree_[next];
      }
      bit >>= 1;
    }
    return pos;  // 0-based element index
  }

 private:
  std::size_t n_;
  std::vector<double> tree_;
  double total_;
};

/// k distinct elements of pool, uniformly, in ascending order.
inline std::vector<std::size_t> sample_without_replacement(
    std::vector<std::size_t> pool, std::size_t k, Rng& rng) {
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + rng.below(pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return pool;
}

/// Complement of a sorted index set within [0, n).
inline std::vector<std::size_t> complement_of(const std::vector<std::size_t>& sorted,
                                              std::size_t n) {
  std::vector<std::size_t> out;
  out.reserve(n - sorted.size());
  std::size_t next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (next < sorted.size() && sorted[next] == i) {
      ++next;
    } else {
      out.push_back(i);
    }
  }
  return out;
}

}  // namespace detail

/// k distinct indices by sequential weighted draws without replacement:
/// each draw picks index i with probability w_i over the remaining total.
inline std::vector<std::size_t> weighted_sample(const SampleWeights& weights,
                                                std::size_t k, std::uint64_t seed) {
  if (k > weights.size()) {
    throw InvalidCount("weighted_sample: k exceeds population");
  }
  weights.validate();
  Rng rng(seed);
  detail::WeightIndex index(weights.values);
  std::vector<std::size_t> drawn;
  drawn.reserve(k);
  for (std::size_t draw = 0; draw < k; ++draw) {
    const double target = rng.uniform01() * index.total();
    std::size_t pick = index.find(target);
    if (pick >= weights.size()) pick = weights.size() - 1;  // fp guard
    drawn.push_back(pick);
    index.remove(pick, weights.values[pick]);
  }
  std::sort(drawn.begin(), drawn.end());
  return drawn;
}

/// Multiplicative re-weighting of a probe subset: misclassified samples
/// gain weight (* factor), correctly classified ones lose it (/ factor).
/// Everything else is untouched. factor = 1 is a no-op.
inline SampleWeights update_weights(const SampleWeights& weights,
                                    const std::vector<double>& scores,
                                    const std::vector<int>& truth,
                                    const std::vector<std::size_t>& subset,
                                    double factor) {
  if (!(factor >= 1.0)) throw InvalidSpec("weight factor must be >= 1");
  if (scores.size() != subset.size() || truth.size() != subset.size()) {
    throw LengthMismatch("update_weights: subset/scores/truth lengths differ");
  }
  SampleWeights out = weights;
  for (std::size_t i = 0; i < subset.size(); ++i) {
    const std::size_t index = subset[i];
    if (index >= out.values.size()) {
      throw IndexOutOfRange("update_weights: subset index out of range");
    }
    const int predicted = scores[i] >= 0.5 ? 1 : 0;
    if (predicted != truth[i]) {
      out.values[index] *= factor;
    } else {
      out.values[index] /= factor;
    }
  }
  return out;
}

/// One evaluated forest in a selection pool.
struct SelectionRecord {
  int layer = 0;
  int candidate = 0;
  int position = 0;
  ForestKind kind = ForestKind::random;
  double accuracy = 0.0;
  bool selected = false;
};

namespace detail {

/// Accuracy of one forest over validation rows, where each row is base
/// features plus a per-row augmentation vector.
inline double forest_accuracy(const Forest& forest, const Matrix& val_x,
                              const std::vector<int>& val_labels,
                              const std::vector<std::vector<double>>& augment,
                              int n_threads) {
  const std::size_t n = val_x.rows();
  std::vector<std::uint8_t> correct(n, 0);
  parallel_for(n, n_threads, [&](std::size_t r) {
    const double* base = val_x.row(r);
    const std::vector<double>& aug = augment[r];
    const auto p = forest_proba(forest, [&](std::size_t f) {
      return f < val_x.cols() ? base[f] : aug[f - val_x.cols()];
    });
    correct[r] = ((p[1] >= 0.5 ? 1 : 0) == val_labels[r]) ? 1 : 0;
  });
  std::size_t hits = 0;
  for (std::uint8_t c : correct) hits += c;
  return static_cast<double>(hits) / static_cast<double>(n);
}

/// Advances per-row augmentation through one layer.
inline void advance_augment(const CascadeLayer& layer, const Matrix& val_x,
                            std::vector<std::vector<double>>& augment,
                            int n_threads) {
  parallel_for(val_x.rows(), n_threads, [&](std::size_t r) {
    const double* base = val_x.row(r);
    augment[r] = layer_class_vectors(
        layer,
        [base](std::size_t f) { return base[f]; },
        val_x.cols(), augment[r]);
  });
}

}  // namespace detail

/// Builds one assembled layer: evaluates every candidate's forests of the
/// given layer on the validation subset (each fed the supplied per-row
/// augmentation) and keeps the top-A random and top-B completely random
/// forests. Ties resolve by (candidate index, forest position). Selected
/// copies carry their validation accuracy.
inline CascadeLayer select_components(const std::vector<DeepForestModel>& candidates,
                                      int layer_index, const Matrix& val_x,
                                      const std::vector<int>& val_labels,
                                      const std::vector<std::vector<double>>& augment,
                                      int n_threads = 1,
                                      std::vector<SelectionRecord>* records = nullptr) {
  if (candidates.empty()) throw EmptyData("select_components: no candidates");
  if (val_x.rows() == 0) throw EmptyValidation("select_components: empty validation set");
  if (val_x.rows() != val_labels.size()) {
    throw LengthMismatch("select_components: |X| != |y|");
  }
  const CascadeConfig& shape = candidates.front().config;
  for (const DeepForestModel& model : candidates) {
    if (static_cast<int>(model.layers.size()) <= layer_index) {
      throw InvalidSpec("select_components: candidate lacks requested layer");
    }
    if (model.base_dim != candidates.front().base_dim ||
        model.layers[static_cast<std::size_t>(layer_index)].forests.size() !=
            static_cast<std::size_t>(shape.forests_per_layer())) {
      throw DimensionMismatch("select_components: candidate shape mismatch");
    }
  }

  struct PoolEntry {
    int candidate;
    int position;
    double accuracy;
  };
  std::vector<PoolEntry> random_pool;
  std::vector<PoolEntry> cr_pool;
  std::vector<SelectionRecord> local_records;

  for (int c = 0; c < static_cast<int>(candidates.size()); ++c) {
    const CascadeLayer& layer =
        candidates[static_cast<std::size_t>(c)].layers[static_cast<std::size_t>(layer_index)];
    for (int j = 0; j < static_cast<int>(layer.forests.size()); ++j) {
      const Forest& forest = layer.forests[static_cast<std::size_t>(j)];
      const double acc =
          detail::forest_accuracy(forest, val_x, val_labels, augment, n_threads);
      (forest.kind == ForestKind::random ? random_pool : cr_pool)
          .push_back({c, j, acc});
      local_records.push_back({layer_index, c, j, forest.kind, acc, false});
    }
  }

  // Stable sort by accuracy keeps (candidate, position) order on ties.
  auto by_accuracy = [](const PoolEntry& a, const PoolEntry& b) {
    return a.accuracy > b.accuracy;
  };
  std::stable_sort(random_pool.begin(), random_pool.end(), by_accuracy);
  std::stable_sort(cr_pool.begin(), cr_pool.end(), by_accuracy);

  CascadeLayer assembled;
  auto take = [&](const std::vector<PoolEntry>& pool, int count) {
    for (int i = 0; i < count; ++i) {
      const PoolEntry& entry = pool[static_cast<std::size_t>(i)];
      Forest copy = candidates[static_cast<std::size_t>(entry.candidate)]
                        .layers[static_cast<std::size_t>(layer_index)]
                        .forests[static_cast<std::size_t>(entry.position)];
      copy.val_accuracy = entry.accuracy;
      assembled.forests.push_back(std::move(copy));
      for (SelectionRecord& record : local_records) {
        if (record.candidate == entry.candidate && record.position == entry.position) {
          record.selected = true;
        }
      }
    }
  };
  take(random_pool, shape.n_random);
  take(cr_pool, shape.n_completely_random);

  if (records) {
    records->insert(records->end(), local_records.begin(), local_records.end());
  }
  return assembled;
}

/// Fuses candidate cascades into one model of unchanged scale: layers are
/// selected bottom-up, each conditioned on the already-assembled prefix
/// (per-row validation augmentation comes from the assembled layers below).
/// With condition_on_assembled = false, each candidate's forests are
/// instead evaluated behind that candidate's own lower layers.
inline DeepForestModel assemble(const std::vector<DeepForestModel>& candidates,
                                const Matrix& val_x, const std::vector<int>& val_labels,
                                bool condition_on_assembled = true, int n_threads = 1,
                                std::vector<SelectionRecord>* records = nullptr) {
  if (candidates.empty()) throw EmptyData("assemble: no candidates");
  if (val_x.rows() == 0) throw EmptyValidation("assemble: empty validation set");

  DeepForestModel assembled;
  assembled.base_dim = candidates.front().base_dim;
  assembled.config = candidates.front().config;
  const int n_layers = static_cast<int>(candidates.front().layers.size());

  std::vector<std::vector<double>> assembled_augment(val_x.rows());
  // Per-candidate own-path augmentation, only maintained for the
  // alternative conditioning mode.
  std::vector<std::vector<std::vector<double>>> own_augment;
  if (!condition_on_assembled) {
    own_augment.assign(candidates.size(),
                       std::vector<std::vector<double>>(val_x.rows()));
  }

  for (int layer_index = 0; layer_index < n_layers; ++layer_index) {
    CascadeLayer layer;
    if (condition_on_assembled) {
      layer = select_components(candidates, layer_index, val_x, val_labels,
                                assembled_augment, n_threads, records);
    } else {
      // Evaluate each candidate behind its own prefix: build a one-layer
      // pool per candidate, then merge through the shared selection rule.
      std::vector<SelectionRecord> merged;
      struct Scored {
        int candidate;
        int position;
        double accuracy;
      };
      std::vector<Scored> random_pool;
      std::vector<Scored> cr_pool;
      for (int c = 0; c < static_cast<int>(candidates.size()); ++c) {
        const CascadeLayer& cand_layer =
            candidates[static_cast<std::size_t>(c)].layers[static_cast<std::size_t>(layer_index)];
        for (int j = 0; j < static_cast<int>(cand_layer.forests.size()); ++j) {
          const Forest& forest = cand_layer.forests[static_cast<std::size_t>(j)];
          const double acc = detail::forest_accuracy(
              forest, val_x, val_labels, own_augment[static_cast<std::size_t>(c)],
              n_threads);
          (forest.kind == ForestKind::random ? random_pool : cr_pool)
              .push_back({c, j, acc});
          merged.push_back({layer_index, c, j, forest.kind, acc, false});
        }
      }
      auto by_accuracy = [](const Scored& a, const Scored& b) {
        return a.accuracy > b.accuracy;
      };
      std::stable_sort(random_pool.begin(), random_pool.end(), by_accuracy);
      std::stable_sort(cr_pool.begin(), cr_pool.end(), by_accuracy);
      auto take = [&](const std::vector<Scored>& pool, int count) {
        for (int i = 0; i < count; ++i) {
          const Scored& entry = pool[static_cast<std::size_t>(i)];
          Forest copy = candidates[static_cast<std::size_t>(entry.candidate)]
                            .layers[static_cast<std::size_t>(layer_index)]
                            .forests[static_cast<std::size_t>(entry.position)];
          copy.val_accuracy = entry.accuracy;
          layer.forests.push_back(std::move(copy));
          for (SelectionRecord& record : merged) {
            if (record.candidate == entry.candidate &&
                record.position == entry.position) {
              record.selected = true;
            }
          }
        }
      };
      take(random_pool, assembled.config.n_random);
      take(cr_pool, assembled.config.n_completely_random);
      if (records) records->insert(records->end(), merged.begin(), merged.end());
      for (std::size_t c = 0; c < candidates.size(); ++c) {
        detail::advance_augment(candidates[c].layers[static_cast<std::size_t>(layer_index)],
                                val_x, own_augment[c], n_threads);
      }
    }

    assembled.layers.push_back(layer);
    detail::advance_augment(assembled.layers.back(), val_x, assembled_augment,
                            n_threads);
  }
  return assembled;
}

/// Everything Alg.-1-shaped in one bag of knobs.
struct TrainConfig {
  double sampling_ratio = 0.1;   // p: batch fraction of the training set
  int candidates_per_round = 3;  // v
  int max_rounds = 10;           // N
  double weight_factor = 1.5;    // theta
  double epsilon = 0.005;        // early stop: min accuracy improvement
  double val_fraction = 0.05;
  std::size_t ws_cap = 0;  // probe subset size; 0 = min(1000, 2% of |D|)
  bool condition_on_assembled = true;
  CascadeConfig cascade;
  std::uint64_t seed = 0;
  int threads = 0;  // 0 = hardware concurrency

  void validate() const {
    if (!(sampling_ratio > 0.0 && sampling_ratio <= 1.0)) {
      throw ConfigError("sampling ratio must lie in (0, 1]");
    }
    if (candidates_per_round < 1) throw ConfigError("candidates per round must be >= 1");
    if (max_rounds < 0) throw ConfigError("max rounds must be >= 0");
    if (!(weight_factor > 1.0)) throw ConfigError("weight factor must be > 1");
    if (epsilon < 0.0) throw ConfigError("epsilon must be >= 0");
    if (!(val_fraction > 0.0 && val_fraction < 1.0)) {
      throw ConfigError("validation fraction must lie in (0, 1)");
    }
    cascade.validate();
  }

  std::size_t batch_size(std::size_t n) const {
    return std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(sampling_ratio * static_cast<double>(n))));
  }

  std::size_t val_size(std::size_t n) const {
    return std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(n))));
  }

  std::size_t ws_size(std::size_t n) const {
    if (ws_cap > 0) return ws_cap;
    return std::min<std::size_t>(1000, std::max<std::size_t>(1, n / 50));
  }
};

struct RoundRecord {
  int round = 0;
  std::vector<double> candidate_accuracy;  // per slot, on this round's b_val
  double assembled_accuracy = 0.0;
  std::vector<std::vector<std::size_t>> batches;     // per constructed candidate
  std::vector<std::vector<std::size_t>> ws_subsets;  // per constructed candidate
  std::vector<std::size_t> val_rows;
  bool val_degenerate = false;  // b_val overlapped batches (p too large)
  std::vector<SelectionRecord> selections;
  std::string stop_reason = "continue";
};

struct RunHooks {
  ResidencyAccounting* accounting = nullptr;
  std::ostream* log = nullptr;
  std::function<void(const RoundRecord&)> on_round;
  std::function<void(int round, int slot, const DeepForestModel&)> on_candidate;
};

struct DafResult {
  DeepForestModel model;  // best assembled model across rounds
  double best_accuracy = 0.0;
  int best_round = 0;
  std::vector<RoundRecord> rounds;
  std::string stop_reason;
};

/// Peak concurrently resident feature rows of a hooked run.
inline std::optional<std::size_t> peak_residency(const RunHooks& hooks) {
  if (!hooks.accounting) return std::nullopt;
  return hooks.accounting->peak_rows();
}

inline std::string describe_peak(const RunHooks& hooks) {
  const auto peak = peak_residency(hooks);
  return peak ? std::to_string(*peak) : std::string("unmeasured");
}

namespace detail {

inline void log_round(std::ostream* os, const RoundRecord& record) {
  if (!os) return;
  std::ostringstream line;
  line << "round " << record.round << " | candidates";
  line << std::fixed << std::setprecision(4);
  for (double acc : record.candidate_accuracy) line << ' ' << acc;
  line << " | assembled " << record.assembled_accuracy;
  line << " | " << record.stop_reason;
  if (record.val_degenerate) line << " (validation overlaps batches)";
  *os << line.str() << '\n';
}

}  // namespace detail

/// The batch-wise training loop: weighted batch sampling, per-batch cascade
/// construction, probe-subset weight updates, layer-level assembly on a
/// fresh validation subset, early stop on stalled improvement. Returns the
/// best assembled model seen.
inline DafResult run_daf(DataSource& data, const TrainConfig& cfg,
                         const RunHooks& hooks = {}) {
  cfg.validate();
  const std::size_t n = data.size();
  if (n == 0) throw EmptyData("run_daf: empty dataset");
  const std::vector<int>& labels = data.labels();
  const bool has_real = std::find(labels.begin(), labels.end(), 0) != labels.end();
  const bool has_fake = std::find(labels.begin(), labels.end(), 1) != labels.end();
  if (!has_real || !has_fake) throw ConfigError("both classes required");

  const std::size_t batch_size = cfg.batch_size(n);
  if (cfg.cascade.cross_fit &&
      batch_size < static_cast<std::size_t>(cfg.cascade.cv_folds)) {
    throw ConfigError("batch size below fold count; raise sampling ratio");
  }
  const int threads = resolve_threads(cfg.threads);

  SampleWeights weights = SampleWeights::uniform(n);
  DafResult result;
  std::optional<DeepForestModel> previous_assembled;
  double best_accuracy = -1.0;

  for (int round = 0; round <= cfg.max_rounds; ++round) {
    const std::uint64_t round_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(round));
    RoundRecord record;
    record.round = round;

    std::vector<DeepForestModel> candidates;
    std::vector<std::size_t> round_batch_union;
    if (previous_assembled) candidates.push_back(*previous_assembled);

    for (int slot = static_cast<int>(candidates.size());
         slot < cfg.candidates_per_round; ++slot) {
      const std::uint64_t slot_stream = static_cast<std::uint64_t>(slot);
      const std::vector<std::size_t> batch = weighted_sample(
          weights, batch_size, derive_seed(round_seed, 0x100 + slot_stream));
      round_batch_union.insert(round_batch_union.end(), batch.begin(), batch.end());

      std::vector<int> batch_labels(batch.size());
      for (std::size_t i = 0; i < batch.size(); ++i) batch_labels[i] = labels[batch[i]];

      DeepForestModel model;
      {
        data.set_load_nonce(derive_seed(round_seed, 0x200 + slot_stream));
        const Matrix batch_x = data.load_rows(batch, hooks.accounting, true);
        model = fit_cascade(batch_x, batch_labels, cfg.cascade,
                            derive_seed(round_seed, 0x300 + slot_stream), threads);
      }
      if (hooks.on_candidate) hooks.on_candidate(round, slot, model);

      // Probe subset from the batch complement re-scores the fresh model
      // and shifts weights toward what it gets wrong.
      const std::vector<std::size_t> pool = detail::complement_of(batch, n);
      if (!pool.empty()) {
        Rng ws_rng(derive_seed(round_seed, 0x400 + slot_stream));
        const std::size_t ws_count = std::min(cfg.ws_size(n), pool.size());
        const std::vector<std::size_t> probe =
            detail::sample_without_replacement(pool, ws_count, ws_rng);
        record.ws_subsets.push_back(probe);

        std::vector<int> probe_labels(probe.size());
        for (std::size_t i = 0; i < probe.size(); ++i) probe_labels[i] = labels[probe[i]];
        std::vector<double> probe_scores;
        {
          const Matrix probe_x = data.load_rows(probe, hooks.accounting, false);
          probe_scores = predict_scores(model, FeatureView(probe_x), threads);
        }
        weights = update_weights(weights, probe_scores, probe_labels, probe,
                                 cfg.weight_factor);
      } else {
        record.ws_subsets.emplace_back();
      }

      record.batches.push_back(batch);
      candidates.push_back(std::move(model));
    }

    // Validation subset, disjoint from this round's batches whenever the
    // complement allows it.
    std::sort(round_batch_union.begin(), round_batch_union.end());
    round_batch_union.erase(
        std::unique(round_batch_union.begin(), round_batch_union.end()),
        round_batch_union.end());
    std::vector<std::size_t> val_pool = detail::complement_of(round_batch_union, n);
    if (val_pool.empty()) {
      record.val_degenerate = true;
      val_pool.resize(n);
      std::iota(val_pool.begin(), val_pool.end(), std::size_t{0});
    }
    Rng val_rng(derive_seed(round_seed, 0x500));
    const std::size_t val_count = std::min(cfg.val_size(n), val_pool.size());
    const std::vector<std::size_t> val_rows =
        detail::sample_without_replacement(val_pool, val_count, val_rng);
    record.val_rows = val_rows;

    std::vector<int> val_labels(val_rows.size());
    for (std::size_t i = 0; i < val_rows.size(); ++i) val_labels[i] = labels[val_rows[i]];

    DeepForestModel assembled;
    double assembled_accuracy = 0.0;
    {
      const Matrix val_x = data.load_rows(val_rows, hooks.accounting, false);
      for (const DeepForestModel& candidate : candidates) {
        const std::vector<double> scores =
            predict_scores(candidate, FeatureView(val_x), threads);
        record.candidate_accuracy.push_back(accuracy(scores, val_labels));
      }
      assembled = assemble(candidates, val_x, val_labels, cfg.condition_on_assembled,
                           threads, &record.selections);
      const std::vector<double> scores =
          predict_scores(assembled, FeatureView(val_x), threads);
      assembled_accuracy = accuracy(scores, val_labels);
    }
    record.assembled_accuracy = assembled_accuracy;

    if (assembled_accuracy > best_accuracy) {
      best_accuracy = assembled_accuracy;
      result.model = assembled;
      result.best_round = round;
    }

    // Early stop compares against the previous assembled model on the
    // same validation subset (it sits in candidate slot 0).
    bool converged = false;
    if (previous_assembled) {
      const double improvement = assembled_accuracy - record.candidate_accuracy.front();
      converged = improvement < cfg.epsilon;
    }
    if (converged) {
      record.stop_reason = "converged";
    } else if (round == cfg.max_rounds) {
      record.stop_reason = "max-rounds";
    }

    detail::log_round(hooks.log, record);
    if (hooks.on_round) hooks.on_round(record);
    result.rounds.push_back(std::move(record));

    if (converged || round == cfg.max_rounds) {
      result.stop_reason = result.rounds.back().stop_reason;
      break;
    }
    previous_assembled = std::move(assembled);
  }

  result.best_accuracy = best_accuracy;
  return result;
}

}  // namespace daf
