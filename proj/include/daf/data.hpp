#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "daf/error.hpp"
#include "daf/matrix.hpp"

namespace daf {

/// Row-addressable training data. Implementations load only the requested
/// subset so callers control how many feature rows are resident at once.
class DataSource {
 public:
  virtual ~DataSource() = default;

  virtual std::size_t size() const = 0;
  virtual std::size_t dim() const = 0;
  virtual const std::vector<int>& labels() const = 0;

  /// Loads the given rows in order. `for_training` marks batch loads that
  /// may apply train-time augmentation; evaluation subsets pass false.
  virtual Matrix load_rows(std::span<const std::size_t> indices,
                           ResidencyAccounting* acct, bool for_training) = 0;

  /// Advances the augmentation stream (one nonce per batch load); sources
  /// without augmentation ignore it.
  virtual void set_load_nonce(std::uint64_t /*nonce*/) {}
};

/// Whole dataset held in memory; the degenerate everything-resident mode
/// and the workhorse for tests.
class InMemorySource : public DataSource {
 public:
  InMemorySource(Matrix features, std::vector<int> labels)
      : features_(std::move(features)), labels_(std::move(labels)) {
    if (features_.rows() != labels_.size()) {
      throw LengthMismatch("InMemorySource: |X| != |y|");
    }
  }

  std::size_t size() const override { return features_.rows(); }
  std::size_t dim() const override { return features_.cols(); }
  const std::vector<int>& labels() const override { return labels_; }

  Matrix load_rows(std::span<const std::size_t> indices, ResidencyAccounting* acct,
                   bool /*for_training*/) override {
    Matrix out(indices.size(), features_.cols(), acct);
    for (std::size_t i = 0; i < indices.size(); ++i) {
      if (indices[i] >= features_.rows()) {
        throw IndexOutOfRange("InMemorySource: row index out of range");
      }
      const double* src = features_.row(indices[i]);
      std::copy(src, src + features_.cols(), out.row(i));
    }
    return out;
  }

  const Matrix& features() const { return features_; }

 private:
  Matrix features_;
  std::vector<int> labels_;
};

}  // namespace daf
