#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <utility>
#include <vector>

#include "daf/error.hpp"

namespace daf {

/// Counts feature rows concurrently resident in memory. Batch-wise training
/// promises peak residency proportional to the largest subset it loads, not
/// to the training set; this counter is how that promise is audited.
class ResidencyAccounting {
 public:
  void on_alloc(std::size_t rows) {
    const std::size_t now = current_.fetch_add(rows) + rows;
    std::size_t prev = peak_.load();
    while (prev < now && !peak_.compare_exchange_weak(prev, now)) {
    }
  }

  void on_release(std::size_t rows) { current_.fetch_sub(rows); }

  std::size_t current_rows() const { return current_.load(); }
  std::size_t peak_rows() const { return peak_.load(); }

  void reset() {
    current_ = 0;
    peak_ = 0;
  }

 private:
  std::atomic<std::size_t> current_{0};
  std::atomic<std::size_t> peak_{0};
};

/// Dense row-major matrix of doubles. Optionally registers its row count
/// with a ResidencyAccounting while alive (used for batches loaded from a
/// data source; derived matrices such as augmentation columns do not count).
class Matrix {
 public:
  Matrix() = default;

  Matrix(std::size_t rows, std::size_t cols, ResidencyAccounting* acct = nullptr)
      : rows_(rows), cols_(cols), data_(rows * cols, 0.0), acct_(acct) {
    if (acct_) acct_->on_alloc(rows_);
  }

  Matrix(const Matrix& other)
      : rows_(other.rows_), cols_(other.cols_), data_(other.data_), acct_(nullptr) {}

  Matrix& operator=(const Matrix& other) {
    if (this != &other) {
      release();
      rows_ = other.rows_;
      cols_ = other.cols_;
      data_ = other.data_;
      acct_ = nullptr;
    }
    return *this;
  }

  Matrix(Matrix&& other) noexcept { swap(other); }

  Matrix& operator=(Matrix&& other) noexcept {
    if (this != &other) {
      release();
      rows_ = 0;
      cols_ = 0;
      data_.clear();
      acct_ = nullptr;
      swap(other);
    }
    return *this;
  }

  ~Matrix() { release(); }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return rows_ == 0; }

  double& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  double* row(std::size_t r) { return data_.data() + r * cols_; }
  const double* row(std::size_t r) const { return data_.data() + r * cols_; }

  const std::vector<double>& values() const { return data_; }
  std::vector<double>& values() { return data_; }

 private:
  void release() {
    if (acct_) acct_->on_release(rows_);
    acct_ = nullptr;
  }

  void swap(Matrix& other) {
    std::swap(rows_, other.rows_);
    std::swap(cols_, other.cols_);
    std::swap(data_, other.data_);
    std::swap(acct_, other.acct_);
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
  ResidencyAccounting* acct_ = nullptr;
};

/// Read-only view of base features with an optional block of appended
/// columns (the class-vector augmentation of a cascade layer) and an
/// optional row subset. Avoids materializing base-plus-augmentation or
/// fold-subset copies during layer training.
class FeatureView {
 public:
  explicit FeatureView(const Matrix& base, const Matrix* augment = nullptr,
                       const std::vector<std::size_t>* row_subset = nullptr)
      : base_(&base), augment_(augment), rows_(row_subset) {
    if (augment_ && augment_->rows() != base_->rows()) {
      throw DimensionMismatch("augment rows != base rows");
    }
  }

  std::size_t rows() const { return rows_ ? rows_->size() : base_->rows(); }

  std::size_t cols() const {
    return base_->cols() + (augment_ ? augment_->cols() : 0);
  }

  double at(std::size_t r, std::size_t c) const {
    const std::size_t physical = rows_ ? (*rows_)[r] : r;
    const std::size_t base_cols = base_->cols();
    return c < base_cols ? base_->at(physical, c)
                         : augment_->at(physical, c - base_cols);
  }

  /// Copies one logical row into out (sized cols()).
  void copy_row(std::size_t r, double* out) const {
    const std::size_t physical = rows_ ? (*rows_)[r] : r;
    const double* b = base_->row(physical);
    std::copy(b, b + base_->cols(), out);
    if (augment_) {
      const double* a = augment_->row(physical);
      std::copy(a, a + augment_->cols(), out + base_->cols());
    }
  }

 private:
  const Matrix* base_;
  const Matrix* augment_;
  const std::vector<std::size_t>* rows_;
};

}  // namespace daf
