#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace jointflow {

struct Triplet {
  std::size_t row;
  std::size_t col;
  double value;
};

/// Row-compressed sparse matrix. Column indices are strictly increasing within each row.
class SparseOperator {
 public:
  SparseOperator() = default;
  /// All-zero operator.
  SparseOperator(std::size_t rows, std::size_t cols);

  /// Duplicate (row, col) entries are summed; entries with |value| < dropTolerance after
  /// summation are omitted.
  static SparseOperator fromTriplets(std::size_t rows, std::size_t cols, std::vector<Triplet> triplets,
                                     double dropTolerance = 0.0);
  static SparseOperator identity(std::size_t n);
  static SparseOperator fromDense(std::size_t rows, std::size_t cols, std::span<const double> dense);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t nonZeros() const { return values_.size(); }

  std::span<const std::size_t> rowStart() const { return rowStart_; }
  std::span<const std::size_t> colIndex() const { return colIndex_; }
  std::span<const double> values() const { return values_; }

  std::size_t rowNonZeros(std::size_t r) const { return rowStart_[r + 1] - rowStart_[r]; }

  /// y = K x
  void apply(std::span<const double> x, std::span<double> y) const;
  /// x = K^T y
  void applyTranspose(std::span<const double> y, std::span<double> x) const;
  /// x += scale * K^T y
  void addTransposed(std::span<const double> y, std::span<double> x, double scale = 1.0) const;

  std::vector<double> apply(std::span<const double> x) const;
  std::vector<double> applyTranspose(std::span<const double> y) const;

  std::vector<double> toDense() const;
  std::vector<double> colAbsSums() const;

  friend bool operator==(const SparseOperator&, const SparseOperator&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> rowStart_{0};
  std::vector<std::size_t> colIndex_;
  std::vector<double> values_;
};

/// Per-row sum of absolute entries; diagonal preconditioners use it as ||K_i||_1.
std::vector<double> rowAbsSums(const SparseOperator& k);

/// diag(k, ..., k) with `count` copies.
SparseOperator blockDiagonal(const SparseOperator& k, std::size_t count);

}  // namespace jointflow
