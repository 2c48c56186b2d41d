#include "jointflow/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace jointflow {

SparseOperator::SparseOperator(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), rowStart_(rows + 1, 0) {}

SparseOperator SparseOperator::fromTriplets(std::size_t rows, std::size_t cols,
                                            std::vector<Triplet> triplets, double dropTolerance) {
  for (const auto& t : triplets) {
    if (t.row >= rows || t.col >= cols) throw std::out_of_range("SparseOperator: triplet out of bounds");
  }
  std::stable_sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });

  SparseOperator k(rows, cols);
  k.colIndex_.reserve(triplets.size());
  k.values_.reserve(triplets.size());
  std::vector<std::size_t> counts(rows, 0);
  for (std::size_t a = 0; a < triplets.size();) {
    std::size_t b = a;
    double sum = 0.0;
    while (b < triplets.size() && triplets[b].row == triplets[a].row && triplets[b].col == triplets[a].col) {
      sum += triplets[b].value;
      ++b;
    }
    if (sum != 0.0 && std::abs(sum) >= dropTolerance) {
      k.colIndex_.push_back(triplets[a].col);
      k.values_.push_back(sum);
      ++counts[triplets[a].row];
    }
    a = b;
  }
  for (std::size_t r = 0; r < rows; ++r) k.rowStart_[r + 1] = k.rowStart_[r] + counts[r];
  return k;
}

SparseOperator SparseOperator::identity(std::size_t n) {
  SparseOperator k(n, n);
  k.colIndex_.resize(n);
  k.values_.assign(n, 1.0);
  for (std::size_t r = 0; r < n; ++r) {
    k.colIndex_[r] = r;
    k.rowStart_[r + 1] = r + 1;
  }
  return k;
}

SparseOperator SparseOperator::fromDense(std::size_t rows, std::size_t cols, std::span<const double> dense) {
  if (dense.size() != rows * cols) throw std::invalid_argument("fromDense: size mismatch");
  std::vector<Triplet> t;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      if (dense[r * cols + c] != 0.0) t.push_back({r, c, dense[r * cols + c]});
  return fromTriplets(rows, cols, std::move(t));
}

void SparseOperator::apply(std::span<const double> x, std::span<double> y) const {
  if (x.size() != cols_ || y.size() != rows_) throw std::invalid_argument("SparseOperator::apply: size mismatch");
  for (std::size_t r = 0; r < rows_; ++r) {
    double acc = 0.0;
    for (std::size_t k = rowStart_[r]; k < rowStart_[r + 1]; ++k) acc += values_[k] * x[colIndex_[k]];
    y[r] = acc;
  }
}

void SparseOperator::applyTranspose(std::span<const double> y, std::span<double> x) const {
  if (x.size() != cols_) throw std::invalid_argument("SparseOperator::applyTranspose: size mismatch");
  std::fill(x.begin(), x.end(), 0.0);
  addTransposed(y, x, 1.0);
}

void SparseOperator::addTransposed(std::span<const double> y, std::span<double> x, double scale) const {
  if (x.size() != cols_ || y.size() != rows_) {
    throw std::invalid_argument("SparseOperator::addTransposed: size mismatch");
  }
  for (std::size_t r = 0; r < rows_; ++r) {
    const double yr = scale * y[r];
    if (yr == 0.0) continue;
    for (std::size_t k = rowStart_[r]; k < rowStart_[r + 1]; ++k) x[colIndex_[k]] += values_[k] * yr;
  }
}

std::vector<double> SparseOperator::apply(std::span<const double> x) const {
  std::vector<double> y(rows_);
  apply(x, y);
  return y;
}

std::vector<double> SparseOperator::applyTranspose(std::span<const double> y) const {
  std::vector<double> x(cols_);
  applyTranspose(y, x);
  return x;
}

std::vector<double> SparseOperator::toDense() const {
  std::vector<double> d(rows_ * cols_, 0.0);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t k = rowStart_[r]; k < rowStart_[r + 1]; ++k) d[r * cols_ + colIndex_[k]] = values_[k];
  return d;
}

std::vector<double> SparseOperator::colAbsSums() const {
  std::vector<double> s(cols_, 0.0);
  for (std::size_t k = 0; k < values_.size(); ++k) s[colIndex_[k]] += std::abs(values_[k]);
  return s;
}

std::vector<double> rowAbsSums(const SparseOperator& k) {
  std::vector<double> s(k.rows(), 0.0);
  const auto start = k.rowStart();
  const auto vals = k.values();
  for (std::size_t r = 0; r < k.rows(); ++r)
    for (std::size_t e = start[r]; e < start[r + 1]; ++e) s[r] += std::abs(vals[e]);
  return s;
}

SparseOperator blockDiagonal(const SparseOperator& k, std::size_t count) {
  std::vector<Triplet> t;
  t.reserve(k.nonZeros() * count);
  const auto start = k.rowStart();
  const auto cols = k.colIndex();
  const auto vals = k.values();
  for (std::size_t b = 0; b < count; ++b)
    for (std::size_t r = 0; r < k.rows(); ++r)
      for (std::size_t e = start[r]; e < start[r + 1]; ++e)
        t.push_back({b * k.rows() + r, b * k.cols() + cols[e], vals[e]});
  return SparseOperator::fromTriplets(k.rows() * count, k.cols() * count, std::move(t));
}

}  // namespace jointflow
