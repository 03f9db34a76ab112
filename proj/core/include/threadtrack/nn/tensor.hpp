#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace threadtrack::nn {

using RealVec = std::vector<double>;

// Row-major dense matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct SparseEntry {
  std::uint32_t index;
  double value;
  friend bool operator==(const SparseEntry&, const SparseEntry&) = default;
};

// Sparse vector with strictly increasing indices. Used for bag-of-words and
// tf-idf inputs.
class SparseVector {
 public:
  SparseVector() = default;
  // Entries may arrive in any order; duplicates are summed, zeros dropped.
  explicit SparseVector(std::vector<SparseEntry> entries);

  std::span<const SparseEntry> entries() const { return entries_; }
  std::size_t nnz() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  // Largest index + 1, or 0 when empty.
  std::size_t min_dim() const {
    return entries_.empty() ? 0 : entries_.back().index + 1;
  }
  double norm() const;
  RealVec to_dense(std::size_t dim) const;

  friend bool operator==(const SparseVector&, const SparseVector&) = default;

 private:
  std::vector<SparseEntry> entries_;
};

double dot(std::span<const double> a, std::span<const double> b);
double dot(const SparseVector& a, const SparseVector& b);
double norm(std::span<const double> a);

// y += W x
void gemv_add(const Matrix& w, std::span<const double> x, std::span<double> y);
void gemv_add(const Matrix& w, const SparseVector& x, std::span<double> y);
// y += W^T d
void gemv_t_add(const Matrix& w, std::span<const double> d, std::span<double> y);
// G += d x^T
void outer_add(Matrix& g, std::span<const double> d, std::span<const double> x);
void outer_add(Matrix& g, std::span<const double> d, const SparseVector& x);
// y += alpha x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

}  // namespace threadtrack::nn
