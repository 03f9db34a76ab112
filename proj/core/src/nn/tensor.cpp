#include "threadtrack/nn/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "threadtrack/error.hpp"

namespace threadtrack::nn {

SparseVector::SparseVector(std::vector<SparseEntry> entries) {
  std::sort(entries.begin(), entries.end(),
            [](const SparseEntry& a, const SparseEntry& b) { return a.index < b.index; });
  for (const auto& e : entries) {
    if (!entries_.empty() && entries_.back().index == e.index) {
      entries_.back().value += e.value;
    } else {
      entries_.push_back(e);
    }
  }
  std::erase_if(entries_, [](const SparseEntry& e) { return e.value == 0.0; });
}

double SparseVector::norm() const {
  double s = 0.0;
  for (const auto& e : entries_) s += e.value * e.value;
  return std::sqrt(s);
}

RealVec SparseVector::to_dense(std::size_t dim) const {
  if (min_dim() > dim) throw DimensionError("sparse vector index exceeds dense dimension");
  RealVec out(dim, 0.0);
  for (const auto& e : entries_) out[e.index] = e.value;
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double dot(const SparseVector& a, const SparseVector& b) {
  auto ea = a.entries();
  auto eb = b.entries();
  double s = 0.0;
  std::size_t i = 0, j = 0;
  while (i < ea.size() && j < eb.size()) {
    if (ea[i].index == eb[j].index) {
      s += ea[i].value * eb[j].value;
      ++i;
      ++j;
    } else if (ea[i].index < eb[j].index) {
      ++i;
    } else {
      ++j;
    }
  }
  return s;
}

double norm(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return std::sqrt(s);
}

void gemv_add(const Matrix& w, std::span<const double> x, std::span<double> y) {
  if (x.size() != w.cols() || y.size() != w.rows()) throw DimensionError("gemv: shape mismatch");
  for (std::size_t r = 0; r < w.rows(); ++r) {
    const double* row = w.row(r).data();
    double s = 0.0;
    for (std::size_t c = 0; c < x.size(); ++c) s += row[c] * x[c];
    y[r] += s;
  }
}

void gemv_add(const Matrix& w, const SparseVector& x, std::span<double> y) {
  if (x.min_dim() > w.cols() || y.size() != w.rows()) {
    throw DimensionError("gemv: sparse input exceeds layer input dimension");
  }
  for (std::size_t r = 0; r < w.rows(); ++r) {
    const double* row = w.row(r).data();
    double s = 0.0;
    for (const auto& e : x.entries()) s += row[e.index] * e.value;
    y[r] += s;
  }
}

void gemv_t_add(const Matrix& w, std::span<const double> d, std::span<double> y) {
  if (d.size() != w.rows() || y.size() != w.cols()) throw DimensionError("gemv_t: shape mismatch");
  for (std::size_t r = 0; r < w.rows(); ++r) {
    if (d[r] == 0.0) continue;
    const double* row = w.row(r).data();
    for (std::size_t c = 0; c < y.size(); ++c) y[c] += row[c] * d[r];
  }
}

void outer_add(Matrix& g, std::span<const double> d, std::span<const double> x) {
  if (d.size() != g.rows() || x.size() != g.cols()) throw DimensionError("outer: shape mismatch");
  for (std::size_t r = 0; r < g.rows(); ++r) {
    if (d[r] == 0.0) continue;
    double* row = g.row(r).data();
    for (std::size_t c = 0; c < x.size(); ++c) row[c] += d[r] * x[c];
  }
}

void outer_add(Matrix& g, std::span<const double> d, const SparseVector& x) {
  if (d.size() != g.rows() || x.min_dim() > g.cols()) throw DimensionError("outer: shape mismatch");
  for (std::size_t r = 0; r < g.rows(); ++r) {
    if (d[r] == 0.0) continue;
    double* row = g.row(r).data();
    for (const auto& e : x.entries()) row[e.index] += d[r] * e.value;
  }
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size()) throw DimensionError("axpy: length mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

}  // namespace threadtrack::nn
