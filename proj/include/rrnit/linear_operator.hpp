#pragma once

#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "rrnit/vector_ops.hpp"

namespace rrnit {

/// Bounded linear operator between finite-dimensional Hilbert spaces,
/// exposed through forward and adjoint applications only. Solvers in this
/// library are matrix-free against this interface.
class LinearOperator {
 public:
  virtual ~LinearOperator() = default;

  virtual std::size_t domain_dim() const = 0;
  virtual std::size_t range_dim() const = 0;

  virtual Vector apply(const Vector& x) const = 0;
  virtual Vector apply_adjoint(const Vector& r) const = 0;

  /// Optional fast path: solve (alpha*I + A*A) x = b exactly, alpha > 0.
  /// Returns false when the operator has no special structure to exploit;
  /// callers then fall back to an iterative solve.
  virtual bool solve_shifted_normal(double /*alpha*/, const Vector& /*b*/,
                                    Vector& /*x*/) const {
    return false;
  }

  /// Row-major dense entries when the operator is naturally a stored matrix;
  /// nullptr otherwise. Lets dense solves skip the column-probing round trip.
  virtual const std::vector<double>* dense_entries() const { return nullptr; }

 protected:
  void check_domain(const Vector& x) const {
    if (x.size() != domain_dim()) {
      throw std::invalid_argument("LinearOperator::apply: domain dimension mismatch");
    }
  }
  void check_range(const Vector& r) const {
    if (r.size() != range_dim()) {
      throw std::invalid_argument("LinearOperator::apply_adjoint: range dimension mismatch");
    }
  }
};

/// Dense row-major matrix operator.
class DenseOperator : public LinearOperator {
 public:
  DenseOperator(std::size_t rows, std::size_t cols, std::vector<double> values)
      : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (rows_ == 0 || cols_ == 0) {
      throw std::invalid_argument("DenseOperator: dimensions must be positive");
    }
    if (values_.size() != rows_ * cols_) {
      throw std::invalid_argument("DenseOperator: values size does not match rows*cols");
    }
  }

  std::size_t domain_dim() const override { return cols_; }
  std::size_t range_dim() const override { return rows_; }

  Vector apply(const Vector& x) const override {
    check_domain(x);
    Vector y(rows_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i) {
      const double* row = values_.data() + i * cols_;
      double s = 0.0;
      for (std::size_t j = 0; j < cols_; ++j) s += row[j] * x[j];
      y[i] = s;
    }
    return y;
  }

  Vector apply_adjoint(const Vector& r) const override {
    check_range(r);
    Vector x(cols_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i) {
      const double* row = values_.data() + i * cols_;
      const double ri = r[i];
      for (std::size_t j = 0; j < cols_; ++j) x[j] += row[j] * ri;
    }
    return x;
  }

  const std::vector<double>* dense_entries() const override { return &values_; }

  double entry(std::size_t i, std::size_t j) const { return values_[i * cols_ + j]; }

 private:
  std::size_t rows_, cols_;
  std::vector<double> values_;
};

/// Hilbert matrix H with H(i, j) = 1 / (i + j - 1) in 1-based indexing.
/// Severely ill-conditioned test operator.
inline DenseOperator hilbert_operator(std::size_t n) {
  if (n == 0) throw std::invalid_argument("hilbert_operator: n must be positive");
  std::vector<double> values(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      values[i * n + j] = 1.0 / static_cast<double>(i + j + 1);
    }
  }
  return DenseOperator(n, n, std::move(values));
}

/// Materialize any operator as a row-major dense matrix by probing with
/// basis vectors. Intended for tests and for the dense solve path on
/// moderate dimensions.
inline std::vector<double> to_dense(const LinearOperator& op) {
  const std::size_t m = op.range_dim();
  const std::size_t n = op.domain_dim();
  if (const std::vector<double>* stored = op.dense_entries()) return *stored;
  std::vector<double> values(m * n, 0.0);
  Vector e(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    e[j] = 1.0;
    const Vector col = op.apply(e);
    e[j] = 0.0;
    for (std::size_t i = 0; i < m; ++i) values[i * n + j] = col[i];
  }
  return values;
}

}  // namespace rrnit
