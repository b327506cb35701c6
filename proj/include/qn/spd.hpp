#pragma once

#include <Eigen/Dense>
#include <string>

#include "qn/errors.hpp"

namespace qn {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Dense symmetric positive definite matrix held as its lower-triangular
// Cholesky factor L with L L^T equal to the represented matrix. Operations
// return new values; a factor is immutable once built, so instances can be
// shared freely across threads.
class SpdCholesky {
 public:
  static SpdCholesky identity(int n);
  static SpdCholesky from_diagonal(const Vector& diag);

  // Factorizes a symmetric positive definite matrix. Throws
  // NotPositiveDefinite when a pivot falls below n * eps * max(diag);
  // throws std::invalid_argument for visibly asymmetric input.
  static SpdCholesky from_dense(const Matrix& a);

  // Adopts a lower-triangular factor as-is (diagonal must be positive).
  static SpdCholesky from_factor(Matrix lower);

  int dim() const { return static_cast<int>(l_.rows()); }
  const Matrix& factor() const { return l_; }

  Matrix dense() const;                 // L L^T
  Vector apply(const Vector& x) const;  // (L L^T) x
  Vector solve(const Vector& b) const;
  Matrix solve(const Matrix& b) const;

  double logdet() const;  // 2 sum log L_ii
  double det() const;     // throws DetOverflow when exp(logdet) overflows

  // Factor of A + w w^T (Givens-style sequential update).
  SpdCholesky rank_one_update(const Vector& w) const;

  // Factor of A - w w^T via hyperbolic rotations; throws DowndateBreakdown
  // when a pivot would become nonpositive. Callers needing the subtraction
  // unconditionally refactorize the densely formed matrix on breakdown.
  SpdCholesky rank_one_downdate(const Vector& w) const;

  SpdCholesky rank_one_modify(const Vector& w, int sign) const;

  SpdCholesky scaled(double c) const;  // c * A for c > 0
  SpdCholesky inverse() const;

 private:
  explicit SpdCholesky(Matrix l) : l_(std::move(l)) {}
  Matrix l_;
};

// Debug serialization: first line is the dimension, then dense rows of
// comma-separated values. Not a stability guarantee.
void write_csv(const SpdCholesky& a, const std::string& path);
Matrix read_dense_csv(const std::string& path);

}  // namespace qn
