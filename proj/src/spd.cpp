#include "qn/spd.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace qn {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
// log(DBL_MAX)
constexpr double kLogDetOverflow = 709.78;

void require_dim(int have, int want, const char* what) {
  if (have != want) {
    std::ostringstream os;
    os << what << ": dimension mismatch (" << have << " vs " << want << ")";
    throw std::invalid_argument(os.str());
  }
}

}  // namespace

SpdCholesky SpdCholesky::identity(int n) {
  if (n < 1) throw std::invalid_argument("SpdCholesky: dimension < 1");
  return SpdCholesky(Matrix::Identity(n, n));
}

SpdCholesky SpdCholesky::from_diagonal(const Vector& diag) {
  if (diag.size() < 1) throw std::invalid_argument("SpdCholesky: empty diagonal");
  if (!(diag.minCoeff() > 0.0)) {
    throw NotPositiveDefinite("diagonal entries must be positive");
  }
  Matrix l = Matrix::Zero(diag.size(), diag.size());
  l.diagonal() = diag.array().sqrt();
  return SpdCholesky(std::move(l));
}

SpdCholesky SpdCholesky::from_dense(const Matrix& a) {
  if (a.rows() != a.cols() || a.rows() < 1) {
    throw std::invalid_argument("SpdCholesky: matrix must be square");
  }
  const double scale = a.norm();
  const double asym = (a - a.transpose()).norm();
  if (asym > 1e-8 * (scale > 0 ? scale : 1.0)) {
    throw std::invalid_argument("SpdCholesky: matrix is not symmetric");
  }
  Matrix sym = 0.5 * (a + a.transpose());
  Eigen::LLT<Matrix> llt(sym);
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefinite("Cholesky factorization failed: nonpositive pivot");
  }
  Matrix l = llt.matrixL();
  // Reject numerically singular factors the way a pivot threshold would.
  const double max_diag = sym.diagonal().maxCoeff();
  const double tol = static_cast<double>(a.rows()) * kEps * max_diag;
  const double min_pivot = l.diagonal().minCoeff();
  if (!(min_pivot * min_pivot > tol)) {
    throw NotPositiveDefinite("Cholesky factorization failed: negligible pivot");
  }
  return SpdCholesky(std::move(l));
}

SpdCholesky SpdCholesky::from_factor(Matrix lower) {
  if (lower.rows() != lower.cols() || lower.rows() < 1) {
    throw std::invalid_argument("SpdCholesky: factor must be square");
  }
  if (!(lower.diagonal().minCoeff() > 0.0)) {
    throw NotPositiveDefinite("factor diagonal must be positive");
  }
  return SpdCholesky(std::move(lower));
}

Matrix SpdCholesky::dense() const { return l_ * l_.transpose(); }

Vector SpdCholesky::apply(const Vector& x) const {
  require_dim(static_cast<int>(x.size()), dim(), "apply");
  return l_ * (l_.transpose() * x);
}

Vector SpdCholesky::solve(const Vector& b) const {
  require_dim(static_cast<int>(b.size()), dim(), "solve");
  Vector y = l_.triangularView<Eigen::Lower>().solve(b);
  return l_.transpose().triangularView<Eigen::Upper>().solve(y);
}

Matrix SpdCholesky::solve(const Matrix& b) const {
  require_dim(static_cast<int>(b.rows()), dim(), "solve");
  Matrix y = l_.triangularView<Eigen::Lower>().solve(b);
  return l_.transpose().triangularView<Eigen::Upper>().solve(y);
}

double SpdCholesky::logdet() const {
  return 2.0 * l_.diagonal().array().log().sum();
}

double SpdCholesky::det() const {
  const double ld = logdet();
  if (ld > kLogDetOverflow) {
    throw DetOverflow("det exceeds double range; use logdet");
  }
  return std::exp(ld);
}

// Carlson-style column sweep; see Seeger, "Low Rank Updates for the
// Cholesky Decomposition" (2008).
SpdCholesky SpdCholesky::rank_one_update(const Vector& w) const {
  require_dim(static_cast<int>(w.size()), dim(), "rank_one_update");
  Matrix l = l_;
  Vector v = w;
  const int n = dim();
  for (int j = 0; j < n; ++j) {
    const double ljj = l(j, j);
    const double vj = v(j);
    const double r = std::hypot(ljj, vj);
    const double c = r / ljj;
    const double s = vj / ljj;
    l(j, j) = r;
    const int m = n - j - 1;
    if (m > 0) {
      auto col = l.col(j).tail(m);
      auto vt = v.tail(m);
      col = (col + s * vt) / c;
      vt = c * vt - s * col;
    }
  }
  return SpdCholesky(std::move(l));
}

SpdCholesky SpdCholesky::rank_one_downdate(const Vector& w) const {
  require_dim(static_cast<int>(w.size()), dim(), "rank_one_downdate");
  Matrix l = l_;
  Vector v = w;
  const int n = dim();
  for (int j = 0; j < n; ++j) {
    const double ljj = l(j, j);
    const double vj = v(j);
    const double d2 = (ljj - vj) * (ljj + vj);
    if (!(d2 > 4.0 * kEps * ljj * ljj)) {
      throw DowndateBreakdown("rank-one downdate: nonpositive pivot");
    }
    const double r = std::sqrt(d2);
    const double c = r / ljj;
    const double s = vj / ljj;
    l(j, j) = r;
    const int m = n - j - 1;
    if (m > 0) {
      auto col = l.col(j).tail(m);
      auto vt = v.tail(m);
      col = (col - s * vt) / c;
      vt = c * vt - s * col;
    }
  }
  return SpdCholesky(std::move(l));
}

SpdCholesky SpdCholesky::rank_one_modify(const Vector& w, int sign) const {
  if (sign == 1) return rank_one_update(w);
  if (sign == -1) return rank_one_downdate(w);
  throw std::invalid_argument("rank_one_modify: sign must be +1 or -1");
}

SpdCholesky SpdCholesky::scaled(double c) const {
  if (!(c > 0.0)) throw std::invalid_argument("scaled: factor must be positive");
  return SpdCholesky(std::sqrt(c) * l_);
}

SpdCholesky SpdCholesky::inverse() const {
  const Matrix id = Matrix::Identity(dim(), dim());
  Matrix inv = solve(id);
  inv = 0.5 * (inv + inv.transpose()).eval();
  return from_dense(inv);
}

void write_csv(const SpdCholesky& a, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  const Matrix d = a.dense();
  out << d.rows() << "\n";
  out.precision(17);
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    for (Eigen::Index j = 0; j < d.cols(); ++j) {
      out << d(i, j) << (j + 1 < d.cols() ? "," : "\n");
    }
  }
}

Matrix read_dense_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  int n = 0;
  in >> n;
  if (n < 1) throw std::runtime_error("bad CSV header in " + path);
  Matrix m(n, n);
  std::string line;
  std::getline(in, line);  // rest of header line
  for (int i = 0; i < n; ++i) {
    if (!std::getline(in, line)) throw std::runtime_error("truncated CSV");
    std::istringstream row(line);
    std::string cell;
    for (int j = 0; j < n; ++j) {
      if (!std::getline(row, cell, ',')) throw std::runtime_error("short row");
      m(i, j) = std::stod(cell);
    }
  }
  return m;
}

}  // namespace qn
