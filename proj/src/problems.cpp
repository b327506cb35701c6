#include "qn/problems.hpp"

#include <cmath>
#include <stdexcept>

#include "qn/errors.hpp"

namespace qn {

Vector tridiagonal_apply(const Vector& x) {
  const Eigen::Index n = x.size();
  Vector r(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double v = 2.0 * x[i];
    if (i > 0) v -= x[i - 1];
    if (i + 1 < n) v -= x[i + 1];
    r[i] = v;
  }
  return r;
}

namespace {

Matrix tridiagonal_dense(int n) {
  Matrix a = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    a(i, i) = 2.0;
    if (i > 0) a(i, i - 1) = -1.0;
    if (i + 1 < n) a(i, i + 1) = -1.0;
  }
  return a;
}

void require_dim(const Problem& p, const Vector& x) {
  if (x.size() != p.n) {
    throw std::invalid_argument("problem evaluation: dimension mismatch");
  }
}

}  // namespace

Problem make_problem(ProblemKind kind, int n) {
  if (n < 2) throw std::invalid_argument("make_problem: n >= 2 required");
  Problem p;
  p.n = n;
  if (kind == ProblemKind::P1) {
    p.name = "p1";
    p.f = [](const Vector& x) {
      return 0.5 * x.dot(tridiagonal_apply(x)) - x.sum();
    };
    p.grad = [](const Vector& x) {
      Vector g = tridiagonal_apply(x);
      g.array() -= 1.0;
      return g;
    };
    p.hess = [n](const Vector&) { return tridiagonal_dense(n); };
  } else {
    p.name = "p2";
    const double c = 1.0 / ((n + 1.0) * (n + 1.0));
    p.f = [c](const Vector& x) {
      double extra = 0.0;
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        extra += 2.0 * x[i] + std::cos(x[i]);
      }
      return 0.5 * x.dot(tridiagonal_apply(x)) - x.sum() - c * extra;
    };
    p.grad = [c](const Vector& x) {
      Vector g = tridiagonal_apply(x);
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        g[i] -= 1.0 + c * (2.0 - std::sin(x[i]));
      }
      return g;
    };
    p.hess = [n, c](const Vector& x) {
      Matrix h = tridiagonal_dense(n);
      for (int i = 0; i < n; ++i) h(i, i) += c * std::cos(x[i]);
      return h;
    };
  }
  return p;
}

Evaluation eval(const Problem& p, const Vector& x) {
  require_dim(p, x);
  Evaluation out{p.f(x), p.grad(x)};
  if (!std::isfinite(out.f) || !out.g.allFinite()) {
    throw EvaluationError("objective or gradient is not finite at x");
  }
  return out;
}

}  // namespace qn
