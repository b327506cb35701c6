#pragma once

#include <functional>
#include <string>

#include "qn/spd.hpp"

namespace qn {

// Objective with analytic gradient; the Hessian callback is optional and
// used only for verification.
struct Problem {
  std::string name;
  int n = 0;
  std::function<double(const Vector&)> f;
  std::function<Vector(const Vector&)> grad;
  std::function<Matrix(const Vector&)> hess;
};

enum class ProblemKind { P1, P2 };

// P1: f(x) = x'Ax/2 - e'x with A tridiagonal (2 on the diagonal, -1 off).
// P2: adds -(1/(n+1)^2) sum_i (2 x_i + cos x_i); nonconvex.
// A is applied as a stencil, never stored densely, for f and grad.
Problem make_problem(ProblemKind kind, int n);

struct Evaluation {
  double f;
  Vector g;
};

// Throws EvaluationError on non-finite results.
Evaluation eval(const Problem& p, const Vector& x);

// (A x) for the tridiagonal stencil above; exposed for tests.
Vector tridiagonal_apply(const Vector& x);

}  // namespace qn
