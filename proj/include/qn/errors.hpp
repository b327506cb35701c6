#pragma once

#include <stdexcept>
#include <string>

namespace qn {

// Base class for numerical failures raised by the library. Usage errors
// (bad arguments, dimension mismatches) throw std::invalid_argument or
// std::domain_error instead.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Cholesky factorization hit a nonpositive (or negligible) pivot.
struct NotPositiveDefinite : Error {
  using Error::Error;
};

// Sequential rank-one downdate lost positive definiteness; callers fall
// back to forming the matrix densely and refactorizing.
struct DowndateBreakdown : Error {
  using Error::Error;
};

// exp(logdet) exceeds the double range; use logdet arithmetic instead.
struct DetOverflow : Error {
  using Error::Error;
};

// Secant pair with s'y <= 0 (up to a small relative margin).
struct CurvatureViolation : Error {
  using Error::Error;
};

// Iterative scalar solve failed to meet its residual target.
struct NonConvergence : Error {
  using Error::Error;
};

// Objective or gradient evaluated to a non-finite value.
struct EvaluationError : Error {
  using Error::Error;
};

// Operation not defined for the requested update family.
struct UnsupportedFamily : Error {
  using Error::Error;
};

}  // namespace qn
