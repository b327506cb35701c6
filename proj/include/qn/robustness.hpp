#pragma once

#include <cstdint>
#include <vector>

#include "qn/potential.hpp"
#include "qn/spd.hpp"
#include "qn/update.hpp"

namespace qn {

// First derivative at eps = 0 of the update solving
//   min D_V(B, B_k)  s.t.  B (s + eps sbar) = y + eps ybar,
// evaluated in closed form. The sensitivity coefficient
// beta / (1 - (n-1) beta) and the scaling ratio nu(det B(0)) / nu(det B_k)
// are computed in the log domain. The result is symmetric by construction.
Matrix delta_influence(const SpdCholesky& b_k, const Vector& s,
                       const Vector& sbar, const Vector& y, const Vector& ybar,
                       const Potential& pot);

// Influence of the dual problem min D_V(B^{-1}, B_k^{-1}) under the same
// perturbed constraint:  -B(0) * delta(B_k^{-1}; v, vbar, u, ubar) * B(0),
// with B(0) obtained through the inverse route.
Matrix gamma_influence(const SpdCholesky& m_k, const Vector& u,
                       const Vector& ubar, const Vector& v, const Vector& vbar,
                       const Potential& pot);

// Influence of the given family under the inexact line-search perturbation
// ((1+eps) s, y + eps ybar). For the inverse-state families m_k is H_k and
// the constraint is H (y + eps ybar) = (1 + eps) s. Broyden has no closed
// form and raises UnsupportedFamily.
Matrix family_influence(const UpdateFamily& family, const SpdCholesky& m_k,
                        const Vector& s, const Vector& y, const Vector& ybar,
                        const Potential& pot);
Matrix family_influence(const UpdateFamily& family, const SpdCholesky& m_k,
                        const Vector& s, const Vector& y, const Vector& ybar);

struct PerturbedUpdate {
  SpdCholesky perturbed;  // M(eps)
  double approx_if;       // ||(M(eps) - M(0)) / eps||_F
};

// Finite-difference probe: updates m_k with the nominal pair and with
// ((1+eps) s, y + eps ybar), and reports the scaled difference norm.
// eps must be nonzero and the perturbed pair must satisfy the curvature
// condition.
PerturbedUpdate perturbed_update(const UpdateFamily& family,
                                 const SpdCholesky& m_k, const Vector& s,
                                 const Vector& y, const Vector& ybar,
                                 double eps);

enum class AdversarialKind { FixedDetUnbounded, GrowingSpike, UniformScaling };

struct AdversarialParams {
  double d = 1.0;               // fixed determinant (FixedDetUnbounded)
  std::vector<double> values;   // a / spike / scaling parameters
  std::uint64_t seed = 0;
};

// Sequences of SPD matrices along which influence norms are probed:
//   FixedDetUnbounded: M(a) = S (I + a p1 p1' + b p2 p2') S with
//     S = sqrt(BFGS(I; u, v)), p1, p2 orthonormal and orthogonal to S u and
//     to S w for every w in `preserve`, and b chosen so det M(a) = d.
//     Every element satisfies M(a) u = v while ||M(a)||_F grows without
//     bound.
//   GrowingSpike: M_i = S (I + value_i p1 p1') S, same base and p1.
//   UniformScaling: c * Bbar for a seeded well-conditioned Bbar that does
//     not satisfy the secant constraint.
std::vector<SpdCholesky> adversarial_sequence(AdversarialKind kind,
                                              const Vector& u, const Vector& v,
                                              const std::vector<Vector>& preserve,
                                              const AdversarialParams& params);

// Symmetric S with S * S = A, by symmetric eigendecomposition.
Matrix matrix_square_root(const SpdCholesky& a);

}  // namespace qn
