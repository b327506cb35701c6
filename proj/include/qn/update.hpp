#pragma once

#include <cmath>
#include <string>

#include "qn/potential.hpp"
#include "qn/spd.hpp"

namespace qn {

// s'y below this relative margin counts as a curvature violation; strict
// positivity is required for the updates to stay positive definite.
constexpr double kCurvatureRelTol = 1e-12;

// Step / gradient-difference pair subject to the curvature condition.
struct SecantPair {
  Vector s;
  Vector y;

  double curvature() const { return s.dot(y); }
  bool curvature_ok(double rel_tol = kCurvatureRelTol) const {
    return curvature() > rel_tol * s.norm() * y.norm();
  }
};

void require_curvature(const Vector& s, const Vector& y);

// B - B s s'B / (s'B s) + y y' / (s'y), as two rank-one factor
// modifications (update by y/sqrt(s'y), then downdate by Bs/sqrt(s'Bs),
// falling back to a dense refactorization if the downdate breaks down).
SpdCholesky bfgs_update(const SpdCholesky& b, const Vector& s, const Vector& y);

// The four-term rank-two update
// B - (B s y' + y s'B)/(s'y) + (s'B s) y y'/(s'y)^2 + y y'/(s'y),
// formed densely and refactorized.
SpdCholesky dfp_update(const SpdCholesky& b, const Vector& s, const Vector& y);

// Root of  log z - (n-1) log nu(z) = log_c  in t = log z. The left side is
// strictly increasing in t with slope 1 - (n-1) beta > 1/n, which both
// guarantees a unique root and bounds it within n*|residual| of any start;
// safeguarded Newton with a bisection fallback finishes the job.
double scale_equation_root_log(double log_c, const Potential& pot, int n);

// Same root in the z domain; throws DetOverflow when exp(root) overflows.
double scale_equation_root(double log_c, const Potential& pot, int n);

struct PotentialUpdate {
  SpdCholesky factor;  // updated matrix
  double theta;        // self-scaling coefficient nu(z*) / nu(det M)
  double log_zstar;    // log det of the updated matrix

  double zstar() const { return std::exp(log_zstar); }
};

// Divergence-minimizing self-scaling update subject to M+ u = v:
//   M+ = theta * BFGS(M; u, v) + (1 - theta) * v v' / (u'v),
// where theta = nu(z*)/nu(det M) and z* solves the scale equation with
// log C = logdet BFGS(M; u, v) - (n-1) log nu(det M). All determinant
// arithmetic stays in the log domain.
PotentialUpdate potential_update(const SpdCholesky& m, const Vector& u,
                                 const Vector& v, const Potential& pot);

enum class FamilyKind { VBfgsB, VDfpB, VBfgsH, VDfpH, Broyden };

// Which variational update is applied and whether the iteration state is a
// Hessian approximation B (direct families) or its inverse H.
class UpdateFamily {
 public:
  static UpdateFamily vbfgs_b(Potential v);
  static UpdateFamily vdfp_b(Potential v);
  static UpdateFamily vbfgs_h(Potential v);
  static UpdateFamily vdfp_h(Potential v);
  static UpdateFamily broyden(double vartheta, Potential v1, Potential v2);
  static UpdateFamily of_kind(FamilyKind kind, Potential v);

  FamilyKind kind() const { return kind_; }
  bool inverse_state() const {
    return kind_ == FamilyKind::VBfgsH || kind_ == FamilyKind::VDfpH;
  }
  const Potential& potential() const { return v1_; }
  const Potential& potential2() const { return v2_; }
  double vartheta() const { return vartheta_; }
  std::string name() const;

 private:
  UpdateFamily(FamilyKind kind, Potential v1, Potential v2, double vartheta)
      : kind_(kind), v1_(std::move(v1)), v2_(std::move(v2)),
        vartheta_(vartheta) {}

  FamilyKind kind_;
  Potential v1_;
  Potential v2_;
  double vartheta_ = 1.0;
};

std::string family_kind_name(FamilyKind kind);

struct FamilyUpdate {
  SpdCholesky state;    // next B, or next H for inverse-state families
  double theta;         // primal self-scaling coefficient (NaN for Broyden)
  double log_det_next;  // logdet of the returned state
};

// Dispatch:
//   VBfgsB: potential_update(B, s, y)
//   VDfpH:  potential_update(H, y, s)
//   VDfpB:  inverse of potential_update(B^-1, y, s)
//   VBfgsH: inverse of potential_update(H^-1, s, y)
//   Broyden(t, V1, V2): t * VBfgsB(V1) + (1-t) * VDfpB(V2), refactorized
FamilyUpdate family_update(const UpdateFamily& family, const SpdCholesky& state,
                           const SecantPair& pair);

}  // namespace qn
