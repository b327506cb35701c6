#include "qn/robustness.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "qn/errors.hpp"
#include "qn/rng.hpp"

namespace qn {

namespace {

// Core of the delta influence given the already-computed unperturbed
// update B(0) and its self-scaling coefficient theta.
Matrix delta_core(const SpdCholesky& b_k, const Vector& s, const Vector& sbar,
                  const Vector& y, const Vector& ybar, const Potential& pot,
                  const PotentialUpdate& b0) {
  const int n = b_k.dim();
  const double tau = s.dot(y);
  const double theta = b0.theta;
  const double beta = pot.beta_at_log(b0.log_zstar);
  const double kappa = beta / (1.0 - (n - 1) * beta);

  const Vector p = b_k.apply(s);     // B_k s
  const Vector q = b_k.apply(sbar);  // B_k sbar
  const double sbs = s.dot(p);
  const Vector w = b0.factor.solve(p);  // B(0)^{-1} B_k s

  const double scalar =
      (s.dot(ybar) - sbar.dot(y)) / tau +
      theta * (2.0 * sbar.dot(p) * p.dot(w) / (sbs * sbs) -
               2.0 * q.dot(w) / sbs);

  Matrix out = scalar * kappa *
               (b0.factor.dense() - (y * y.transpose()) / tau);
  out += (y * ybar.transpose() + ybar * y.transpose()) / tau;
  out -= (s.dot(ybar) + sbar.dot(y)) / (tau * tau) * (y * y.transpose());
  out += theta * (2.0 * sbar.dot(p) / (sbs * sbs) * (p * p.transpose()) -
                  (p * q.transpose() + q * p.transpose()) / sbs);
  return out;
}

void require_probe_dims(const SpdCholesky& m, const Vector& a, const Vector& b,
                        const Vector& c) {
  if (a.size() != m.dim() || b.size() != m.dim() || c.size() != m.dim()) {
    throw std::invalid_argument("influence probe: dimension mismatch");
  }
}

// Orthonormal vectors spanning directions orthogonal to `against`,
// built by Gram-Schmidt over seeded random draws.
std::vector<Vector> orthonormal_complement(const std::vector<Vector>& against,
                                           int count, int n,
                                           std::uint64_t seed) {
  std::vector<Vector> basis;
  for (const Vector& v : against) {
    Vector u = v;
    for (const Vector& b : basis) u -= b.dot(u) * b;
    const double norm = u.norm();
    if (norm > 1e-12 * v.norm()) basis.push_back(u / norm);
  }
  if (static_cast<int>(basis.size()) + count > n) {
    throw std::invalid_argument(
        "adversarial sequence: dimension too small for the orthogonality "
        "construction");
  }
  Rng rng(derive_seed(seed, {0x6f727468ull}));
  std::vector<Vector> out;
  int attempts = 0;
  while (static_cast<int>(out.size()) < count) {
    if (++attempts > 64 * count) {
      throw Error("adversarial sequence: no orthogonal complement available");
    }
    Vector u = rng.gaussian_vector(n);
    for (const Vector& b : basis) u -= b.dot(u) * b;
    for (const Vector& b : out) u -= b.dot(u) * b;
    const double norm = u.norm();
    if (norm <= 1e-8) continue;
    out.push_back(u / norm);
  }
  return out;
}

}  // namespace

Matrix delta_influence(const SpdCholesky& b_k, const Vector& s,
                       const Vector& sbar, const Vector& y, const Vector& ybar,
                       const Potential& pot) {
  require_probe_dims(b_k, s, y, ybar);
  require_curvature(s, y);
  const PotentialUpdate b0 = potential_update(b_k, s, y, pot);
  return delta_core(b_k, s, sbar, y, ybar, pot, b0);
}

Matrix gamma_influence(const SpdCholesky& m_k, const Vector& u,
                       const Vector& ubar, const Vector& v, const Vector& vbar,
                       const Potential& pot) {
  require_probe_dims(m_k, u, v, vbar);
  require_curvature(u, v);
  const SpdCholesky h_k = m_k.inverse();
  // H(0) solves the direct problem on the inverse; B(0) is its inverse.
  const PotentialUpdate h0 = potential_update(h_k, v, u, pot);
  const Matrix inner = delta_core(h_k, v, vbar, u, ubar, pot, h0);
  const Matrix b0 = h0.factor.inverse().dense();
  Matrix out = -b0 * inner * b0;
  return 0.5 * (out + out.transpose()).eval();
}

Matrix family_influence(const UpdateFamily& family, const SpdCholesky& m_k,
                        const Vector& s, const Vector& y, const Vector& ybar,
                        const Potential& pot) {
  switch (family.kind()) {
    case FamilyKind::VBfgsB:
      return delta_influence(m_k, s, s, y, ybar, pot);
    case FamilyKind::VDfpB:
      return gamma_influence(m_k, s, s, y, ybar, pot);
    case FamilyKind::VBfgsH:
      return gamma_influence(m_k, y, ybar, s, s, pot);
    case FamilyKind::VDfpH:
      return delta_influence(m_k, y, ybar, s, s, pot);
    case FamilyKind::Broyden:
      break;
  }
  throw UnsupportedFamily(
      "no closed-form influence for the Broyden combination");
}

Matrix family_influence(const UpdateFamily& family, const SpdCholesky& m_k,
                        const Vector& s, const Vector& y, const Vector& ybar) {
  return family_influence(family, m_k, s, y, ybar, family.potential());
}

PerturbedUpdate perturbed_update(const UpdateFamily& family,
                                 const SpdCholesky& m_k, const Vector& s,
                                 const Vector& y, const Vector& ybar,
                                 double eps) {
  if (eps == 0.0) {
    throw std::invalid_argument("perturbed_update: eps must be nonzero");
  }
  require_probe_dims(m_k, s, y, ybar);
  const SecantPair nominal{s, y};
  const SecantPair perturbed{(1.0 + eps) * s, y + eps * ybar};
  require_curvature(perturbed.s, perturbed.y);
  FamilyUpdate m0 = family_update(family, m_k, nominal);
  FamilyUpdate me = family_update(family, m_k, perturbed);
  const double approx =
      (me.state.dense() - m0.state.dense()).norm() / std::abs(eps);
  return {std::move(me.state), approx};
}

std::vector<SpdCholesky> adversarial_sequence(
    AdversarialKind kind, const Vector& u, const Vector& v,
    const std::vector<Vector>& preserve, const AdversarialParams& params) {
  if (u.size() != v.size()) {
    throw std::invalid_argument("adversarial sequence: dimension mismatch");
  }
  require_curvature(u, v);
  if (params.values.empty()) {
    throw std::invalid_argument("adversarial sequence: no parameter values");
  }
  const int n = static_cast<int>(u.size());
  std::vector<SpdCholesky> seq;
  seq.reserve(params.values.size());

  if (kind == AdversarialKind::UniformScaling) {
    // Well-conditioned seeded base; its image of u is generically
    // independent of v, which is what the scaling probe needs.
    Rng rng(derive_seed(params.seed, {0x7363616cull}));
    Matrix g(n, n);
    for (int i = 0; i < n; ++i) g.row(i) = rng.gaussian_vector(n).transpose();
    Matrix base = Matrix::Identity(n, n) + (g * g.transpose()) / n;
    SpdCholesky bbar = SpdCholesky::from_dense(base);
    for (double c : params.values) {
      if (!(c > 0.0)) {
        throw std::invalid_argument("uniform scaling needs positive factors");
      }
      seq.push_back(bbar.scaled(c));
    }
    return seq;
  }

  const SpdCholesky bbar = bfgs_update(SpdCholesky::identity(n), u, v);
  const Matrix sqrt_b = matrix_square_root(bbar);

  std::vector<Vector> against;
  against.push_back(sqrt_b * u);
  for (const Vector& w : preserve) {
    if (w.size() != n) {
      throw std::invalid_argument("adversarial sequence: preserve dimension");
    }
    against.push_back(sqrt_b * w);
  }
  const int needed = kind == AdversarialKind::FixedDetUnbounded ? 2 : 1;
  // The construction needs |preserve| + 3 dimensions to leave room for the
  // orthogonal directions.
  if (n < static_cast<int>(preserve.size()) + 3) {
    throw std::invalid_argument(
        "adversarial sequence: dimension too small (need |preserve| + 3)");
  }
  const auto ps = orthonormal_complement(against, needed, n, params.seed);

  if (kind == AdversarialKind::FixedDetUnbounded) {
    if (!(params.d > 0.0)) {
      throw std::invalid_argument("fixed-det sequence needs d > 0");
    }
    const double log_det_bbar = bbar.logdet();
    const Matrix p1 = ps[0] * ps[0].transpose();
    const Matrix p2 = ps[1] * ps[1].transpose();
    for (double a : params.values) {
      if (!(a > 0.0)) {
        throw std::invalid_argument("fixed-det sequence needs a > 0");
      }
      const double b =
          std::exp(std::log(params.d) - log_det_bbar) / (1.0 + a) - 1.0;
      Matrix m = sqrt_b * (Matrix::Identity(n, n) + a * p1 + b * p2) * sqrt_b;
      seq.push_back(SpdCholesky::from_dense(0.5 * (m + m.transpose())));
    }
  } else {  // GrowingSpike
    const Matrix p1 = ps[0] * ps[0].transpose();
    for (double a : params.values) {
      if (!(a >= 0.0)) {
        throw std::invalid_argument("growing-spike sequence needs a >= 0");
      }
      Matrix m = sqrt_b * (Matrix::Identity(n, n) + a * p1) * sqrt_b;
      seq.push_back(SpdCholesky::from_dense(0.5 * (m + m.transpose())));
    }
  }
  return seq;
}

Matrix matrix_square_root(const SpdCholesky& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a.dense());
  if (es.info() != Eigen::Success) {
    throw Error("matrix square root: eigendecomposition failed");
  }
  const Vector roots = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  Matrix s = es.eigenvectors() * roots.asDiagonal() *
             es.eigenvectors().transpose();
  return 0.5 * (s + s.transpose()).eval();
}

}  // namespace qn
