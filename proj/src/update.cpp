#include "qn/update.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "qn/errors.hpp"

namespace qn {

namespace {

constexpr double kLogDetOverflow = 709.78;

Matrix symmetrized(Matrix m) {
  return 0.5 * (m + m.transpose()).eval();
}

}  // namespace

void require_curvature(const Vector& s, const Vector& y) {
  if (s.size() != y.size()) {
    throw std::invalid_argument("secant pair: dimension mismatch");
  }
  const double sy = s.dot(y);
  if (!(sy > kCurvatureRelTol * s.norm() * y.norm())) {
    std::ostringstream os;
    os << "curvature condition violated: s'y = " << sy;
    throw CurvatureViolation(os.str());
  }
}

SpdCholesky bfgs_update(const SpdCholesky& b, const Vector& s,
                        const Vector& y) {
  require_curvature(s, y);
  const double sy = s.dot(y);
  const Vector bs = b.apply(s);
  const double sbs = s.dot(bs);
  const Vector up = y / std::sqrt(sy);
  const Vector down = bs / std::sqrt(sbs);
  try {
    return b.rank_one_update(up).rank_one_downdate(down);
  } catch (const DowndateBreakdown&) {
    Matrix d = b.dense();
    d += up * up.transpose();
    d -= down * down.transpose();
    return SpdCholesky::from_dense(symmetrized(std::move(d)));
  }
}

SpdCholesky dfp_update(const SpdCholesky& b, const Vector& s,
                       const Vector& y) {
  require_curvature(s, y);
  const double sy = s.dot(y);
  const Vector bs = b.apply(s);
  const double sbs = s.dot(bs);
  Matrix d = b.dense();
  d -= (bs * y.transpose() + y * bs.transpose()) / sy;
  d += (sbs / (sy * sy) + 1.0 / sy) * (y * y.transpose());
  return SpdCholesky::from_dense(symmetrized(std::move(d)));
}

double scale_equation_root_log(double log_c, const Potential& pot, int n) {
  if (!std::isfinite(log_c)) {
    throw std::invalid_argument("scale equation: log C must be finite");
  }
  if (n < 1) throw std::invalid_argument("scale equation: dimension < 1");

  const double m = static_cast<double>(n - 1);
  auto g = [&](double t) { return t - m * pot.log_nu_at_log(t) - log_c; };
  auto gp = [&](double t) { return 1.0 - m * pot.beta_at_log(t); };

  double t = log_c;
  double gt = g(t);
  if (gt == 0.0) return t;

  // Slope >= 1/n localizes the root within n*|g(t)| of t.
  double lo, hi;
  if (gt > 0.0) {
    hi = t;
    lo = t - n * gt;
  } else {
    lo = t;
    hi = t - n * gt;
  }
  for (int guard = 0; g(lo) > 0.0 && guard < 64; ++guard) {
    lo -= std::max(1.0, 0.5 * (hi - lo));
  }
  for (int guard = 0; g(hi) < 0.0 && guard < 64; ++guard) {
    hi += std::max(1.0, 0.5 * (hi - lo));
  }

  const double scale = std::max({1.0, std::abs(log_c), std::abs(t)});
  const double tol = 1e-13 +
                     4.0 * std::numeric_limits<double>::epsilon() * scale;
  for (int iter = 0; iter < 200; ++iter) {
    gt = g(t);
    if (std::abs(gt) <= tol) return t;
    if (gt > 0.0) {
      hi = t;
    } else {
      lo = t;
    }
    const double slope = gp(t);
    double next = t - gt / slope;
    if (!std::isfinite(next) || next <= lo || next >= hi) {
      next = 0.5 * (lo + hi);
    }
    if (next == t) {
      next = 0.5 * (lo + hi);
      if (next == t) return t;  // bracket collapsed to one representable value
    }
    t = next;
  }
  if (std::abs(g(t)) <= 1e6 * tol) return t;  // stagnated but essentially there
  std::ostringstream os;
  os << "scale equation did not converge: logC=" << log_c << " n=" << n
     << " t=" << t << " residual=" << g(t);
  throw NonConvergence(os.str());
}

double scale_equation_root(double log_c, const Potential& pot, int n) {
  const double t = scale_equation_root_log(log_c, pot, n);
  if (t > kLogDetOverflow) {
    throw DetOverflow("scale equation root exceeds double range");
  }
  return std::exp(t);
}

PotentialUpdate potential_update(const SpdCholesky& m, const Vector& u,
                                 const Vector& v, const Potential& pot) {
  require_curvature(u, v);
  const int n = m.dim();
  SpdCholesky bar = bfgs_update(m, u, v);
  const double ld_k = m.logdet();
  const double log_nu_k = pot.log_nu_at_log(ld_k);
  const double log_c = bar.logdet() - (n - 1) * log_nu_k;
  const double t_star = scale_equation_root_log(log_c, pot, n);
  const double theta = std::exp(pot.log_nu_at_log(t_star) - log_nu_k);

  if (theta == 1.0) return {std::move(bar), 1.0, t_star};

  const double uv = u.dot(v);
  const double coef = (1.0 - theta) / uv;
  const Vector w = v * std::sqrt(std::abs(coef));
  SpdCholesky scaled = bar.scaled(theta);
  try {
    SpdCholesky next =
        coef >= 0.0 ? scaled.rank_one_update(w) : scaled.rank_one_downdate(w);
    return {std::move(next), theta, t_star};
  } catch (const DowndateBreakdown&) {
    Matrix d = theta * bar.dense();
    d += (1.0 - theta) / uv * (v * v.transpose());
    return {SpdCholesky::from_dense(symmetrized(std::move(d))), theta, t_star};
  }
}

UpdateFamily UpdateFamily::vbfgs_b(Potential v) {
  return UpdateFamily(FamilyKind::VBfgsB, v, v, 1.0);
}
UpdateFamily UpdateFamily::vdfp_b(Potential v) {
  return UpdateFamily(FamilyKind::VDfpB, v, v, 1.0);
}
UpdateFamily UpdateFamily::vbfgs_h(Potential v) {
  return UpdateFamily(FamilyKind::VBfgsH, v, v, 1.0);
}
UpdateFamily UpdateFamily::vdfp_h(Potential v) {
  return UpdateFamily(FamilyKind::VDfpH, v, v, 1.0);
}

UpdateFamily UpdateFamily::broyden(double vartheta, Potential v1,
                                   Potential v2) {
  if (!(vartheta >= 0.0 && vartheta <= 1.0)) {
    throw std::invalid_argument("broyden mixing weight must lie in [0, 1]");
  }
  return UpdateFamily(FamilyKind::Broyden, std::move(v1), std::move(v2),
                      vartheta);
}

UpdateFamily UpdateFamily::of_kind(FamilyKind kind, Potential v) {
  switch (kind) {
    case FamilyKind::VBfgsB:
      return vbfgs_b(std::move(v));
    case FamilyKind::VDfpB:
      return vdfp_b(std::move(v));
    case FamilyKind::VBfgsH:
      return vbfgs_h(std::move(v));
    case FamilyKind::VDfpH:
      return vdfp_h(std::move(v));
    case FamilyKind::Broyden:
      break;
  }
  throw std::invalid_argument("of_kind: broyden needs two potentials");
}

std::string family_kind_name(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::VBfgsB:
      return "vbfgs-b";
    case FamilyKind::VDfpB:
      return "vdfp-b";
    case FamilyKind::VBfgsH:
      return "vbfgs-h";
    case FamilyKind::VDfpH:
      return "vdfp-h";
    case FamilyKind::Broyden:
      return "broyden";
  }
  return "";
}

std::string UpdateFamily::name() const {
  if (kind_ == FamilyKind::Broyden) {
    std::ostringstream os;
    os << "broyden:theta=" << vartheta_ << ",v1=" << v1_.name()
       << ",v2=" << v2_.name();
    return os.str();
  }
  return family_kind_name(kind_) + "(" + v1_.name() + ")";
}

FamilyUpdate family_update(const UpdateFamily& family,
                           const SpdCholesky& state, const SecantPair& pair) {
  switch (family.kind()) {
    case FamilyKind::VBfgsB: {
      auto r = potential_update(state, pair.s, pair.y, family.potential());
      return {std::move(r.factor), r.theta, r.log_zstar};
    }
    case FamilyKind::VDfpH: {
      auto r = potential_update(state, pair.y, pair.s, family.potential());
      return {std::move(r.factor), r.theta, r.log_zstar};
    }
    case FamilyKind::VDfpB: {
      auto r = potential_update(state.inverse(), pair.y, pair.s,
                                family.potential());
      return {r.factor.inverse(), r.theta, -r.log_zstar};
    }
    case FamilyKind::VBfgsH: {
      auto r = potential_update(state.inverse(), pair.s, pair.y,
                                family.potential());
      return {r.factor.inverse(), r.theta, -r.log_zstar};
    }
    case FamilyKind::Broyden: {
      const double t = family.vartheta();
      auto bfgs_side = UpdateFamily::vbfgs_b(family.potential());
      auto dfp_side = UpdateFamily::vdfp_b(family.potential2());
      if (t == 1.0) return family_update(bfgs_side, state, pair);
      if (t == 0.0) return family_update(dfp_side, state, pair);
      auto fb = family_update(bfgs_side, state, pair);
      auto fd = family_update(dfp_side, state, pair);
      Matrix mix = t * fb.state.dense() + (1.0 - t) * fd.state.dense();
      SpdCholesky next = SpdCholesky::from_dense(symmetrized(std::move(mix)));
      const double ld = next.logdet();
      return {std::move(next), std::numeric_limits<double>::quiet_NaN(), ld};
    }
  }
  throw std::logic_error("unreachable family kind");
}

}  // namespace qn
