#include "qn/linesearch.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace qn {

namespace {

constexpr double kBracketCap = 1073741824.0;  // 2^30

// Cubic interpolation of a minimizer from values and derivatives at two
// points (Nocedal & Wright, eq. 3.59); falls back to the midpoint when the
// cubic is degenerate.
double cubic_min(double a, double fa, double da, double b, double fb,
                 double db) {
  const double h = b - a;
  if (h == 0.0) return a;
  const double d1 = da + db - 3.0 * (fa - fb) / (a - b);
  const double disc = d1 * d1 - da * db;
  if (disc < 0.0) return 0.5 * (a + b);
  const double d2 = std::copysign(std::sqrt(disc), h);
  const double t = b - h * ((db + d2 - d1) / (db - da + 2.0 * d2));
  if (!std::isfinite(t)) return 0.5 * (a + b);
  return t;
}

}  // namespace

void validate_params(const LineSearchParams& p) {
  if (!(p.c1 > 0.0 && p.c1 < p.c2 && p.c2 < 1.0)) {
    throw std::invalid_argument("line search requires 0 < c1 < c2 < 1");
  }
  if (!(p.tol_x > 0.0)) {
    throw std::invalid_argument("line search requires tol_x > 0");
  }
  if (p.max_evals < 4) {
    throw std::invalid_argument("line search requires max_evals >= 4");
  }
}

LineSearchResult wolfe_search(const ScalarFn& phi, const ScalarFn& dphi,
                              const LineSearchParams& p, double alpha0) {
  validate_params(p);
  const double phi0 = phi(0.0);
  const double dphi0 = dphi(0.0);
  if (!(dphi0 < 0.0)) {
    throw std::invalid_argument("wolfe_search: not a descent direction");
  }

  LineSearchResult res;
  res.evals = 1;

  double best_alpha = 0.0;
  double best_phi = phi0;
  bool have_best = false;
  auto note = [&](double a, double fa) {
    if (fa <= phi0 + p.c1 * a * dphi0 && (!have_best || fa < best_phi)) {
      best_alpha = a;
      best_phi = fa;
      have_best = true;
    }
  };
  auto budget = [&]() { return res.evals < p.max_evals; };
  auto give_up = [&]() {
    res.alpha = best_alpha;
    res.phi = best_phi;
    res.wolfe_satisfied = false;
    res.hit_max_evals = true;
    return res;
  };

  // Zoom phase on a bracket [lo, hi] where lo satisfies sufficient decrease,
  // phi'(lo) < 0, and the interval contains a Wolfe point.
  auto zoom = [&](double lo, double flo, double dlo, double hi, double fhi,
                  double dhi) -> LineSearchResult {
    for (int i = 0; i < p.max_evals; ++i) {
      if (!budget()) return give_up();
      double a = cubic_min(lo, flo, dlo, hi, fhi, dhi);
      const double width = std::abs(hi - lo);
      const double lo_guard = std::min(lo, hi) + 0.05 * width;
      const double hi_guard = std::max(lo, hi) - 0.05 * width;
      if (!(a >= lo_guard && a <= hi_guard)) a = 0.5 * (lo + hi);
      const double fa = phi(a);
      const double da = dphi(a);
      ++res.evals;
      note(a, fa);
      if (fa > phi0 + p.c1 * a * dphi0 || fa >= flo) {
        hi = a;
        fhi = fa;
        dhi = da;
      } else {
        if (da >= p.c2 * dphi0) {
          res.alpha = a;
          res.phi = fa;
          res.wolfe_satisfied = true;
          return res;
        }
        if (da * (hi - lo) >= 0.0) {
          hi = lo;
          fhi = flo;
          dhi = dlo;
        }
        lo = a;
        flo = fa;
        dlo = da;
      }
      if (std::abs(hi - lo) <=
          std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(lo))) {
        res.alpha = lo;
        res.phi = flo;
        res.wolfe_satisfied = flo <= phi0 + p.c1 * lo * dphi0 && dlo >= p.c2 * dphi0;
        res.hit_max_evals = !res.wolfe_satisfied;
        return res;
      }
    }
    return give_up();
  };

  double a_prev = 0.0;
  double f_prev = phi0;
  double d_prev = dphi0;
  double a = alpha0;
  for (int i = 1; budget(); ++i) {
    const double fa = phi(a);
    const double da = dphi(a);
    ++res.evals;
    note(a, fa);
    if (fa > phi0 + p.c1 * a * dphi0 || (i > 1 && fa >= f_prev)) {
      return zoom(a_prev, f_prev, d_prev, a, fa, da);
    }
    if (da >= p.c2 * dphi0) {
      res.alpha = a;
      res.phi = fa;
      res.wolfe_satisfied = true;
      return res;
    }
    a_prev = a;
    f_prev = fa;
    d_prev = da;
    if (a >= kBracketCap) break;
    a = std::min(2.0 * a, kBracketCap);
  }
  return give_up();
}

// Brent's localmin on [0, alpha_max], mirroring the classic fmin routine;
// tol1 follows the TolX convention seps*|x| + tol_x/3.
LineSearchResult near_exact_search(const ScalarFn& phi, double alpha_max,
                                   const LineSearchParams& p) {
  validate_params(p);
  if (!(alpha_max > 0.0)) {
    throw std::invalid_argument("near_exact_search: alpha_max must be > 0");
  }
  const double seps = std::sqrt(std::numeric_limits<double>::epsilon());
  const double gold = 0.5 * (3.0 - std::sqrt(5.0));

  double a = 0.0;
  double b = alpha_max;
  double x = a + gold * (b - a);
  double w = x, v = x;
  double fx = phi(x);
  double fw = fx, fv = fx;
  double d = 0.0, e = 0.0;

  LineSearchResult res;
  res.evals = 1;

  while (res.evals < p.max_evals) {
    const double m = 0.5 * (a + b);
    const double tol1 = seps * std::abs(x) + p.tol_x / 3.0;
    const double tol2 = 2.0 * tol1;
    if (std::abs(x - m) <= tol2 - 0.5 * (b - a)) break;

    bool golden = true;
    if (std::abs(e) > tol1) {
      // parabolic fit through x, v, w
      const double r = (x - w) * (fx - fv);
      double q = (x - v) * (fx - fw);
      double pnum = (x - v) * q - (x - w) * r;
      q = 2.0 * (q - r);
      if (q > 0.0) pnum = -pnum;
      q = std::abs(q);
      const double e_old = e;
      e = d;
      if (std::abs(pnum) < std::abs(0.5 * q * e_old) && pnum > q * (a - x) &&
          pnum < q * (b - x)) {
        d = pnum / q;
        double u = x + d;
        if (u - a < tol2 || b - u < tol2) d = std::copysign(tol1, m - x);
        golden = false;
      }
    }
    if (golden) {
      e = (x < m ? b : a) - x;
      d = gold * e;
    }
    const double u = x + (std::abs(d) >= tol1 ? d : std::copysign(tol1, d));
    const double fu = phi(u);
    ++res.evals;
    if (fu <= fx) {
      if (u < x) {
        b = x;
      } else {
        a = x;
      }
      v = w; fv = fw;
      w = x; fw = fx;
      x = u; fx = fu;
    } else {
      if (u < x) {
        a = u;
      } else {
        b = u;
      }
      if (fu <= fw || w == x) {
        v = w; fv = fw;
        w = u; fw = fu;
      } else if (fu <= fv || v == x || v == w) {
        v = u; fv = fu;
      }
    }
  }

  res.alpha = x;
  res.phi = fx;
  res.hit_max_evals = res.evals >= p.max_evals;
  return res;
}

double expand_bracket(const ScalarFn& phi, double phi0, int& evals,
                      double start) {
  double a = start;
  double fa = phi(a);
  ++evals;
  if (fa > phi0) return a;
  while (a < kBracketCap) {
    const double next = 2.0 * a;
    const double fn = phi(next);
    ++evals;
    if (fn > fa) return next;
    a = next;
    fa = fn;
  }
  return kBracketCap;
}

}  // namespace qn
