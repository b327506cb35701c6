#pragma once

#include <functional>

namespace qn {

enum class LineSearchMode { Wolfe, NearExact };

struct LineSearchParams {
  LineSearchMode mode = LineSearchMode::Wolfe;
  double c1 = 1e-4;      // sufficient decrease
  double c2 = 0.9;       // curvature
  double tol_x = 1e-12;  // NearExact x-tolerance
  int max_evals = 500;
};

void validate_params(const LineSearchParams& p);

struct LineSearchResult {
  double alpha = 0.0;
  double phi = 0.0;  // phi(alpha)
  int evals = 0;
  bool wolfe_satisfied = false;
  bool hit_max_evals = false;
};

using ScalarFn = std::function<double(double)>;

// Weak Wolfe search (sufficient decrease plus curvature phi'(a) >= c2
// phi'(0)) by bracketing and zooming with cubic interpolation. Requires
// phi'(0) < 0. When the evaluation budget runs out the best
// sufficient-decrease step found so far is returned with hit_max_evals set.
LineSearchResult wolfe_search(const ScalarFn& phi, const ScalarFn& dphi,
                              const LineSearchParams& p, double alpha0 = 1.0);

// Scalar minimization on [0, alpha_max] by golden section with successive
// parabolic interpolation (Brent), stopping at |alpha - minimizer| <= tol_x
// for unimodal phi.
LineSearchResult near_exact_search(const ScalarFn& phi, double alpha_max,
                                   const LineSearchParams& p);

// Doubling bracket for the near-exact search: expand from `start` until phi
// increases, capped at 2^30. phi0 is phi at zero.
double expand_bracket(const ScalarFn& phi, double phi0, int& evals,
                      double start = 1.0);

}  // namespace qn
