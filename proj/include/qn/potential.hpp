#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace qn {

enum class PotentialKind { NegLog, Power, Bounded, Custom };

// Analytic derivatives for a user-supplied potential. Second derivatives
// are required because the sensitivity coefficient beta depends on nu'.
struct CustomPotential {
  std::function<double(double)> value;   // V(z)
  std::function<double(double)> first;   // V'(z)
  std::function<double(double)> second;  // V''(z)
};

struct PotentialValues {
  double value;
  double nu;
  double beta;
};

// Scalar potential V on (0, inf): strictly convex and decreasing, inducing
//   nu(z)   = -z V'(z)          (> 0)
//   beta(z) = z nu'(z) / nu(z)  (< 1/n for the working dimension n)
// The update formulas and the influence functions consume only nu and beta.
// Determinants of the matrices involved routinely leave the double range,
// so the built-in kinds also evaluate nu and beta at log z directly.
class Potential {
 public:
  PotentialKind kind() const { return kind_; }

  double value(double z) const;
  double derivative(double z) const;
  double second_derivative(double z) const;
  double nu(double z) const;
  double beta(double z) const;

  // log nu(exp(l)) and beta(exp(l)); safe for |l| far beyond log(DBL_MAX)
  // for the built-in kinds.
  double log_nu_at_log(double log_z) const;
  double beta_at_log(double log_z) const;
  double nu_at_log(double log_z) const;

  double power_gamma() const { return gamma_; }
  std::pair<double, double> bounded_params() const { return {a_, b_}; }

  // (L1, L2) with L1 <= nu <= L2 when known; solver diagnostics only.
  const std::optional<std::pair<double, double>>& nu_bounds() const {
    return nu_bounds_;
  }

  // Canonical name, matching the CLI/config syntax.
  std::string name() const;

  friend Potential make_neglog();
  friend Potential make_power(double gamma, int n_max);
  friend Potential make_bounded(double a, double b);
  friend Potential make_custom(CustomPotential fns, std::string name);

 private:
  Potential() = default;

  PotentialKind kind_ = PotentialKind::NegLog;
  double gamma_ = 0.0;
  double a_ = 0.0;
  double b_ = 0.0;
  CustomPotential custom_;
  std::string custom_name_;
  std::optional<std::pair<double, double>> nu_bounds_;
};

// V(z) = -log z. nu = 1, beta = 0.
Potential make_neglog();

// V(z) = (1 - z^gamma) / gamma (limit -log z at gamma = 0).
// nu(z) = z^gamma, beta = gamma. Requires gamma < 1/n_max for the largest
// dimension the potential will be used with; pass n_max = 1 to get only the
// intrinsic strict-convexity bound gamma < 1.
Potential make_power(double gamma, int n_max = 1);

// V(z) = a log(a z + 1) - b log z for 0 <= a < b.
// nu(z) = b - a + a/(a z + 1) in (b - a, b], beta <= 0.
Potential make_bounded(double a, double b);

Potential make_custom(CustomPotential fns, std::string name = "custom");

// (V, nu, beta) at z > 0; z <= 0 is a domain error.
PotentialValues evaluate(const Potential& p, double z);

struct ValidationIssue {
  double z;
  std::string condition;
  double value;
};

struct ValidationReport {
  std::string potential_name;
  int dimension = 0;
  bool nu_positive = true;
  bool beta_below_bound = true;
  bool decreasing_convex = true;
  bool limit_condition = true;
  std::vector<ValidationIssue> issues;  // first few offending grid points
  std::optional<std::pair<double, double>> nu_bounds;

  bool pass() const {
    return nu_positive && beta_below_bound && decreasing_convex &&
           limit_condition;
  }
  std::string summary() const;
};

// Logarithmic grid 1e-8 .. 1e8, 200 points.
std::vector<double> default_validation_grid();
std::vector<double> log_grid(double lo, double hi, int points);

// Grid-based check of the potential conditions for dimension n:
// nu > 0, beta < 1/n, V' < 0, V'' >= 0 with no affine tail, and
// z / nu(z)^(n-1) decreasing toward zero at the smallest grid points.
ValidationReport validate(const Potential& p, int n,
                          const std::vector<double>& grid);
ValidationReport validate(const Potential& p, int n);

}  // namespace qn
