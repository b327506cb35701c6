#include "qn/potential.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "qn/errors.hpp"

namespace qn {

namespace {

void require_positive(double z) {
  if (!(z > 0.0)) {
    throw std::domain_error("potential evaluated at z <= 0");
  }
}

// nu(z) = b - a + a/(a z + 1) with z = exp(l). For l > 0 the fraction is
// rewritten as a e^{-l} / (a + e^{-l}) so neither exponential overflows.
double bounded_nu_log(double l, double a, double b) {
  if (a == 0.0) return b;
  if (l <= 0.0) {
    const double z = std::exp(l);
    return b - a + a / (a * z + 1.0);
  }
  const double e = std::exp(-l);
  return b - a + a * e / (a + e);
}

// beta(z) = -a^2 z / ((a z + 1)(a (b-a) z + b)); divide through by z^2 for
// l > 0.
double bounded_beta_log(double l, double a, double b) {
  if (a == 0.0) return 0.0;
  if (l <= 0.0) {
    const double z = std::exp(l);
    return -a * a * z / ((a * z + 1.0) * (a * (b - a) * z + b));
  }
  const double e = std::exp(-l);
  return -a * a * e / ((a + e) * (a * (b - a) + b * e));
}

constexpr double kCustomLogLimit = 700.0;

double custom_arg(double log_z) {
  if (std::abs(log_z) > kCustomLogLimit) {
    throw Error("custom potential cannot be evaluated at |log z| > 700");
  }
  return std::exp(log_z);
}

}  // namespace

double Potential::value(double z) const {
  require_positive(z);
  switch (kind_) {
    case PotentialKind::NegLog:
      return -std::log(z);
    case PotentialKind::Power:
      // (1 - z^gamma)/gamma = -expm1(gamma log z)/gamma, stable near 0.
      if (gamma_ == 0.0) return -std::log(z);
      return -std::expm1(gamma_ * std::log(z)) / gamma_;
    case PotentialKind::Bounded:
      return a_ * std::log(a_ * z + 1.0) - b_ * std::log(z);
    case PotentialKind::Custom:
      return custom_.value(z);
  }
  return 0.0;
}

double Potential::derivative(double z) const {
  require_positive(z);
  switch (kind_) {
    case PotentialKind::NegLog:
      return -1.0 / z;
    case PotentialKind::Power:
      return -std::pow(z, gamma_ - 1.0);
    case PotentialKind::Bounded:
      return a_ * a_ / (a_ * z + 1.0) - b_ / z;
    case PotentialKind::Custom:
      return custom_.first(z);
  }
  return 0.0;
}

double Potential::second_derivative(double z) const {
  require_positive(z);
  switch (kind_) {
    case PotentialKind::NegLog:
      return 1.0 / (z * z);
    case PotentialKind::Power:
      return (1.0 - gamma_) * std::pow(z, gamma_ - 2.0);
    case PotentialKind::Bounded: {
      const double az1 = a_ * z + 1.0;
      return b_ / (z * z) - a_ * a_ * a_ / (az1 * az1);
    }
    case PotentialKind::Custom:
      return custom_.second(z);
  }
  return 0.0;
}

double Potential::nu(double z) const {
  require_positive(z);
  return nu_at_log(std::log(z));
}

double Potential::beta(double z) const {
  require_positive(z);
  return beta_at_log(std::log(z));
}

double Potential::log_nu_at_log(double log_z) const {
  switch (kind_) {
    case PotentialKind::NegLog:
      return 0.0;
    case PotentialKind::Power:
      return gamma_ * log_z;
    case PotentialKind::Bounded:
      return std::log(bounded_nu_log(log_z, a_, b_));
    case PotentialKind::Custom: {
      const double z = custom_arg(log_z);
      return std::log(-z * custom_.first(z));
    }
  }
  return 0.0;
}

double Potential::nu_at_log(double log_z) const {
  switch (kind_) {
    case PotentialKind::NegLog:
      return 1.0;
    case PotentialKind::Power:
      return std::exp(gamma_ * log_z);
    case PotentialKind::Bounded:
      return bounded_nu_log(log_z, a_, b_);
    case PotentialKind::Custom: {
      const double z = custom_arg(log_z);
      return -z * custom_.first(z);
    }
  }
  return 1.0;
}

double Potential::beta_at_log(double log_z) const {
  switch (kind_) {
    case PotentialKind::NegLog:
      return 0.0;
    case PotentialKind::Power:
      return gamma_;
    case PotentialKind::Bounded:
      return bounded_beta_log(log_z, a_, b_);
    case PotentialKind::Custom: {
      // nu' = -V' - z V''; beta = z nu' / nu.
      const double z = custom_arg(log_z);
      const double vp = custom_.first(z);
      const double vpp = custom_.second(z);
      const double nu = -z * vp;
      return z * (-vp - z * vpp) / nu;
    }
  }
  return 0.0;
}

std::string Potential::name() const {
  std::ostringstream os;
  switch (kind_) {
    case PotentialKind::NegLog:
      return "neglog";
    case PotentialKind::Power:
      os << "power:gamma=" << gamma_;
      return os.str();
    case PotentialKind::Bounded:
      os << "bounded:a=" << a_ << ",b=" << b_;
      return os.str();
    case PotentialKind::Custom:
      return custom_name_;
  }
  return "";
}

Potential make_neglog() {
  Potential p;
  p.kind_ = PotentialKind::NegLog;
  p.nu_bounds_ = {1.0, 1.0};
  return p;
}

Potential make_power(double gamma, int n_max) {
  if (n_max < 1) throw std::invalid_argument("power potential: n_max < 1");
  if (!(gamma < 1.0 / n_max)) {
    std::ostringstream os;
    os << "power potential requires gamma < 1/" << n_max << ", got " << gamma;
    throw std::invalid_argument(os.str());
  }
  Potential p;
  p.kind_ = PotentialKind::Power;
  p.gamma_ = gamma;
  return p;
}

Potential make_bounded(double a, double b) {
  if (!(a >= 0.0) || !(a < b)) {
    throw std::invalid_argument("bounded potential requires 0 <= a < b");
  }
  Potential p;
  p.kind_ = PotentialKind::Bounded;
  p.a_ = a;
  p.b_ = b;
  p.nu_bounds_ = {b - a, b};
  return p;
}

Potential make_custom(CustomPotential fns, std::string name) {
  if (!fns.value || !fns.first || !fns.second) {
    throw std::invalid_argument("custom potential needs V, V' and V''");
  }
  Potential p;
  p.kind_ = PotentialKind::Custom;
  p.custom_ = std::move(fns);
  p.custom_name_ = std::move(name);
  return p;
}

PotentialValues evaluate(const Potential& p, double z) {
  require_positive(z);
  return {p.value(z), p.nu(z), p.beta(z)};
}

std::vector<double> log_grid(double lo, double hi, int points) {
  if (!(lo > 0.0) || !(hi > lo) || points < 2) {
    throw std::invalid_argument("log_grid: need 0 < lo < hi, points >= 2");
  }
  std::vector<double> grid(points);
  const double llo = std::log(lo);
  const double lhi = std::log(hi);
  for (int i = 0; i < points; ++i) {
    grid[i] = std::exp(llo + (lhi - llo) * i / (points - 1));
  }
  return grid;
}

std::vector<double> default_validation_grid() {
  return log_grid(1e-8, 1e8, 200);
}

ValidationReport validate(const Potential& p, int n,
                          const std::vector<double>& grid) {
  if (n < 1) throw std::invalid_argument("validate: dimension < 1");
  if (grid.empty()) throw std::invalid_argument("validate: empty grid");
  ValidationReport report;
  report.potential_name = p.name();
  report.dimension = n;
  report.nu_bounds = p.nu_bounds();

  std::vector<double> sorted = grid;
  std::sort(sorted.begin(), sorted.end());
  if (!(sorted.front() > 0.0)) {
    throw std::invalid_argument("validate: grid entries must be positive");
  }

  constexpr std::size_t kMaxIssues = 16;
  auto flag = [&](bool& ok, double z, const char* cond, double val) {
    ok = false;
    if (report.issues.size() < kMaxIssues) {
      report.issues.push_back({z, cond, val});
    }
  };

  const double beta_bound = 1.0 / n;
  for (double z : sorted) {
    const double nu = p.nu(z);
    const double beta = p.beta(z);
    const double vp = p.derivative(z);
    const double vpp = p.second_derivative(z);
    if (!(nu > 0.0)) flag(report.nu_positive, z, "nu > 0", nu);
    if (!(beta < beta_bound)) flag(report.beta_below_bound, z, "beta < 1/n", beta);
    if (!(vp < 0.0)) flag(report.decreasing_convex, z, "V' < 0", vp);
    if (!(vpp >= 0.0)) flag(report.decreasing_convex, z, "V'' >= 0", vpp);
  }

  // Affine tail: V'' identically zero over the top decade would make V
  // affine there, contradicting strict convexity.
  const std::size_t tail = std::min<std::size_t>(10, sorted.size());
  bool all_zero = tail > 1;
  for (std::size_t i = sorted.size() - tail; i < sorted.size(); ++i) {
    if (p.second_derivative(sorted[i]) != 0.0) {
      all_zero = false;
      break;
    }
  }
  if (all_zero) {
    flag(report.decreasing_convex, sorted.back(), "no affine tail", 0.0);
  }

  // Limit condition: z / nu(z)^(n-1) must shrink toward zero as z -> 0.
  // Checked as monotone decrease of zeta(z) = log z - (n-1) log nu(z)
  // over the smallest grid points.
  const std::size_t head = std::min<std::size_t>(8, sorted.size());
  for (std::size_t i = 0; i + 1 < head; ++i) {
    const double lo = std::log(sorted[i]) -
                      (n - 1) * p.log_nu_at_log(std::log(sorted[i]));
    const double hi = std::log(sorted[i + 1]) -
                      (n - 1) * p.log_nu_at_log(std::log(sorted[i + 1]));
    if (!(lo < hi)) {
      flag(report.limit_condition, sorted[i], "z/nu^(n-1) -> 0", lo);
      break;
    }
  }

  return report;
}

ValidationReport validate(const Potential& p, int n) {
  return validate(p, n, default_validation_grid());
}

std::string ValidationReport::summary() const {
  std::ostringstream os;
  os << "potential " << potential_name << " (n=" << dimension
     << "): " << (pass() ? "pass" : "fail") << "\n";
  os << "  nu > 0:            " << (nu_positive ? "ok" : "violated") << "\n";
  os << "  beta < 1/n:        " << (beta_below_bound ? "ok" : "violated")
     << "\n";
  os << "  convex decreasing: " << (decreasing_convex ? "ok" : "violated")
     << "\n";
  os << "  limit condition:   " << (limit_condition ? "ok" : "violated")
     << "\n";
  if (nu_bounds) {
    os << "  nu bounds:         (" << nu_bounds->first << ", "
       << nu_bounds->second << "]\n";
  }
  for (const auto& issue : issues) {
    os << "  at z=" << issue.z << ": " << issue.condition
       << " fails (value " << issue.value << ")\n";
  }
  return os.str();
}

}  // namespace qn
