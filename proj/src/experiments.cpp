#include "qn/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "qn/errors.hpp"
#include "qn/parallel.hpp"
#include "qn/rng.hpp"

namespace qn {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::uint64_t kTable2Tag = 0x7462326bull;
constexpr std::uint64_t kTable3Tag = 0x7462336bull;
const double kSd10 = std::sqrt(10.0);

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  return out;
}

void write_header(std::ofstream& out, const std::string& invocation,
                  std::uint64_t seed) {
  out << "# invocation: " << (invocation.empty() ? "(library)" : invocation)
      << "\n# seed: " << seed << "\n";
}

struct Table2Draw {
  SpdCholesky state;
  Vector s, y, ybar;
  double eps = 0.0;
  bool ok = true;
  std::string error;
};

SpdCholesky setup_matrix(Table2Setup setup, int n, const Vector& spike_dir) {
  switch (setup) {
    case Table2Setup::DetOne: {
      // diag(1..n) / (n!)^(1/n), assembled in logs so the determinant is
      // one to rounding.
      Vector diag(n);
      double mean_log = 0.0;
      for (int i = 1; i <= n; ++i) mean_log += std::log(double(i));
      mean_log /= n;
      for (int i = 0; i < n; ++i) {
        diag[i] = std::exp(std::log(double(i + 1)) - mean_log);
      }
      return SpdCholesky::from_diagonal(diag);
    }
    case Table2Setup::Diag: {
      Vector diag(n);
      for (int i = 0; i < n; ++i) diag[i] = i + 1;
      return SpdCholesky::from_diagonal(diag);
    }
    case Table2Setup::Spike: {
      const double w = std::pow(double(n), 1.5);
      return SpdCholesky::identity(n).rank_one_update(w * spike_dir);
    }
  }
  throw std::logic_error("unreachable setup");
}

Table2Draw draw_trial(Table2Setup setup, int n, bool force_consistent,
                      std::uint64_t stream_seed) {
  Rng rng(stream_seed);
  Table2Draw d{SpdCholesky::identity(1), {}, {}, {}, 0.0, true, ""};
  if (setup == Table2Setup::Spike) {
    d.s = rng.gaussian_vector(n, kSd10);
    d.y = d.s;
    Vector p;
    for (int tries = 0;; ++tries) {
      p = rng.gaussian_vector(n);
      p -= (p.dot(d.y) / d.y.squaredNorm()) * d.y;
      const double norm = p.norm();
      if (norm > 1e-8) {
        p /= norm;
        break;
      }
      if (tries > 64) {
        d.ok = false;
        d.error = "could not build a unit vector orthogonal to y";
        return d;
      }
    }
    d.state = setup_matrix(setup, n, p);
    d.ybar = force_consistent ? d.y : p;
    d.eps = rng.uniform(-0.2, 0.2);
    return d;
  }

  d.s = rng.gaussian_vector(n, kSd10);
  d.y = rng.gaussian_vector(n, kSd10);
  if (d.s.dot(d.y) <= 0.0) d.y = -d.y;
  d.state = setup_matrix(setup, n, Vector());
  int tries = 0;
  do {
    d.eps = rng.uniform(-0.2, 0.2);
    d.ybar = force_consistent ? d.y : rng.gaussian_vector(n, 1.0);
    if (++tries > 1000) {
      d.ok = false;
      d.error = "positivity resampling cap exceeded";
      return d;
    }
  } while ((1.0 + d.eps) * d.s.dot(d.y + d.eps * d.ybar) <= 0.0);
  return d;
}

}  // namespace

std::string setup_name(Table2Setup s) {
  switch (s) {
    case Table2Setup::DetOne:
      return "detone";
    case Table2Setup::Diag:
      return "diag";
    case Table2Setup::Spike:
      return "spike";
  }
  return "";
}

double Table2Result::mean(Table2Setup setup, FamilyKind family, double gamma,
                          int n) const {
  double sum = 0.0;
  long count = 0;
  for (const auto& r : records) {
    if (r.setup == setup && r.family == family && r.gamma == gamma &&
        r.n == n && std::isfinite(r.approx_if)) {
      sum += r.approx_if;
      ++count;
    }
  }
  return count > 0 ? sum / count : kNaN;
}

Table2Result run_table2(const Table2Config& config) {
  if (config.trials < 1) {
    throw std::invalid_argument("table2: trials >= 1 required");
  }
  for (int n : config.dims) {
    if (n < 3) throw std::invalid_argument("table2: dims >= 3 required");
  }
  Table2Result result;
  result.config = config;

  struct Cell {
    std::size_t setup_idx;
    std::size_t dim_idx;
    int trial;
  };
  std::vector<Cell> tasks;
  for (std::size_t si = 0; si < config.setups.size(); ++si) {
    for (std::size_t di = 0; di < config.dims.size(); ++di) {
      for (int t = 0; t < config.trials; ++t) tasks.push_back({si, di, t});
    }
  }

  const std::size_t combos = config.families.size() * config.gammas.size();
  result.records.resize(tasks.size() * combos);

  parallel_for(tasks.size(), [&](std::size_t ti) {
    const Cell& cell = tasks[ti];
    const Table2Setup setup = config.setups[cell.setup_idx];
    const int n = config.dims[cell.dim_idx];
    const std::uint64_t stream = derive_seed(
        config.seed, {kTable2Tag, cell.setup_idx,
                      static_cast<std::uint64_t>(n),
                      static_cast<std::uint64_t>(cell.trial)});
    const Table2Draw draw =
        draw_trial(setup, n, config.force_consistent, stream);

    std::size_t slot = ti * combos;
    for (FamilyKind fk : config.families) {
      for (double gamma : config.gammas) {
        Table2Record rec{setup,     fk, gamma, n, cell.trial, stream,
                         kNaN,      ""};
        if (!draw.ok) {
          rec.error = draw.error;
        } else {
          try {
            const UpdateFamily family =
                UpdateFamily::of_kind(fk, make_power(gamma));
            rec.approx_if = perturbed_update(family, draw.state, draw.s,
                                             draw.y, draw.ybar, draw.eps)
                                .approx_if;
          } catch (const std::exception& e) {
            rec.error = e.what();
          }
        }
        result.records[slot++] = std::move(rec);
      }
    }
  });
  return result;
}

void write_table2_csv(const Table2Result& result, const std::string& path) {
  auto out = open_out(path);
  write_header(out, result.config.invocation, result.config.seed);
  out << "setup,family,gamma,n,trial,approx_if\n";
  for (const auto& r : result.records) {
    out << setup_name(r.setup) << "," << family_kind_name(r.family) << ","
        << fmt(r.gamma) << "," << r.n << "," << r.trial << ","
        << fmt(r.approx_if) << "\n";
  }
}

void write_table2_means_csv(const Table2Result& result,
                            const std::string& path) {
  auto out = open_out(path);
  write_header(out, result.config.invocation, result.config.seed);
  out << "family,n";
  for (Table2Setup s : result.config.setups) {
    for (double g : result.config.gammas) {
      out << "," << setup_name(s) << ":gamma=" << g;
    }
  }
  out << "\n";
  for (FamilyKind fk : result.config.families) {
    for (int n : result.config.dims) {
      out << family_kind_name(fk) << "," << n;
      for (Table2Setup s : result.config.setups) {
        for (double g : result.config.gammas) {
          out << "," << fmt(result.mean(s, fk, g, n));
        }
      }
      out << "\n";
    }
  }
}

double Table3Result::mean_iterations(ProblemKind problem, int n, double h,
                                     FamilyKind method) const {
  double sum = 0.0;
  long count = 0;
  for (const auto& r : records) {
    if (r.problem == problem && r.n == n && r.h == h && r.method == method) {
      sum += static_cast<double>(r.iterations);
      ++count;
    }
  }
  return count > 0 ? sum / count : kNaN;
}

long Table3Result::max_iter_hits() const {
  long hits = 0;
  for (const auto& r : records) {
    if (r.outcome == SolveOutcome::MaxIter) ++hits;
  }
  return hits;
}

Table3Result run_table3(const Table3Config& config) {
  if (config.runs < 1) {
    throw std::invalid_argument("table3: runs >= 1 required");
  }
  Table3Result result;
  result.config = config;

  struct Cell {
    std::size_t prob_idx, dim_idx, h_idx, method_idx;
    int run;
  };
  std::vector<Cell> tasks;
  for (std::size_t pi = 0; pi < config.problems.size(); ++pi) {
    for (std::size_t di = 0; di < config.dims.size(); ++di) {
      for (std::size_t hi = 0; hi < config.h_values.size(); ++hi) {
        for (std::size_t mi = 0; mi < config.methods.size(); ++mi) {
          for (int r = 0; r < config.runs; ++r) {
            tasks.push_back({pi, di, hi, mi, r});
          }
        }
      }
    }
  }
  result.records.resize(tasks.size());

  parallel_for(tasks.size(), [&](std::size_t ti) {
    const Cell& cell = tasks[ti];
    const ProblemKind pk = config.problems[cell.prob_idx];
    const int n = config.dims[cell.dim_idx];
    const double h = config.h_values[cell.h_idx];
    const FamilyKind mk = config.methods[cell.method_idx];
    const std::uint64_t run_seed = derive_seed(
        config.seed,
        {kTable3Tag, cell.prob_idx, static_cast<std::uint64_t>(n),
         cell.h_idx, cell.method_idx, static_cast<std::uint64_t>(cell.run)});

    const Problem problem = make_problem(pk, n);
    Rng rng(run_seed);
    const Vector x0 = rng.gaussian_vector(n, kSd10);

    SolverConfig cfg(UpdateFamily::of_kind(mk, make_neglog()));
    cfg.linesearch.mode = LineSearchMode::NearExact;
    cfg.linesearch.tol_x = 1e-12;
    cfg.max_iter = config.max_iter;
    cfg.noise_h = h;
    cfg.noise_advance = config.noise_advance;
    cfg.seed = derive_seed(run_seed, {1});

    const SolverTrace trace = minimize(problem, x0, cfg);
    result.records[ti] = {pk,
                          n,
                          h,
                          mk,
                          cell.run,
                          run_seed,
                          trace.iteration_count,
                          trace.outcome,
                          trace.final_grad_norm};
  });
  return result;
}

void write_table3_csv(const Table3Result& result, const std::string& path) {
  auto out = open_out(path);
  write_header(out, result.config.invocation, result.config.seed);
  out << "problem,n,h,method,run,iterations,outcome\n";
  for (const auto& r : result.records) {
    out << (r.problem == ProblemKind::P1 ? "p1" : "p2") << "," << r.n << ","
        << fmt(r.h) << ","
        << (r.method == FamilyKind::VBfgsB ? "bfgs"
                                           : family_kind_name(r.method))
        << "," << r.run << "," << r.iterations << ","
        << outcome_name(r.outcome) << "\n";
  }
}

void write_table3_means_csv(const Table3Result& result,
                            const std::string& path) {
  auto out = open_out(path);
  write_header(out, result.config.invocation, result.config.seed);
  out << "problem,h";
  for (int n : result.config.dims) {
    for (FamilyKind mk : result.config.methods) {
      out << ",n" << n << ":"
          << (mk == FamilyKind::VBfgsB ? "bfgs" : family_kind_name(mk));
    }
  }
  out << "\n";
  for (ProblemKind pk : result.config.problems) {
    for (double h : result.config.h_values) {
      out << (pk == ProblemKind::P1 ? "p1" : "p2") << "," << fmt(h);
      for (int n : result.config.dims) {
        for (FamilyKind mk : result.config.methods) {
          out << "," << fmt(result.mean_iterations(pk, n, h, mk));
        }
      }
      out << "\n";
    }
  }
}

std::vector<ProbeRow> run_influence_probe(const UpdateFamily& family, int n,
                                          AdversarialKind kind, double d,
                                          const std::vector<double>& values,
                                          double eps, std::uint64_t seed) {
  if (family.kind() == FamilyKind::Broyden) {
    throw UnsupportedFamily("influence probe: no closed form for broyden");
  }
  Rng rng(derive_seed(seed, {0x70726f62ull}));
  Vector s = rng.gaussian_vector(n);
  Vector y = rng.gaussian_vector(n);
  if (s.dot(y) <= 0.0) y = -y;
  const Vector ybar = rng.gaussian_vector(n);

  // The sequence must satisfy the constraint in the family's own
  // orientation: B s = y for direct families, H y = s for inverse ones.
  const Vector& u = family.inverse_state() ? y : s;
  const Vector& v = family.inverse_state() ? s : y;
  AdversarialParams params{d, values, seed};
  const auto sequence = adversarial_sequence(kind, u, v, {}, params);

  std::vector<ProbeRow> rows;
  rows.reserve(sequence.size());
  for (std::size_t i = 0; i < sequence.size(); ++i) {
    ProbeRow row{values[i], kNaN, kNaN, kNaN};
    row.closed_form_norm =
        family_influence(family, sequence[i], s, y, ybar).norm();
    row.fd_norm =
        perturbed_update(family, sequence[i], s, y, ybar, eps).approx_if;
    row.agreement = row.fd_norm / row.closed_form_norm;
    rows.push_back(row);
  }
  return rows;
}

void write_probe_csv(const std::vector<ProbeRow>& rows, double eps,
                     const std::string& invocation, const std::string& path) {
  auto out = open_out(path);
  out << "# invocation: " << (invocation.empty() ? "(library)" : invocation)
      << "\n";
  char head[64];
  std::snprintf(head, sizeof(head), "fd_norm_eps%g", eps);
  out << "probe_param,closed_form_norm," << head << ",agreement\n";
  for (const auto& r : rows) {
    out << fmt(r.param) << "," << fmt(r.closed_form_norm) << ","
        << fmt(r.fd_norm) << "," << fmt(r.agreement) << "\n";
  }
}

SpdCholesky popular_self_scaling_update(const SpdCholesky& b, const Vector& s,
                                        const Vector& y) {
  require_curvature(s, y);
  const double theta = s.dot(y) / s.dot(b.apply(s));
  const double tau = s.dot(y);
  SpdCholesky scaled = bfgs_update(b, s, y).scaled(theta);
  const double coef = (1.0 - theta) / tau;
  const Vector w = y * std::sqrt(std::abs(coef));
  try {
    return coef >= 0.0 ? scaled.rank_one_update(w)
                       : scaled.rank_one_downdate(w);
  } catch (const DowndateBreakdown&) {
    Matrix d = theta * bfgs_update(b, s, y).dense() +
               coef * (y * y.transpose());
    return SpdCholesky::from_dense(0.5 * (d + d.transpose()));
  }
}

void write_gnuplot_script(const std::string& csv_path,
                          const std::string& script_path,
                          const std::string& title) {
  auto out = open_out(script_path);
  out << "set datafile separator ','\n"
      << "set key autotitle columnhead\n"
      << "set logscale xy\n"
      << "set title '" << title << "'\n"
      << "plot '" << csv_path << "' using 1:2 with linespoints, \\\n"
      << "     '" << csv_path << "' using 1:3 with linespoints\n";
}

}  // namespace qn
