#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qn/linesearch.hpp"
#include "qn/problems.hpp"
#include "qn/robustness.hpp"
#include "qn/solver.hpp"
#include "qn/update.hpp"

namespace qn {

// --- update-noise study -----------------------------------------------

enum class Table2Setup { DetOne, Diag, Spike };

std::string setup_name(Table2Setup s);

struct Table2Config {
  std::vector<int> dims{10, 100};
  std::vector<Table2Setup> setups{Table2Setup::DetOne, Table2Setup::Diag,
                                  Table2Setup::Spike};
  std::vector<double> gammas{-2.0, -1.0, 0.0};
  std::vector<FamilyKind> families{FamilyKind::VBfgsB, FamilyKind::VDfpB,
                                   FamilyKind::VBfgsH, FamilyKind::VDfpH};
  int trials = 20;
  std::uint64_t seed = 0;
  bool force_consistent = false;  // debug: ybar = y, influence must vanish
  std::string invocation;         // echoed in CSV headers
};

struct Table2Record {
  Table2Setup setup;
  FamilyKind family;
  double gamma;
  int n;
  int trial;
  std::uint64_t trial_seed;
  double approx_if;   // NaN when the trial failed
  std::string error;  // failure note, empty on success
};

struct Table2Result {
  Table2Config config;
  std::vector<Table2Record> records;

  double mean(Table2Setup setup, FamilyKind family, double gamma,
              int n) const;
};

// Per trial: draw the secant data for the setup, then apply every
// (family, gamma) combination to the same draw and record
// ||(M(eps) - M(0)) / eps||_F. Draws per (setup, n, trial) come from
// independent streams, so trials can run in parallel and still reproduce
// bit for bit.
//   DetOne / Diag: s, y ~ N(0, 10 I), y flipped if s'y <= 0;
//     eps ~ U[-0.2, 0.2], ybar ~ N(0, I), both resampled until the
//     perturbed pair keeps positive curvature (capped at 1000 tries).
//   Spike: s ~ N(0, 10 I), y = s, p a unit vector orthogonal to y,
//     state = I + n^3 p p', ybar = p, eps ~ U[-0.2, 0.2].
Table2Result run_table2(const Table2Config& config);

void write_table2_csv(const Table2Result& result, const std::string& path);
void write_table2_means_csv(const Table2Result& result,
                            const std::string& path);

// --- solver-noise study -----------------------------------------------

struct Table3Config {
  std::vector<ProblemKind> problems{ProblemKind::P1, ProblemKind::P2};
  std::vector<int> dims{100};
  std::vector<double> h_values{0.0, 0.1, 0.2, 0.3};
  std::vector<FamilyKind> methods{FamilyKind::VBfgsB, FamilyKind::VDfpB};
  int runs = 20;
  std::uint64_t seed = 0;
  long max_iter = 50000;
  NoiseAdvance noise_advance = NoiseAdvance::Perturbed;
  std::string invocation;
};

struct Table3Record {
  ProblemKind problem;
  int n;
  double h;
  FamilyKind method;
  int run;
  std::uint64_t run_seed;
  long iterations;
  SolveOutcome outcome;
  double final_grad_norm;
};

struct Table3Result {
  Table3Config config;
  std::vector<Table3Record> records;

  double mean_iterations(ProblemKind problem, int n, double h,
                         FamilyKind method) const;
  long max_iter_hits() const;
};

// Per run: x0 ~ N(0, 10 I), near-exact line search (TolX = 1e-12), noise
// level h, stop at ||grad|| <= n * 1e-5 or 50000 iterations. Methods use
// the neglog potential, i.e. the classical updates.
Table3Result run_table3(const Table3Config& config);

void write_table3_csv(const Table3Result& result, const std::string& path);
void write_table3_means_csv(const Table3Result& result,
                            const std::string& path);

// --- influence probes ---------------------------------------------------

struct ProbeRow {
  double param;
  double closed_form_norm;
  double fd_norm;
  double agreement;  // fd / closed form
};

// Sweeps an adversarial sequence and reports closed-form influence norms
// next to finite-difference estimates at the given eps. The secant data and
// the perturbation direction are seeded draws; inverse-state families get
// the sequence built in their own orientation (M y = s).
std::vector<ProbeRow> run_influence_probe(const UpdateFamily& family, int n,
                                          AdversarialKind kind, double d,
                                          const std::vector<double>& values,
                                          double eps, std::uint64_t seed);

void write_probe_csv(const std::vector<ProbeRow>& rows, double eps,
                     const std::string& invocation, const std::string& path);

// Gnuplot companion script for a CSV written by one of the writers above.
void write_gnuplot_script(const std::string& csv_path,
                          const std::string& script_path,
                          const std::string& title);

// Reference comparator: the classical self-scaling update with
// theta = s'y / (s'Bs). Not expressible through any admissible scaling
// function (the would-be beta equals 1/n exactly), so it is not offered as
// an update family; experiments use it for side-by-side comparisons only.
SpdCholesky popular_self_scaling_update(const SpdCholesky& b, const Vector& s,
                                        const Vector& y);

}  // namespace qn
