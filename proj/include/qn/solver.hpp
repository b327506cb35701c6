#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qn/linesearch.hpp"
#include "qn/problems.hpp"
#include "qn/update.hpp"

namespace qn {

// Whether the iterate advances by the noise-perturbed step or the nominal
// one. Either way the update consumes the perturbed secant pair; advancing
// by the perturbed step models the inexact line search as the step actually
// taken and needs no extra gradient evaluation.
enum class NoiseAdvance { Perturbed, Nominal };

enum class SolveOutcome { Converged, MaxIter, LineSearchFailure };

std::string outcome_name(SolveOutcome o);

struct SolverConfig {
  UpdateFamily family;
  LineSearchParams linesearch{};
  std::optional<SpdCholesky> b0;  // initial Hessian approximation; identity if unset
  double grad_tol = 0.0;          // <= 0 means n * 1e-5
  long max_iter = 50000;
  double noise_h = 0.0;           // step noise: (1 + eps) s with eps ~ U[-h, h]
  NoiseAdvance noise_advance = NoiseAdvance::Perturbed;
  std::uint64_t seed = 0;

  explicit SolverConfig(UpdateFamily fam) : family(std::move(fam)) {}
};

struct IterationRecord {
  long k;
  double f;
  double grad_norm;
  double alpha;
  double theta;  // NaN when the update was skipped or has no single coefficient
  double logdet_b;
  bool update_skipped;
};

struct SolverTrace {
  std::vector<IterationRecord> iterations;
  SolveOutcome outcome = SolveOutcome::MaxIter;
  Vector final_x;
  double final_f = 0.0;
  double final_grad_norm = 0.0;
  long iteration_count = 0;
  long skipped_updates = 0;
  long function_evals = 0;
};

// Quasi-Newton driver: d = -B_k^{-1} grad f, step by line search, optional
// secant perturbation, family update (skipped when the perturbed pair
// violates the curvature condition), until the gradient tolerance or the
// iteration cap is reached.
SolverTrace minimize(const Problem& problem, const Vector& x0,
                     const SolverConfig& cfg);

// Full trace serialization, with a header echoing the configuration.
std::string trace_to_json(const SolverTrace& trace, const SolverConfig& cfg,
                          const Problem& problem);

}  // namespace qn
