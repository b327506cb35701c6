#include "qn/solver.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "qn/errors.hpp"
#include "qn/rng.hpp"

namespace qn {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

std::string outcome_name(SolveOutcome o) {
  switch (o) {
    case SolveOutcome::Converged:
      return "converged";
    case SolveOutcome::MaxIter:
      return "max-iter";
    case SolveOutcome::LineSearchFailure:
      return "line-search-failure";
  }
  return "";
}

SolverTrace minimize(const Problem& problem, const Vector& x0,
                     const SolverConfig& cfg) {
  if (x0.size() != problem.n) {
    throw std::invalid_argument("minimize: x0 dimension mismatch");
  }
  validate_params(cfg.linesearch);
  if (cfg.noise_h < 0.0) {
    throw std::invalid_argument("minimize: noise level h must be >= 0");
  }
  const int n = problem.n;
  const double grad_tol = cfg.grad_tol > 0.0 ? cfg.grad_tol : n * 1e-5;

  SpdCholesky state = [&] {
    if (!cfg.b0) return SpdCholesky::identity(n);
    if (cfg.b0->dim() != n) {
      throw std::invalid_argument("minimize: b0 dimension mismatch");
    }
    return cfg.family.inverse_state() ? cfg.b0->inverse() : *cfg.b0;
  }();

  Rng rng(derive_seed(cfg.seed, {0x716e6c73ull}));

  SolverTrace trace;
  Vector x = x0;
  Evaluation cur = eval(problem, x);
  trace.function_evals = 1;

  long ls_fail_streak = 0;
  long k = 0;
  SolveOutcome outcome = SolveOutcome::MaxIter;

  while (true) {
    const double gnorm = cur.g.norm();
    if (gnorm <= grad_tol) {
      outcome = SolveOutcome::Converged;
      break;
    }
    if (k >= cfg.max_iter) {
      outcome = SolveOutcome::MaxIter;
      break;
    }

    const Vector d = cfg.family.inverse_state() ? Vector(-state.apply(cur.g))
                                                : Vector(-state.solve(cur.g));
    const double slope0 = cur.g.dot(d);
    IterationRecord rec{k, cur.f, gnorm, 0.0, kNaN,
                        cfg.family.inverse_state() ? -state.logdet()
                                                   : state.logdet(),
                        false};

    auto phi = [&](double a) {
      ++trace.function_evals;
      return problem.f(x + a * d);
    };
    auto dphi = [&](double a) { return problem.grad(x + a * d).dot(d); };

    LineSearchResult ls;
    bool ls_ok = slope0 < 0.0;
    if (ls_ok) {
      if (cfg.linesearch.mode == LineSearchMode::Wolfe) {
        ls = wolfe_search(phi, dphi, cfg.linesearch);
      } else {
        int evals = 0;
        const double amax = expand_bracket(phi, cur.f, evals);
        ls = near_exact_search(phi, amax, cfg.linesearch);
        ls.evals += evals;
      }
      ls_ok = ls.alpha > 0.0 && ls.phi < cur.f;
    }
    if (!ls_ok) {
      ++ls_fail_streak;
      rec.update_skipped = true;
      trace.iterations.push_back(rec);
      ++k;
      if (ls_fail_streak >= 3) {
        outcome = SolveOutcome::LineSearchFailure;
        break;
      }
      continue;
    }
    ls_fail_streak = 0;
    rec.alpha = ls.alpha;

    Vector step = ls.alpha * d;
    if (cfg.noise_h > 0.0) {
      const double eps = rng.uniform(-cfg.noise_h, cfg.noise_h);
      step *= (1.0 + eps);
    }

    // The perturbed pair drives the update in either advance mode.
    Vector x_next;
    Vector g_at_perturbed;
    if (cfg.noise_advance == NoiseAdvance::Perturbed || cfg.noise_h == 0.0) {
      x_next = x + step;
      g_at_perturbed = problem.grad(x_next);
    } else {
      x_next = x + ls.alpha * d;
      g_at_perturbed = problem.grad(x + step);
      ++trace.function_evals;
    }
    SecantPair pair{step, g_at_perturbed - cur.g};

    if (pair.curvature_ok()) {
      auto up = family_update(cfg.family, state, pair);
      state = std::move(up.state);
      rec.theta = up.theta;
    } else {
      rec.update_skipped = true;
      ++trace.skipped_updates;
    }
    trace.iterations.push_back(rec);

    x = std::move(x_next);
    cur = eval(problem, x);
    ++trace.function_evals;
    ++k;
  }

  trace.outcome = outcome;
  trace.final_x = std::move(x);
  trace.final_f = cur.f;
  trace.final_grad_norm = cur.g.norm();
  trace.iteration_count = k;
  return trace;
}

std::string trace_to_json(const SolverTrace& trace, const SolverConfig& cfg,
                          const Problem& problem) {
  nlohmann::ordered_json j;
  j["config"] = {
      {"problem", problem.name},
      {"n", problem.n},
      {"family", cfg.family.name()},
      {"line_search",
       cfg.linesearch.mode == LineSearchMode::Wolfe ? "wolfe" : "exact"},
      {"c1", cfg.linesearch.c1},
      {"c2", cfg.linesearch.c2},
      {"tol_x", cfg.linesearch.tol_x},
      {"grad_tol", cfg.grad_tol > 0.0 ? cfg.grad_tol : problem.n * 1e-5},
      {"max_iter", cfg.max_iter},
      {"h", cfg.noise_h},
      {"noise_advance",
       cfg.noise_advance == NoiseAdvance::Perturbed ? "perturbed" : "nominal"},
      {"seed", cfg.seed},
  };
  nlohmann::ordered_json iters = nlohmann::ordered_json::array();
  for (const auto& r : trace.iterations) {
    nlohmann::ordered_json item;
    item["k"] = r.k;
    item["f"] = r.f;
    item["grad_norm"] = r.grad_norm;
    item["alpha"] = r.alpha;
    if (std::isfinite(r.theta)) {
      item["theta"] = r.theta;
    } else {
      item["theta"] = nullptr;
    }
    item["logdet_b"] = r.logdet_b;
    item["skipped"] = r.update_skipped;
    iters.push_back(std::move(item));
  }
  j["iterations"] = std::move(iters);
  j["outcome"] = outcome_name(trace.outcome);
  j["iteration_count"] = trace.iteration_count;
  j["skipped_updates"] = trace.skipped_updates;
  j["function_evals"] = trace.function_evals;
  j["final_f"] = trace.final_f;
  j["final_grad_norm"] = trace.final_grad_norm;
  j["final_x"] = std::vector<double>(trace.final_x.data(),
                                     trace.final_x.data() + trace.final_x.size());
  return j.dump(2);
}

}  // namespace qn
