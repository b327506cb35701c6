// qn: quasi-Newton experiment CLI.
// Subcommands: solve, influence, repro table2|table3, validate.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <algorithm>
#include <CLI11.hpp>

#include "qn/errors.hpp"
#include "qn/experiments.hpp"
#include "qn/names.hpp"
#include "qn/potential.hpp"
#include "qn/rng.hpp"
#include "qn/solver.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNumerical = 2;

std::string join_args(int argc, char** argv) {
  std::ostringstream os;
  for (int i = 0; i < argc; ++i) os << (i ? " " : "") << argv[i];
  return os.str();
}

// Flat key=value config support: file entries become "--key=value" tokens
// appended after the explicit arguments, skipping keys already given, so
// command-line flags win over the file.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::string config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config_path = args[i + 1];
      args.erase(args.begin() + i, args.begin() + i + 2);
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
      args.erase(args.begin() + i);
      break;
    }
  }
  if (config_path.empty()) return args;
  std::ifstream in(config_path);
  if (!in) throw std::invalid_argument("cannot open config file " + config_path);
  auto given = [&](const std::string& key) {
    const std::string plain = "--" + key;
    const std::string prefixed = plain + "=";
    for (const auto& a : args) {
      if (a == plain || a.rfind(prefixed, 0) == 0) return true;
    }
    return false;
  };
  std::string line;
  while (std::getline(in, line)) {
    const std::size_t start = line.find_first_not_of(" \t");
    if (start == std::string::npos || line[start] == '#') continue;
    const std::size_t eq = line.find('=', start);
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line is not key=value: " + line);
    }
    const std::string key = line.substr(start, eq - start);
    const std::string value = line.substr(eq + 1);
    if (!given(key)) args.push_back("--" + key + "=" + value);
  }
  return args;
}


// table2.csv -> table2_means.csv
std::string means_path(const std::string& out) {
  const std::size_t dot = out.rfind('.');
  if (dot == std::string::npos || out.find('/', dot) != std::string::npos) {
    return out + "_means";
  }
  return out.substr(0, dot) + "_means" + out.substr(dot);
}

struct SolveOptions {
  std::string problem = "p1";
  int n = 100;
  std::string family = "vbfgs-b";
  std::string potential = "neglog";
  std::string ls = "wolfe";
  double c1 = 1e-4;
  double c2 = 0.9;
  double tolx = 1e-12;
  int max_evals = 500;
  double h = 0.0;
  std::string noise_advance = "perturbed";
  std::uint64_t seed = 0;
  long max_iter = 50000;
  double grad_tol = 0.0;
  std::string x0 = "gauss";
  std::string trace_path;
  bool verbose = false;
};

int run_solve(const SolveOptions& opt) {
  const qn::Problem problem =
      qn::make_problem(qn::parse_problem(opt.problem), opt.n);
  const qn::Potential pot = qn::parse_potential(opt.potential);
  const qn::UpdateFamily family = qn::parse_family(opt.family, pot);

  // every scaling function in play must be admissible at this dimension
  for (const qn::Potential* p : {&family.potential(), &family.potential2()}) {
    const auto report = qn::validate(*p, opt.n);
    if (!report.pass()) {
      std::cerr << report.summary();
      std::cerr << "potential is not admissible for n=" << opt.n << "\n";
      return kExitNumerical;
    }
  }

  qn::SolverConfig cfg(family);
  cfg.linesearch.mode = opt.ls == "exact" ? qn::LineSearchMode::NearExact
                                          : qn::LineSearchMode::Wolfe;
  cfg.linesearch.c1 = opt.c1;
  cfg.linesearch.c2 = opt.c2;
  cfg.linesearch.tol_x = opt.tolx;
  cfg.linesearch.max_evals = opt.max_evals;
  cfg.noise_h = opt.h;
  cfg.noise_advance = opt.noise_advance == "nominal"
                          ? qn::NoiseAdvance::Nominal
                          : qn::NoiseAdvance::Perturbed;
  cfg.seed = opt.seed;
  cfg.max_iter = opt.max_iter;
  cfg.grad_tol = opt.grad_tol;

  qn::Vector x0;
  if (opt.x0 == "zero") {
    x0 = qn::Vector::Zero(opt.n);
  } else {
    qn::Rng rng(qn::derive_seed(opt.seed, {0x783073ull}));
    x0 = rng.gaussian_vector(opt.n, std::sqrt(10.0));
  }

  const qn::SolverTrace trace = qn::minimize(problem, x0, cfg);
  if (opt.verbose) {
    for (const auto& r : trace.iterations) {
      std::cout << "k=" << r.k << " f=" << r.f << " |g|=" << r.grad_norm
                << " alpha=" << r.alpha << " logdetB=" << r.logdet_b
                << (r.update_skipped ? " (skip)" : "") << "\n";
    }
  }
  std::cout << problem.name << " n=" << opt.n << " family=" << cfg.family.name()
            << ": " << qn::outcome_name(trace.outcome) << " in "
            << trace.iteration_count << " iterations, final ||grad|| = "
            << trace.final_grad_norm << ", f = " << trace.final_f << "\n";
  if (!opt.trace_path.empty()) {
    std::ofstream out(opt.trace_path);
    if (!out) throw std::runtime_error("cannot open " + opt.trace_path);
    out << qn::trace_to_json(trace, cfg, problem);
  }
  return trace.outcome == qn::SolveOutcome::Converged ? kExitOk
                                                      : kExitNumerical;
}

struct InfluenceOptions {
  std::string family = "vbfgs-b";
  std::string potential = "neglog";
  int n = 10;
  std::string probe = "fixed-det";
  double d = 1.0;
  std::string values = "1,10,100,1000";
  double eps = 1e-4;
  std::uint64_t seed = 7;
  std::string out = "probe.csv";
  bool gnuplot = false;
  std::string invocation;
};

int run_influence(const InfluenceOptions& opt) {
  const qn::Potential pot = qn::parse_potential(opt.potential);
  const qn::UpdateFamily family = qn::parse_family(opt.family, pot);
  qn::AdversarialKind kind;
  if (opt.probe == "fixed-det") {
    kind = qn::AdversarialKind::FixedDetUnbounded;
  } else if (opt.probe == "uniform-scaling") {
    kind = qn::AdversarialKind::UniformScaling;
  } else if (opt.probe == "growing-spike") {
    kind = qn::AdversarialKind::GrowingSpike;
  } else {
    throw CLI::ValidationError("unknown probe '" + opt.probe + "'");
  }
  const auto rows = qn::run_influence_probe(
      family, opt.n, kind, opt.d, qn::parse_double_list(opt.values), opt.eps,
      opt.seed);
  qn::write_probe_csv(rows, opt.eps, opt.invocation, opt.out);
  if (opt.gnuplot) {
    qn::write_gnuplot_script(opt.out, opt.out + ".gp",
                             "influence probe " + family.name());
  }
  for (const auto& r : rows) {
    std::cout << "param=" << r.param << " closed=" << r.closed_form_norm
              << " fd=" << r.fd_norm << " agreement=" << r.agreement << "\n";
  }
  std::cout << "wrote " << opt.out << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-scaling quasi-Newton updates from matrix Bregman "
               "divergences: solver, robustness probes, and experiment "
               "reproduction"};
  app.require_subcommand(1);
  // --h is the noise-level flag, so help is long-form only
  app.set_help_flag("--help", "print help");
  app.footer(
      "Every subcommand also accepts --config <file> with flat key=value\n"
      "lines mirroring its flags; explicit flags win over the file.\n"
      "QN_THREADS caps the experiment worker count.");
  const std::string invocation = join_args(argc, argv);

  // solve
  SolveOptions solve_opt;
  auto* solve = app.add_subcommand("solve", "Minimize a benchmark problem");
  solve->set_help_flag("--help", "print help");
  solve->add_option("--problem", solve_opt.problem, "p1 | p2");
  solve->add_option("--n", solve_opt.n, "dimension")->check(CLI::Range(2, 100000));
  solve->add_option("--family", solve_opt.family,
                    "vbfgs-b | vdfp-b | vbfgs-h | vdfp-h | broyden:...");
  solve->add_option("--potential", solve_opt.potential,
                    "neglog | power:gamma=<g> | bounded:a=<a>,b=<b>");
  solve->add_option("--ls", solve_opt.ls, "wolfe | exact");
  solve->add_option("--c1", solve_opt.c1, "sufficient decrease constant");
  solve->add_option("--c2", solve_opt.c2, "curvature constant");
  solve->add_option("--tolx", solve_opt.tolx, "near-exact x tolerance");
  solve->add_option("--max-evals", solve_opt.max_evals,
                    "line search evaluation budget");
  solve->add_option("--h", solve_opt.h, "step noise level, eps ~ U[-h,h]");
  solve->add_option("--noise-advance", solve_opt.noise_advance,
                    "perturbed | nominal");
  solve->add_option("--seed", solve_opt.seed, "random seed");
  solve->add_option("--max-iter", solve_opt.max_iter, "iteration cap");
  solve->add_option("--grad-tol", solve_opt.grad_tol,
                    "gradient tolerance (default n*1e-5)");
  solve->add_option("--x0", solve_opt.x0, "gauss | zero");
  solve->add_option("--trace", solve_opt.trace_path, "write JSON trace here");
  solve->add_flag("--verbose", solve_opt.verbose, "per-iteration log");

  // influence
  InfluenceOptions infl_opt;
  auto* infl = app.add_subcommand(
      "influence", "Influence-function probes along adversarial sequences");
  infl->set_help_flag("--help", "print help");
  infl->add_option("--family", infl_opt.family, "update family");
  infl->add_option("--potential", infl_opt.potential, "potential");
  infl->add_option("--n", infl_opt.n, "dimension")->check(CLI::Range(3, 5000));
  infl->add_option("--probe", infl_opt.probe,
                   "fixed-det | uniform-scaling | growing-spike");
  infl->add_option("--d", infl_opt.d, "fixed determinant");
  infl->add_option("--a", infl_opt.values, "sequence parameters, e.g. 1,10,100");
  infl->add_option("--eps", infl_opt.eps, "finite-difference step");
  infl->add_option("--seed", infl_opt.seed, "random seed");
  infl->add_option("--out", infl_opt.out, "output CSV path");
  infl->add_flag("--gnuplot", infl_opt.gnuplot, "also write a plot script");

  // repro
  auto* repro = app.add_subcommand("repro", "Reproduce the noise studies");
  repro->require_subcommand(1);

  std::string t2_dims = "10,100";
  int t2_trials = 20;
  std::uint64_t t2_seed = 42;
  std::string t2_out = "table2.csv";
  bool t2_full = false;
  bool t2_debug_consistent = false;
  bool t2_gnuplot = false;
  auto* t2 = repro->add_subcommand("table2", "update-noise study");
  t2->add_option("--dims", t2_dims, "dimensions, comma separated");
  t2->add_option("--trials", t2_trials, "trials per cell")->check(CLI::Range(1, 100000));
  t2->add_option("--seed", t2_seed, "master seed");
  t2->add_option("--out", t2_out, "output CSV path");
  t2->add_flag("--full", t2_full, "include the n=500,1000 cells");
  t2->add_flag("--debug-consistent", t2_debug_consistent,
               "force ybar = y (influence must vanish)");
  t2->add_flag("--gnuplot", t2_gnuplot, "also write a plot script");

  std::string t3_problems = "p1,p2";
  std::string t3_dims = "100";
  std::string t3_h = "0,0.1,0.2,0.3";
  int t3_runs = 20;
  std::uint64_t t3_seed = 42;
  std::string t3_out = "table3.csv";
  std::string t3_advance = "perturbed";
  auto* t3 = repro->add_subcommand("table3", "solver-noise study");
  t3->set_help_flag("--help", "print help");
  t3->add_option("--problems", t3_problems, "problems, comma separated");
  t3->add_option("--dims", t3_dims, "dimensions, comma separated");
  t3->add_option("--h", t3_h, "noise levels, comma separated");
  t3->add_option("--runs", t3_runs, "runs per cell")->check(CLI::Range(1, 100000));
  t3->add_option("--seed", t3_seed, "master seed");
  t3->add_option("--out", t3_out, "output CSV path");
  t3->add_option("--noise-advance", t3_advance, "perturbed | nominal");
  bool t3_gnuplot = false;
  t3->add_flag("--gnuplot", t3_gnuplot, "also write a plot script");

  // validate
  std::string val_potential = "neglog";
  int val_n = 10;
  double val_grid_min = 1e-8, val_grid_max = 1e8;
  int val_grid_points = 200;
  auto* val = app.add_subcommand("validate", "Check the potential conditions");
  val->add_option("--potential", val_potential, "potential")->required();
  val->add_option("--n", val_n, "dimension")->required()->check(CLI::Range(1, 100000));
  val->add_option("--grid-min", val_grid_min, "grid lower end");
  val->add_option("--grid-max", val_grid_max, "grid upper end");
  val->add_option("--grid-points", val_grid_points, "grid size");

  try {
    std::vector<std::string> args = expand_config(argc, argv);
    std::reverse(args.begin(), args.end());  // CLI11 consumes from the back
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // usage errors exit 1; help exits 0
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (solve->parsed()) return run_solve(solve_opt);

    if (infl->parsed()) {
      infl_opt.invocation = invocation;
      return run_influence(infl_opt);
    }

    if (t2->parsed()) {
      qn::Table2Config cfg;
      cfg.dims = qn::parse_int_list(t2_dims);
      if (t2_full && t2->count("--dims") == 0) cfg.dims = {10, 100, 500, 1000};
      cfg.trials = t2_trials;
      cfg.seed = t2_seed;
      cfg.force_consistent = t2_debug_consistent;
      cfg.invocation = invocation;
      const auto result = qn::run_table2(cfg);
      qn::write_table2_csv(result, t2_out);
      const std::string means = means_path(t2_out);
      qn::write_table2_means_csv(result, means);
      if (t2_gnuplot) {
        qn::write_gnuplot_script(t2_out, t2_out + ".gp", "approximate influence");
      }
      long failures = 0;
      for (const auto& r : result.records) {
        if (!r.error.empty()) ++failures;
      }
      std::cout << "wrote " << t2_out << " and " << means << " ("
                << result.records.size() << " records, " << failures
                << " failed trials)\n";
      return kExitOk;
    }

    if (t3->parsed()) {
      qn::Table3Config cfg;
      cfg.problems.clear();
      {
        std::istringstream in(t3_problems);
        std::string item;
        while (std::getline(in, item, ',')) {
          cfg.problems.push_back(qn::parse_problem(item));
        }
      }
      cfg.dims = qn::parse_int_list(t3_dims);
      cfg.h_values = qn::parse_double_list(t3_h);
      cfg.runs = t3_runs;
      cfg.seed = t3_seed;
      cfg.noise_advance = t3_advance == "nominal" ? qn::NoiseAdvance::Nominal
                                                  : qn::NoiseAdvance::Perturbed;
      cfg.invocation = invocation;
      const auto result = qn::run_table3(cfg);
      qn::write_table3_csv(result, t3_out);
      const std::string means = means_path(t3_out);
      qn::write_table3_means_csv(result, means);
      if (t3_gnuplot) {
        qn::write_gnuplot_script(t3_out, t3_out + ".gp", "iteration counts");
      }
      std::cout << "wrote " << t3_out << " and " << means;
      if (result.max_iter_hits() > 0) {
        std::cout << " (warning: " << result.max_iter_hits()
                  << " runs hit the iteration cap)";
      }
      std::cout << "\n";
      return kExitOk;
    }

    if (val->parsed()) {
      const qn::Potential pot = qn::parse_potential(val_potential);
      const auto report = qn::validate(
          pot, val_n, qn::log_grid(val_grid_min, val_grid_max, val_grid_points));
      std::cout << report.summary();
      return report.pass() ? kExitOk : kExitNumerical;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const qn::Error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitOk;
}
