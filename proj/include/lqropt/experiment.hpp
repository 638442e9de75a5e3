#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lqropt/olqr_solver.hpp"
#include "lqropt/slqr_solver.hpp"

namespace lqropt {

// Step sizes and damping for the benchmark solvers, calibrated from the
// measured Hessian spectrum: mu and L are the extreme eigenvalues of the
// Hessian at the optimum (the quantities whose ratio defines the condition
// number of the accelerated rate), and the smoothness estimate additionally
// covers the curvature at the starting point. The closed-form certified
// constants remain available through constants(); they are sound but far too
// conservative to produce runnable step sizes on the chain benchmarks.
struct SpectralCalibration {
  Gain K_star;
  double f_star = 0.0;
  double L_hat = 0.0;   // max Hessian eigenvalue over {K0, K*}
  double mu_hat = 0.0;  // smallest Hessian eigenvalue at K*
  double kappa_hat = 0.0;
  double gd_step = 0.0;  // 1 / L_hat
  AccelConfig accel;     // d = 1/(2 sqrt(kappa)), eta = 1/L_hat, T from the
                         // certified step bound at L_hat
};

SpectralCalibration calibrate_slqr(const LqrProblem& P, const Gain& K0,
                                   double grad_tol, long max_iters);

struct ExperimentConfig {
  // Problem source: a file, or a named generator.
  std::string problem_file;
  std::string generator;  // "chain" | "random-medium" | "olqr-chain"
  int gen_n = 3;
  int gen_m = 1;
  std::uint64_t gen_seed = 0;

  Gain K0;  // empty: zero gain if stabilizing, else the binomial chain gain

  std::vector<std::string> solvers;  // gd | accel | hybrid | a-olqr | care-oracle
  std::vector<std::uint64_t> seeds{0};
  std::string out_dir;  // trace CSVs and report.json land here

  double grad_tol = 1e-6;
  long max_iters = 2000000;
  long max_restarts = 100;
  bool fd_hvp = false;
  bool warm_start_gd = false;
  double eps = 1e-3;  // a-olqr target accuracy

  // Optional manual overrides; 0 means calibrate automatically.
  double gd_step = 0.0;
  double accel_T = 0.0;
  double accel_d = 0.0;
  double accel_eta = 0.0;
  double accel_beta = 0.0;
  double hybrid_horizon = 20.0;
  double hybrid_dt = 1e-3;
};

struct RunSummary {
  std::string solver;
  std::uint64_t seed = 0;
  std::string status;
  double final_f = 0.0;
  double final_grad_norm = 0.0;
  long iters = 0;
  long restarts = 0;
  double wall_ms = 0.0;
  std::string trace_file;
  std::string error;  // empty on success
};

struct Report {
  std::vector<RunSummary> runs;
  bool has_constants = false;
  ConstantsBundle constants_at_start;  // bundle at alpha = f(K0)
  // Comparison across solvers: iterations to reach the tolerance.
  std::vector<std::pair<std::string, long>> iterations_by_solver;
  std::string fastest_solver;
};

// Executes every (solver, seed) pair, writing one trace CSV per run plus
// report.json when out_dir is set. Per-run failures are recorded in the
// report and execution continues.
Report run_experiment(const ExperimentConfig& cfg);

std::string report_to_json(const Report& report);
void write_report(const Report& report, const std::string& path);

// Resolves the configured problem source.
LqrProblem load_problem(const ExperimentConfig& cfg);

// Default starting gain: zero if stabilizing, else the binomial chain gain
// for single-input chain problems.
Gain default_initial_gain(const LqrProblem& P);

}  // namespace lqropt
