#include "lqropt/experiment.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "lqropt/generators.hpp"
#include "lqropt/problem_io.hpp"

namespace lqropt {

SpectralCalibration calibrate_slqr(const LqrProblem& P, const Gain& K0,
                                   double grad_tol, long max_iters) {
  if (P.kind != ProblemKind::SLQR) {
    throw std::invalid_argument("calibrate_slqr: requires an SLQR problem");
  }
  SpectralCalibration cal;
  cal.K_star = care_oracle(P, K0);
  cal.f_star = cost(P, cal.K_star);
  const double alpha0 = cost(P, K0);

  auto hessian_norm = [&P](const Gain& K) {
    const SymEig e = dense_sym_eig(assemble_dense_hessian(P, K));
    return e.eigenvalues.cwiseAbs().maxCoeff();
  };
  const SymEig at_opt = dense_sym_eig(assemble_dense_hessian(P, cal.K_star));
  cal.mu_hat = at_opt.eigenvalues(0);
  if (!(cal.mu_hat > 0.0)) {
    throw LqrError("calibrate_slqr: Hessian at the optimum is not positive");
  }

  // Smoothness along the region the iterates actually traverse: curvature
  // at the start, at the optimum, and on the segment between them. The
  // full-sublevel curvature (like the closed-form certificate) is orders of
  // magnitude larger near the stability boundary and would stall both
  // solvers in regions no descent trajectory visits.
  cal.L_hat = std::max(hessian_norm(K0),
                       at_opt.eigenvalues.cwiseAbs().maxCoeff());
  for (double s : {0.25, 0.5, 0.75}) {
    const Gain mid = cal.K_star + s * (K0 - cal.K_star);
    if (is_stabilizing(P, mid)) {
      cal.L_hat = std::max(cal.L_hat, hessian_norm(mid));
    }
  }

  cal.kappa_hat = cal.L_hat / cal.mu_hat;
  cal.gd_step = 1.0 / cal.L_hat;

  // d = sqrt(mu)/2 and T ~ 1/sqrt(L) put the per-step contraction
  // sqrt(1 - 2 d T) at the accelerated 1 - 1/sqrt(kappa) scale; the
  // 1/sqrt(L) cap keeps every linearized momentum mode inside the unit
  // circle (the mode map has determinant 1 - 2 d T regardless of the
  // curvature, so underdamped modes contract at sqrt(1 - 2 d T)).
  cal.accel.d = 0.5 * std::sqrt(cal.mu_hat);
  // eta must keep 1 - 2 d eta away from zero for the step-size bound.
  cal.accel.eta = std::min(1.0 / cal.L_hat, 0.25 / cal.accel.d);
  cal.accel.T = std::min(restart_step_bound(cal.L_hat, cal.accel.d,
                                           cal.accel.eta),
                         1.0 / std::sqrt(cal.L_hat));
  cal.accel.beta = 0.0;
  cal.accel.alpha1 = alpha0;
  cal.accel.grad_tol = grad_tol;
  cal.accel.max_iters = max_iters;
  return cal;
}

LqrProblem load_problem(const ExperimentConfig& cfg) {
  if (!cfg.problem_file.empty()) return read_problem(cfg.problem_file);
  if (cfg.generator == "chain") return gen_integrator_chain(cfg.gen_n);
  if (cfg.generator == "random-medium") {
    return gen_random_medium(cfg.gen_n, cfg.gen_m, cfg.gen_seed);
  }
  if (cfg.generator == "olqr-chain") return gen_olqr_chain(cfg.gen_n);
  throw std::invalid_argument("no problem source configured");
}

Gain default_initial_gain(const LqrProblem& P) {
  const Gain zero = Gain::Zero(P.m(), P.r());
  if (is_stabilizing(P, zero)) return zero;
  if (P.m() == 1 && P.kind == ProblemKind::SLQR) {
    const Gain K = chain_binomial_gain(static_cast<int>(P.n()));
    if (is_stabilizing(P, K)) return K;
  }
  throw NotStabilizing("no default stabilizing gain for this problem");
}

namespace {

RunSummary summarize(const std::string& solver, std::uint64_t seed,
                     const Trace& trace, const std::string& trace_file) {
  RunSummary s;
  s.solver = solver;
  s.seed = seed;
  s.status = to_string(trace.status);
  s.trace_file = trace_file;
  if (!trace.rows.empty()) {
    const TraceRow& last = trace.rows.back();
    s.final_f = last.f;
    s.final_grad_norm = last.grad_norm;
    s.iters = last.iter;
    s.wall_ms = last.wall_ms;
    long restarts = 0;
    for (const TraceRow& r : trace.rows) restarts += r.restart;
    s.restarts = restarts;
  }
  return s;
}

}  // namespace

Report run_experiment(const ExperimentConfig& cfg) {
  const LqrProblem P = load_problem(cfg);
  Gain K0 = cfg.K0.size() > 0 ? cfg.K0 : default_initial_gain(P);
  if (K0.rows() != P.m() || K0.cols() != P.r()) {
    throw std::invalid_argument("run_experiment: K0 has wrong shape");
  }
  if (!is_stabilizing(P, K0)) {
    throw NotStabilizing("run_experiment: K0 is not stabilizing");
  }

  if (!cfg.out_dir.empty()) {
    std::filesystem::create_directories(cfg.out_dir);
  }

  Report report;
  const double f0 = cost(P, K0);
  try {
    report.constants_at_start = constants(P, f0);
    report.has_constants = true;
  } catch (const LqrError&) {
    report.has_constants = false;
  }

  // Calibrate once; reused by gd / accel / hybrid on SLQR problems.
  bool calibrated = false;
  SpectralCalibration cal;
  auto ensure_calibration = [&]() {
    if (!calibrated) {
      cal = calibrate_slqr(P, K0, cfg.grad_tol, cfg.max_iters);
      calibrated = true;
    }
  };
  auto echo_calibration = [&](Trace& t) {
    if (!calibrated) return;
    t.add_config("calibration", std::string("hessian-spectrum"));
    t.add_config("L_hat", cal.L_hat);
    t.add_config("mu_hat", cal.mu_hat);
    t.add_config("kappa_hat", cal.kappa_hat);
    t.add_config("f_star", cal.f_star);
  };

  for (const std::string& solver : cfg.solvers) {
    for (const std::uint64_t seed : cfg.seeds) {
      RunSummary summary;
      const std::string trace_file =
          cfg.out_dir.empty()
              ? ""
              : cfg.out_dir + "/" + solver + "_seed" + std::to_string(seed) +
                    ".csv";
      try {
        if (solver == "gd") {
          const double step = cfg.gd_step > 0.0
                                  ? cfg.gd_step
                                  : (ensure_calibration(), cal.gd_step);
          SolveResult res =
              gd_solve(P, K0, step, cfg.grad_tol, cfg.max_iters);
          echo_calibration(res.trace);
          if (!trace_file.empty()) res.trace.write_csv(trace_file);
          summary = summarize(solver, seed, res.trace, trace_file);
        } else if (solver == "accel") {
          AccelConfig acfg;
          if (cfg.accel_T > 0.0) {
            acfg.T = cfg.accel_T;
            acfg.d = cfg.accel_d;
            acfg.eta = cfg.accel_eta;
            acfg.beta = cfg.accel_beta;
            acfg.alpha1 = f0;
            acfg.grad_tol = cfg.grad_tol;
            acfg.max_iters = cfg.max_iters;
          } else {
            ensure_calibration();
            acfg = cal.accel;
          }
          acfg.max_restarts = cfg.max_restarts;
          Gain start = K0;
          if (cfg.warm_start_gd) {
            ensure_calibration();
            SolveResult warm = gd_solve(P, K0, cal.gd_step,
                                        10.0 * cfg.grad_tol,
                                        std::min<long>(cfg.max_iters, 500));
            start = warm.K;
            acfg.alpha1 = cost(P, start);
          }
          SolveResult res = accel_solve(P, start, acfg);
          echo_calibration(res.trace);
          if (!trace_file.empty()) res.trace.write_csv(trace_file);
          summary = summarize(solver, seed, res.trace, trace_file);
        } else if (solver == "hybrid") {
          ensure_calibration();
          AccelConfig hcfg = cal.accel;
          hcfg.max_restarts = cfg.max_restarts;
          HybridResult res = simulate_hybrid_flow(
              P, K0, Matrix::Zero(P.m(), P.r()), hcfg, cfg.hybrid_horizon,
              cfg.hybrid_dt);
          echo_calibration(res.trace);
          if (!trace_file.empty()) res.trace.write_csv(trace_file);
          summary = summarize(solver, seed, res.trace, trace_file);
        } else if (solver == "a-olqr") {
          const ConstantsBundle bundle = constants(P, f0);
          AOlqrConfig ocfg;
          ocfg.eps = cfg.eps;
          ocfg.L1 = bundle.L1;
          ocfg.L2 = bundle.L2;
          ocfg.seed = seed;
          ocfg.fd_hvp = cfg.fd_hvp;
          ocfg.max_nag_restarts = 20;
          AOlqrResult res = a_olqr(P, K0, ocfg);
          if (!trace_file.empty()) res.trace.write_csv(trace_file);
          summary = summarize(solver, seed, res.trace, trace_file);
        } else if (solver == "care-oracle") {
          OracleStats stats;
          const Gain K_star = care_oracle(P, K0, &stats);
          Trace t;
          t.kind = TraceKind::Solver;
          t.add_config("solver", std::string("care-oracle"));
          const CostGradient cg = cost_and_gradient(P, K_star, &stats);
          t.status = RunStatus::Converged;
          TraceRow row;
          row.f = cg.f;
          row.grad_norm = cg.grad.norm();
          row.lyap_solves = stats.lyap_solves;
          t.rows.push_back(std::move(row));
          if (!trace_file.empty()) t.write_csv(trace_file);
          summary = summarize(solver, seed, t, trace_file);
        } else {
          throw std::invalid_argument("unknown solver: " + solver);
        }
      } catch (const std::exception& e) {
        summary.solver = solver;
        summary.seed = seed;
        summary.status = "Error";
        summary.error = e.what();
      }
      report.runs.push_back(std::move(summary));
    }
  }

  // Iterations-to-tolerance comparison over converged runs.
  long best = -1;
  for (const RunSummary& s : report.runs) {
    if (s.status != "Converged") continue;
    report.iterations_by_solver.emplace_back(s.solver, s.iters);
    if (best < 0 || s.iters < best) {
      best = s.iters;
      report.fastest_solver = s.solver;
    }
  }

  if (!cfg.out_dir.empty()) {
    write_report(report, cfg.out_dir + "/report.json");
  }
  return report;
}

std::string report_to_json(const Report& report) {
  nlohmann::json j;
  j["runs"] = nlohmann::json::array();
  for (const RunSummary& s : report.runs) {
    nlohmann::json r;
    r["solver"] = s.solver;
    r["seed"] = s.seed;
    r["status"] = s.status;
    r["final_f"] = s.final_f;
    r["final_grad_norm"] = s.final_grad_norm;
    r["iters"] = s.iters;
    r["restarts"] = s.restarts;
    r["wall_ms"] = s.wall_ms;
    r["trace_file"] = s.trace_file;
    if (!s.error.empty()) r["error"] = s.error;
    j["runs"].push_back(std::move(r));
  }
  if (report.has_constants) {
    const ConstantsBundle& b = report.constants_at_start;
    nlohmann::json c;
    c["alpha"] = b.alpha;
    c["xi"] = b.xi;
    c["zeta"] = b.zeta;
    c["kappa1"] = b.kappa1;
    c["kappa2"] = b.kappa2;
    c["kappa3"] = b.kappa3;
    c["kappa4"] = b.kappa4;
    c["L1"] = b.L1;
    c["L2"] = b.L2;
    if (b.mu) c["mu"] = *b.mu;
    if (b.kappa_cond) c["kappa"] = *b.kappa_cond;
    j["constants"] = std::move(c);
  } else {
    j["constants"] = nullptr;
  }
  nlohmann::json cmp;
  cmp["iterations"] = nlohmann::json::array();
  for (const auto& [solver, iters] : report.iterations_by_solver) {
    cmp["iterations"].push_back({{"solver", solver}, {"iters", iters}});
  }
  cmp["fastest"] = report.fastest_solver;
  j["comparison"] = std::move(cmp);
  return j.dump(2) + "\n";
}

void write_report(const Report& report, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open report file " + path);
  out << report_to_json(report);
}

}  // namespace lqropt
