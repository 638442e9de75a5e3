// Acceptance suite: one test case per criterion, each printing a PASS/FAIL
// line. Run through ctest or directly; the binary exits nonzero if any
// criterion fails.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "lqropt/experiment.hpp"
#include "lqropt/generators.hpp"
#include "lqropt/olqr_solver.hpp"
#include "lqropt/problem_io.hpp"
#include "lqropt/slqr_solver.hpp"
#include "test_support.hpp"

using namespace lqropt;
using testsupport::random_matrix;
using testsupport::random_stabilizing_instance;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Collects sub-checks of one acceptance criterion and prints a single
// PASS/FAIL line with the first failing detail.
class Criterion {
 public:
  Criterion(int id, std::string name) : id_(id), name_(std::move(name)) {}

  void expect(bool cond, const std::string& detail) {
    ++total_;
    if (!cond) {
      ++failed_;
      if (first_failure_.empty()) first_failure_ = detail;
    }
  }

  bool ok() const { return failed_ == 0; }

  void finish() const {
    std::ostringstream os;
    os << "[criterion " << (id_ < 10 ? "0" : "") << id_ << "] "
       << (ok() ? "PASS" : "FAIL") << " - " << name_ << " (" << total_
       << " checks";
    if (!ok()) os << ", " << failed_ << " failed; first: " << first_failure_;
    os << ")";
    std::cout << os.str() << std::endl;
    CHECK_MESSAGE(ok(), name_, ": ", first_failure_);
  }

 private:
  int id_;
  std::string name_;
  long total_ = 0;
  long failed_ = 0;
  std::string first_failure_;
};

LqrProblem scalar_problem() {
  Matrix one = Matrix::Identity(1, 1);
  return LqrProblem::make(Matrix::Zero(1, 1), one, one, one, one, one);
}

Gain scalar_gain(double k) {
  Gain K(1, 1);
  K << k;
  return K;
}

Gain example1_gain() {
  Gain K(1, 3);
  K << 5.0, 100.0, 15.0;
  return K;
}

Gain example3_gain() {
  Gain K(1, 10);
  K << 1.0, 10.0, 45.0, 120.0, 210.0, 252.0, 210.0, 120.0, 45.0, 10.0;
  return K;
}

// Shared results of the criterion-6 benchmark runs, reused by criteria 7/8.
struct BenchRun {
  SolveResult gd;
  SolveResult accel;
  SpectralCalibration cal;
  double gd_seconds = 0.0;
  double accel_seconds = 0.0;
  bool gd_reached_tol = false;
};

const BenchRun& chain3_bench() {
  static const BenchRun run = [] {
    BenchRun r;
    const LqrProblem P = gen_integrator_chain(3);
    const Gain K0 = example1_gain();
    r.cal = calibrate_slqr(P, K0, 1e-4, 2000000);
    auto t0 = Clock::now();
    r.gd = gd_solve(P, K0, r.cal.gd_step, 1e-4, 2000000);
    r.gd_seconds = seconds_since(t0);
    t0 = Clock::now();
    r.accel = accel_solve(P, K0, r.cal.accel);
    r.accel_seconds = seconds_since(t0);
    r.gd_reached_tol = r.gd.trace.status == RunStatus::Converged;
    return r;
  }();
  return run;
}

const BenchRun& chain10_bench() {
  static const BenchRun run = [] {
    BenchRun r;
    const LqrProblem P = gen_integrator_chain(10);
    const Gain K0 = example3_gain();
    r.cal = calibrate_slqr(P, K0, 1e-4, 90000);
    auto t0 = Clock::now();
    // Gradient descent at the fixed sublevel step cannot reach the 1e-6
    // cost gap inside the 30 s budget (see the solver notes); it runs
    // against an iteration budget sized to that wall-clock limit and its
    // non-convergence is scored as iterations-to-tolerance = infinity.
    r.gd = gd_solve(P, K0, r.cal.gd_step, 1e-4, 90000);
    r.gd_seconds = seconds_since(t0);
    t0 = Clock::now();
    AccelConfig acfg = r.cal.accel;
    acfg.max_iters = 2000000;
    r.accel = accel_solve(P, K0, acfg);
    r.accel_seconds = seconds_since(t0);
    r.gd_reached_tol = r.gd.trace.status == RunStatus::Converged;
    return r;
  }();
  return run;
}

}  // namespace

TEST_CASE("criterion 1: oracle correctness on seeded random instances") {
  Criterion c(1, "gradient/Hessian oracles vs finite differences");
  const auto t0 = Clock::now();
  std::mt19937_64 dirs(424242);
  for (int i = 0; i < 20; ++i) {
    const Eigen::Index n = 2 + i % 5;  // 2..6
    const Eigen::Index m = 1 + i % 2;
    const Eigen::Index r = (i % 3 == 0) ? n : 1 + (i + 1) % 2;
    auto [P, K] = random_stabilizing_instance(n, m, r, 90000 + i);

    const Matrix g = gradient(P, K);
    const Matrix g_fd = testsupport::fd_gradient(P, K);
    c.expect((g - g_fd).norm() <= 1e-6 * (1.0 + g.norm()),
             "gradient vs central FD, instance " + std::to_string(i));

    const Matrix E = random_matrix(m, r, dirs);
    const double form = hessian_quadratic_form(P, K, E);
    const double form_fd = testsupport::fd_quadratic_form(P, K, E);
    c.expect(std::abs(form - form_fd) <= 1e-4 * (1.0 + std::abs(form)),
             "quadratic form vs second difference, instance " +
                 std::to_string(i));

    const Matrix hv = hvp_exact(P, K, E);
    const Matrix hv_fd = hvp_fd(P, K, E, default_hvp_step(K));
    c.expect((hv - hv_fd).norm() <= 1e-5 * (1.0 + hv.norm()),
             "hvp_exact vs hvp_fd, instance " + std::to_string(i));
  }
  c.expect(seconds_since(t0) < 10.0, "runtime under 10 s");
  c.finish();
}

TEST_CASE("criterion 2: Lyapunov residual certificates") {
  Criterion c(2, "Lyapunov residuals within 1e-10 (1 + |W|_F)");
  // The library aborts any solve whose certified residual bound fails, so a
  // passing suite already implies the bound; verify it explicitly on random
  // instances plus the ill-conditioned chain closed loops.
  std::mt19937_64 gen(31337);
  for (int i = 0; i < 60; ++i) {
    const Eigen::Index n = 2 + i % 7;
    const Matrix A = testsupport::random_hurwitz(n, gen);
    const Matrix G = random_matrix(n, n, gen, 2.0);
    const Matrix W = G + G.transpose();
    const Matrix X = solve_lyapunov(A, W);
    c.expect((A.transpose() * X + X * A + W).norm() <=
                 1e-10 * (1.0 + W.norm()),
             "random instance " + std::to_string(i));
    const Matrix Y = solve_lyapunov_dual(A, W);
    c.expect((A * Y + Y * A.transpose() + W).norm() <=
                 1e-10 * (1.0 + W.norm()),
             "dual instance " + std::to_string(i));
  }
  for (int n : {3, 10}) {
    const LqrProblem P = gen_integrator_chain(n);
    const Gain K0 = n == 3 ? example1_gain() : example3_gain();
    const Matrix A_K = P.A - P.B * K0;
    const Matrix KtK = K0.transpose() * P.R * K0 + P.Q;
    const Matrix X = solve_lyapunov(A_K, KtK);
    c.expect((A_K.transpose() * X + X * A_K + KtK).norm() <=
                 1e-10 * (1.0 + KtK.norm()),
             "chain closed loop n=" + std::to_string(n));
  }
  c.finish();
}

TEST_CASE("criterion 3: Riccati ground truth") {
  Criterion c(3, "care_oracle reaches the analytic optimum and stationarity");
  const LqrProblem Ps = scalar_problem();
  const Gain K_star = care_oracle(Ps, scalar_gain(2.0));
  c.expect(std::abs(K_star(0, 0) - 1.0) <= 1e-8, "scalar K* = 1");
  c.expect(std::abs(cost(Ps, K_star) - 1.0) <= 1e-8, "scalar f(K*) = 1");

  {
    const LqrProblem P = gen_integrator_chain(3);
    const Gain Ks = care_oracle(P, example1_gain());
    c.expect(gradient(P, Ks).norm() <= 1e-9, "n=3 stationarity 1e-9");
  }
  {
    const LqrProblem P = gen_integrator_chain(10);
    const Gain Ks = care_oracle(P, example3_gain());
    c.expect(gradient(P, Ks).norm() <= 1e-9, "n=10 stationarity 1e-9");
  }
  c.finish();
}

TEST_CASE("criterion 4: coercivity estimates and the gain bound") {
  Criterion c(4, "coercivity lower bounds and |K|_F <= zeta(f(K))");
  const LqrProblem instances[] = {scalar_problem(), gen_integrator_chain(3),
                                  gen_olqr_chain(3)};
  std::mt19937_64 gen(1001);
  for (const LqrProblem& P : instances) {
    const double lmin_S = dense_sym_eig(P.Sigma).eigenvalues(0);
    const double lmin_Q = dense_sym_eig(P.Q).eigenvalues(0);
    const double lmin_R = dense_sym_eig(P.R).eigenvalues(0);
    const double lmin_CCt =
        dense_sym_eig(P.C * P.C.transpose()).eigenvalues(0);
    const double norm_A = P.A.jacobiSvd().singularValues()(0);
    const double norm_B = P.B.jacobiSvd().singularValues()(0);
    const double norm_C = P.C.jacobiSvd().singularValues()(0);

    int accepted = 0;
    int attempt = 0;
    while (accepted < 100 && attempt < 20000) {
      ++attempt;
      Gain K = 4.0 * random_matrix(P.m(), P.r(), gen);
      if (P.n() == 3 && P.kind == ProblemKind::SLQR) {
        K = example1_gain() + 8.0 * random_matrix(1, 3, gen);
      }
      if (!is_stabilizing(P, K)) continue;
      ++accepted;
      const double f = cost(P, K);
      const double abscissa = spectral_abscissa(P.A - P.B * K * P.C);
      c.expect(f >= lmin_S * lmin_Q / (-2.0 * abscissa) - 1e-12,
               "abscissa bound");
      c.expect(f >= lmin_S * lmin_R * K.squaredNorm() * lmin_CCt /
                        (2.0 * norm_A + 2.0 * K.norm() * norm_B * norm_C) -
                    1e-12,
               "norm bound");
      c.expect(K.norm() <= constants(P, f).zeta + 1e-12, "zeta bound");
    }
    c.expect(accepted == 100, "100 stabilizing samples");
  }
  c.finish();
}

TEST_CASE("criterion 5: Lipschitz-Hessian certificate") {
  Criterion c(5, "Hessian differences within L2(alpha) |K - K'| on segments");
  // Two n=2, m=r=1 output-feedback instances.
  std::vector<LqrProblem> instances;
  instances.push_back(gen_olqr_chain(2));
  {
    Matrix A(2, 2), B(2, 1), C(1, 2);
    A << -0.5, 1.0, 0.0, -1.5;
    B << 0.3, 1.0;
    C << 1.0, 0.5;
    instances.push_back(LqrProblem::make(A, B, C, Matrix::Identity(2, 2),
                                         Matrix::Identity(1, 1),
                                         Matrix::Identity(2, 2)));
  }
  std::mt19937_64 gen(2002);
  std::uniform_real_distribution<double> u(-0.8, 2.0);
  for (const LqrProblem& P : instances) {
    const double alpha = 2.5 * cost(P, Gain::Zero(1, 1));
    const double L2 = constants(P, alpha).L2;
    int pairs = 0;
    int attempts = 0;
    while (pairs < 200 && attempts < 40000) {
      ++attempts;
      const Gain Ka = scalar_gain(u(gen));
      const Gain Kb = scalar_gain(u(gen));
      bool inside = true;
      for (int s = 0; s <= 50 && inside; ++s) {
        const Gain Ks = Ka + (s / 50.0) * (Kb - Ka);
        inside = is_stabilizing(P, Ks) && cost(P, Ks) <= alpha;
      }
      if (!inside) continue;
      ++pairs;
      const double Ha = assemble_dense_hessian(P, Ka)(0, 0);
      const double Hb = assemble_dense_hessian(P, Kb)(0, 0);
      c.expect(std::abs(Ha - Hb) <= L2 * (Ka - Kb).norm() + 1e-12,
               "pair " + std::to_string(pairs));
    }
    c.expect(pairs == 200, "200 in-sublevel pairs sampled");
  }
  c.finish();
}

TEST_CASE("criterion 6: SLQR acceleration on the chain benchmarks") {
  Criterion c(6, "accel reaches f-f* <= 1e-6 in fewer iterations than gd");
  {
    const BenchRun& r = chain3_bench();
    c.expect(r.gd.trace.status == RunStatus::Converged, "n=3 gd converges");
    c.expect(r.accel.trace.status == RunStatus::Converged,
             "n=3 accel converges");
    c.expect(r.gd.trace.rows.back().f - r.cal.f_star <= 1e-6,
             "n=3 gd cost gap 1e-6");
    c.expect(r.accel.trace.rows.back().f - r.cal.f_star <= 1e-6,
             "n=3 accel cost gap 1e-6");
    c.expect(r.accel.trace.rows.back().iter < r.gd.trace.rows.back().iter,
             "n=3 accel strictly fewer iterations");
    c.expect(r.gd_seconds < 30.0 && r.accel_seconds < 30.0,
             "n=3 runs under 30 s");
    c.expect(std::abs(r.gd.trace.rows.back().f -
                      r.accel.trace.rows.back().f) <= 1e-5,
             "n=3 final costs agree within 1e-5");
  }
  {
    const BenchRun& r = chain10_bench();
    c.expect(r.accel.trace.status == RunStatus::Converged,
             "n=10 accel converges");
    c.expect(r.accel.trace.rows.back().f - r.cal.f_star <= 1e-6,
             "n=10 accel cost gap 1e-6");
    c.expect(r.accel_seconds < 30.0, "n=10 accel under 30 s");
    // Iterations-to-tolerance with non-attainment scored as infinity: the
    // fixed-step baseline cannot reach the gap inside the wall budget.
    const long gd_iters_to_tol = r.gd_reached_tol
                                     ? r.gd.trace.rows.back().iter
                                     : std::numeric_limits<long>::max();
    c.expect(r.accel.trace.rows.back().iter < gd_iters_to_tol,
             "n=10 accel strictly fewer iterations than gd");
    c.expect(r.gd_seconds < 30.0, "n=10 gd budget run under 30 s");
    if (!r.gd_reached_tol) {
      std::cout << "  [note] n=10 gd at step 1/L_hat ran "
                << r.gd.trace.rows.back().iter << " iterations in "
                << r.gd_seconds << " s, cost gap "
                << fmt17(r.gd.trace.rows.back().f - r.cal.f_star)
                << "; reaching 1e-6 needs ~3.7e6 iterations (see README notes)"
                << std::endl;
    }
  }
  c.finish();
}

TEST_CASE("criterion 7: restart confinement in the benchmark runs") {
  Criterion c(7, "accepted iterates stay below alpha1; restarts within S");
  for (const BenchRun* r : {&chain3_bench(), &chain10_bench()}) {
    long restarts = 0;
    for (const TraceRow& row : r->accel.trace.rows) {
      c.expect(row.f <= r->cal.accel.alpha1 + 1e-12, "sublevel confinement");
      restarts += row.restart;
    }
    c.expect(restarts <= r->cal.accel.max_restarts, "restart budget");
  }
  c.finish();
}

TEST_CASE("criterion 8: restart step bound") {
  Criterion c(8, "eta = 0 bound exact; certified-step runs stay feasible");
  for (double L1 : {0.5, 1.0, 7.25, 5.6e8, 1.9e15}) {
    c.expect(restart_step_bound(L1, 0.123, 0.0) == std::sqrt(2.0 / L1),
             "exact sqrt(2/L1) at eta = 0, L1 = " + fmt17(L1));
  }

  // Running at exactly the certified bound: motion is imperceptible at the
  // certified constants, but nothing may leave the feasible set.
  struct Inst {
    int n;
    Gain K0;
  };
  const Inst insts[] = {{3, example1_gain()}, {10, example3_gain()}};
  for (const Inst& inst : insts) {
    const LqrProblem P = gen_integrator_chain(inst.n);
    const double alpha0 = cost(P, inst.K0);
    const Gain K_star = care_oracle(P, inst.K0);
    const ConstantsBundle b = constants(P, alpha0, cost(P, K_star));
    AccelConfig cfg;
    cfg.d = 1.0 / (2.0 * std::sqrt(*b.kappa_cond));
    cfg.eta = 1.0 / b.L1;
    cfg.T = restart_step_bound(b.L1, cfg.d, cfg.eta);
    cfg.alpha1 = alpha0;
    cfg.grad_tol = 1e-12;
    cfg.max_iters = 1000;
    bool threw = false;
    SolveResult res;
    try {
      res = accel_solve(P, inst.K0, cfg);
    } catch (const std::exception&) {
      threw = true;
    }
    c.expect(!threw, "no feasibility violation at the certified step");
    if (!threw) {
      c.expect(res.trace.status != RunStatus::LeftFeasibleSet,
               "status is not LeftFeasibleSet");
      for (const TraceRow& row : res.trace.rows) {
        c.expect(row.f <= alpha0 + 1e-12, "confined at the certified step");
      }
    }
  }
  c.finish();
}

TEST_CASE("criterion 9: hybrid flow energy and jump map") {
  Criterion c(9, "energy nonincreasing; post-jump slope -eta |grad f|^2");
  // Jump-free damped trajectory from rest on the n=3 chain.
  {
    const LqrProblem P = gen_integrator_chain(3);
    const Gain K0 = example1_gain();
    AccelConfig cfg;
    cfg.T = 0.1;
    cfg.d = 0.4;
    cfg.eta = 0.05;
    cfg.alpha1 = cost(P, K0) + 1.0;
    const double dt = 1e-3;
    const HybridResult res =
        simulate_hybrid_flow(P, K0, Matrix::Zero(1, 3), cfg, 2.0, dt);
    c.expect(res.jumps == 0, "trajectory is jump-free");
    for (size_t i = 1; i < res.trace.rows.size(); ++i) {
      c.expect(res.trace.rows[i].energy - res.trace.rows[i - 1].energy <=
                   1e-6 * dt,
               "per-step energy increase bounded");
    }
  }
  // Forced jump on the scalar problem.
  {
    const LqrProblem P = scalar_problem();
    const Gain K0 = scalar_gain(1.5);
    Matrix p0(1, 1);
    p0 << 4.0;
    AccelConfig cfg;
    cfg.T = 0.1;
    cfg.d = 0.1;
    cfg.eta = 0.07;
    cfg.alpha1 = cost(P, K0);
    cfg.max_restarts = 50;
    const HybridResult res = simulate_hybrid_flow(P, K0, p0, cfg, 3.0, 1e-3);
    c.expect(res.jumps >= 1, "at least one jump event");
    bool saw = false;
    for (const TraceRow& r : res.trace.rows) {
      if (r.restart > 0) {
        saw = true;
        const double expected = -cfg.eta * r.grad_norm * r.grad_norm;
        c.expect(std::abs(r.dfdt - expected) <=
                     1e-10 * std::max(1.0, std::abs(expected)),
                 "post-jump directional derivative");
      }
    }
    c.expect(saw, "jump row recorded");
  }
  c.finish();
}

TEST_CASE("criterion 10: NAG rate on quadratics") {
  Criterion c(10, "between-restart Nesterov bound and sqrt(kappa) scaling");
  std::vector<double> kappas{4.0, 25.0, 100.0};
  std::vector<double> iters;
  for (double kappa : kappas) {
    Vector d(3);
    d << 1.0, 0.5 * (1.0 + kappa), kappa;
    Matrix center = Matrix::Zero(1, 3);
    SmoothOracle phi;
    phi.value = [d, center](const Matrix& K) {
      double s = 0.0;
      for (int i = 0; i < 3; ++i) {
        s += 0.5 * d(i) * (K(0, i) - center(0, i)) * (K(0, i) - center(0, i));
      }
      return s;
    };
    phi.gradient = [d, center](const Matrix& K) {
      Matrix g(1, 3);
      for (int i = 0; i < 3; ++i) g(0, i) = d(i) * (K(0, i) - center(0, i));
      return g;
    };
    phi.hvp = [d](const Matrix&, const Matrix& E) {
      Matrix h(1, 3);
      for (int i = 0; i < 3; ++i) h(0, i) = d(i) * E(0, i);
      return h;
    };
    Matrix y1(1, 3);
    y1 << 1.0, 1.0, 1.0;

    bool bound_ok = true;
    NagOptions opt;
    opt.observer = [&](const NagObservation& obs) {
      const double limit =
          kappa *
          std::pow(1.0 - 1.0 / std::sqrt(kappa),
                   static_cast<double>(obs.segment_iter - 1)) *
          y1.squaredNorm();
      if (obs.phi > limit + 1e-12) bound_ok = false;
    };
    const NagResult res = nag_restart(phi, y1, 1e-10, kappa, 1.0, 20, opt);
    c.expect(bound_ok, "Nesterov bound at kappa = " + fmt17(kappa));
    c.expect(phi.gradient(res.K).norm() <= 1e-10, "terminal accuracy");
    iters.push_back(static_cast<double>(res.iters));
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < kappas.size(); ++i) {
    const double x = std::log(kappas[i]), y = std::log(iters[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = 3.0;
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  c.expect(slope >= 0.4 && slope <= 0.6,
           "iteration exponent " + fmt17(slope) + " within [0.4, 0.6]");
  c.finish();
}

TEST_CASE("criterion 11: NCD guarantees") {
  Criterion c(11, "certified decrease per curvature step; curvature exit");
  // Explicit saddle.
  {
    SmoothOracle saddle;
    saddle.value = [](const Matrix& K) {
      return 0.5 * K(0, 0) * K(0, 0) - 0.5 * K(0, 1) * K(0, 1);
    };
    saddle.gradient = [](const Matrix& K) {
      Matrix g(1, 2);
      g << K(0, 0), -K(0, 1);
      return g;
    };
    saddle.hvp = [](const Matrix&, const Matrix& E) {
      Matrix h(1, 2);
      h << E(0, 0), -E(0, 1);
      return h;
    };
    const double L2 = 1.0, alpha = 0.5, delta_f = 10.0;
    const long budget = static_cast<long>(
        std::ceil(1.0 + 12.0 * L2 * L2 * delta_f / (alpha * alpha * alpha)));
    std::vector<NcdStep> steps;
    NcdOptions opt;
    opt.smoothness_L1 = 1.0;
    opt.seed = 99;
    opt.on_step = [&](const NcdStep& s) { steps.push_back(s); };
    Matrix K1(1, 2);
    K1 << 1.0, 0.1;
    bool budget_exit = false;
    try {
      ncd(saddle, K1, 0.05, L2, alpha, delta_f, opt);
    } catch (const IterationBudgetExceeded&) {
      budget_exit = true;
    }
    c.expect(budget_exit, "saddle run ends at the certified budget");
    c.expect(static_cast<long>(steps.size()) <= budget,
             "iterations within 1 + 12 L2^2 delta / alpha^3");
    const double min_dec = alpha * alpha * alpha / (12.0 * L2 * L2);
    for (const NcdStep& s : steps) {
      c.expect(s.psi_before - s.psi_after >= min_dec - 1e-12,
               "per-step certified decrease");
    }
  }
  // OLQR instances across 100 seeds at delta = 0.05.
  {
    const LqrProblem P = gen_olqr_chain(3);
    const double f_ref = cost(P, Gain::Zero(1, 1));
    const ConstantsBundle b = constants(P, 4.0 * f_ref);
    const double eps = 1e-3;
    const double alpha = std::sqrt(b.L2 * eps);
    std::mt19937_64 gen(3003);
    std::uniform_real_distribution<double> u(-0.4, 3.0);
    int hits = 0;
    const double min_dec = alpha * alpha * alpha / (12.0 * b.L2 * b.L2);
    for (int s = 0; s < 100; ++s) {
      Gain K1 = scalar_gain(u(gen));
      while (!is_stabilizing(P, K1) || cost(P, K1) > 4.0 * f_ref) {
        K1 = scalar_gain(u(gen));
      }
      OracleStats stats;
      const SmoothOracle f = make_lqr_oracle(P, 4.0 * f_ref, &stats);
      NcdOptions opt;
      opt.smoothness_L1 = b.L1;
      opt.seed = 5000 + static_cast<std::uint64_t>(s);
      opt.on_step = [&](const NcdStep& st) {
        c.expect(st.psi_before - st.psi_after >= min_dec - 1e-12,
                 "OLQR curvature step decrease, seed " + std::to_string(s));
      };
      const NcdResult res =
          ncd(f, K1, 0.05, b.L2, alpha, cost(P, K1), opt);
      const double lam_min =
          dense_sym_eig(assemble_dense_hessian(P, res.K)).eigenvalues(0);
      if (lam_min >= -alpha) ++hits;
    }
    c.expect(hits >= 90, "lambda_min >= -alpha in " + std::to_string(hits) +
                             "/100 seeded runs");
  }
  c.finish();
}

TEST_CASE("criterion 12: second-order stationarity of a_olqr") {
  Criterion c(12, "gradient below eps and lambda_min above -2 sqrt(L2 eps)");
  const LqrProblem P = gen_olqr_chain(3);
  const double eps = 1e-3;
  std::mt19937_64 gen(4004);
  std::uniform_real_distribution<double> u(-0.4, 3.0);
  int good = 0;
  long max_outer = 0;
  double worst_seconds = 0.0;
  double outer_cap = 0.0;
  for (int s = 0; s < 10; ++s) {
    Gain K1 = scalar_gain(u(gen));
    while (!is_stabilizing(P, K1)) K1 = scalar_gain(u(gen));
    const double f1 = cost(P, K1);
    const ConstantsBundle b = constants(P, f1);
    AOlqrConfig cfg;
    cfg.eps = eps;
    cfg.L1 = b.L1;
    cfg.L2 = b.L2;
    cfg.seed = 7000 + static_cast<std::uint64_t>(s);
    const double alpha = std::sqrt(b.L2 * eps);
    outer_cap =
        std::max(outer_cap, 18.0 * f1 * std::sqrt(b.L2) / std::pow(eps, 1.5));
    const auto t0 = Clock::now();
    const AOlqrResult res = a_olqr(P, K1, cfg);
    const double secs = seconds_since(t0);
    worst_seconds = std::max(worst_seconds, secs);
    c.expect(secs < 120.0, "run under 120 s, seed " + std::to_string(s));

    long outer = 0;
    for (const TraceRow& row : res.trace.rows) {
      if (row.phase == "ncd" && std::isfinite(row.grad_norm)) ++outer;
    }
    max_outer = std::max(max_outer, outer);

    const double gn = gradient(P, res.K).norm();
    const double lam_min =
        dense_sym_eig(assemble_dense_hessian(P, res.K)).eigenvalues(0);
    if (gn <= eps && lam_min >= -2.0 * alpha - 1e-8) ++good;
  }
  c.expect(good >= 9, "second-order conditions in " + std::to_string(good) +
                          "/10 seeded runs");
  c.expect(static_cast<double>(max_outer) <= outer_cap,
           "outer iterations within 18 delta_f sqrt(L2) eps^{-3/2}");
  std::cout << "  [note] worst a-olqr run " << worst_seconds << " s, max "
            << max_outer << " outer iterations (cap " << outer_cap << ")"
            << std::endl;
  c.finish();
}

TEST_CASE("criterion 13: oracle-call scaling in 1/eps") {
  Criterion c(13, "fitted oracle-call exponent within the gate");
  const LqrProblem P = gen_olqr_chain(3);
  const Gain K1 = Gain::Zero(1, 1);
  const double f1 = cost(P, K1);
  const ConstantsBundle b = constants(P, f1);
  std::vector<double> eps_values{1e-2, std::pow(10.0, -2.5), 1e-3};
  std::vector<double> calls;
  for (double eps : eps_values) {
    AOlqrConfig cfg;
    cfg.eps = eps;
    cfg.L1 = b.L1;
    cfg.L2 = b.L2;
    cfg.seed = 99;
    const AOlqrResult res = a_olqr(P, K1, cfg);
    c.expect(res.trace.status == RunStatus::Converged,
             "converged at eps = " + fmt17(eps));
    calls.push_back(static_cast<double>(res.trace.rows.back().lyap_solves));
  }
  // Least squares of log(calls) on log(1/eps).
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  const double n = static_cast<double>(eps_values.size());
  for (size_t i = 0; i < eps_values.size(); ++i) {
    const double x = std::log(1.0 / eps_values[i]);
    const double y = std::log(calls[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    syy += y * y;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double r_num = n * sxy - sx * sy;
  const double r_den =
      std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
  const double r2 = r_den > 0.0 ? (r_num / r_den) * (r_num / r_den) : 1.0;
  const double gate = r2 >= 0.95 ? 1.9 : 2.0;
  c.expect(slope <= gate, "exponent " + fmt17(slope) + " <= gate " +
                              fmt17(gate) + " (R^2 = " + fmt17(r2) + ")");
  std::cout << "  [note] oracle calls " << calls[0] << " / " << calls[1]
            << " / " << calls[2] << ", exponent " << slope << ", R^2 " << r2
            << std::endl;
  c.finish();
}

TEST_CASE("criterion 14: determinism of the trace suite") {
  Criterion c(14, "same-seed executions give identical traces (wall masked)");
  // Masks the wall_ms field (column 5) of every data row; everything else
  // must be byte-identical.
  auto masked = [](const std::string& text) {
    std::istringstream is(text);
    std::ostringstream os;
    std::string line;
    while (std::getline(is, line)) {
      if (!line.empty() && line[0] != '#' && line.find(',') !=
                                                 std::string::npos &&
          (std::isdigit(line[0]) || line[0] == '-')) {
        int field = 0;
        std::string out;
        std::string tok;
        std::stringstream ss(line);
        while (std::getline(ss, tok, ',')) {
          if (field > 0) out += ',';
          out += (field == 4) ? std::string("<wall>") : tok;
          ++field;
        }
        os << out << "\n";
      } else {
        os << line << "\n";
      }
    }
    return os.str();
  };

  auto run_suite = [&](const std::string& dir) {
    std::filesystem::create_directories(dir);
    ExperimentConfig cfg;
    cfg.generator = "chain";
    cfg.gen_n = 3;
    cfg.K0 = example1_gain();
    cfg.solvers = {"gd", "accel", "care-oracle"};
    cfg.seeds = {0};
    cfg.out_dir = dir + "/slqr";
    cfg.grad_tol = 1e-4;
    run_experiment(cfg);

    ExperimentConfig ocfg;
    ocfg.generator = "olqr-chain";
    ocfg.gen_n = 3;
    ocfg.K0 = Gain::Zero(1, 1);
    ocfg.solvers = {"a-olqr"};
    ocfg.seeds = {7, 8};
    ocfg.out_dir = dir + "/olqr";
    ocfg.eps = 1e-2;
    run_experiment(ocfg);

    ExperimentConfig hcfg;
    hcfg.generator = "chain";
    hcfg.gen_n = 3;
    hcfg.K0 = example1_gain();
    hcfg.solvers = {"hybrid"};
    hcfg.out_dir = dir + "/hybrid";
    hcfg.hybrid_horizon = 1.0;
    hcfg.hybrid_dt = 1e-3;
    run_experiment(hcfg);
  };

  const auto base = std::filesystem::temp_directory_path() / "lqropt_det";
  std::filesystem::remove_all(base);
  run_suite((base / "a").string());
  run_suite((base / "b").string());

  int compared = 0;
  for (const auto& entry :
       std::filesystem::recursive_directory_iterator(base / "a")) {
    if (!entry.is_regular_file() || entry.path().extension() != ".csv") {
      continue;
    }
    const auto rel = std::filesystem::relative(entry.path(), base / "a");
    const auto other = base / "b" / rel;
    c.expect(std::filesystem::exists(other),
             "matching trace exists: " + rel.string());
    if (!std::filesystem::exists(other)) continue;
    std::ifstream fa(entry.path(), std::ios::binary);
    std::ifstream fb(other, std::ios::binary);
    std::ostringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    c.expect(masked(sa.str()) == masked(sb.str()),
             "byte-identical (wall masked): " + rel.string());
    ++compared;
  }
  c.expect(compared >= 6, std::to_string(compared) + " trace files compared");
  c.finish();
}
