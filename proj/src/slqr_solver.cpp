#include "lqropt/slqr_solver.hpp"

#include <chrono>
#include <cmath>

namespace lqropt {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

void require_finite(const Matrix& M, const char* what) {
  if (!M.allFinite()) {
    throw NonFiniteValue(std::string(what) + " became non-finite");
  }
}

}  // namespace

SolveResult gd_solve(const LqrProblem& P, const Gain& K0, double step,
                     double grad_tol, long max_iters) {
  if (!(step > 0.0)) throw std::invalid_argument("gd_solve: step must be > 0");
  if (!(grad_tol > 0.0) || max_iters < 0) {
    throw std::invalid_argument("gd_solve: bad tolerance or iteration cap");
  }
  if (!is_stabilizing(P, K0)) {
    throw NotStabilizing("gd_solve: initial gain is not stabilizing");
  }

  OracleStats stats;
  SolveResult out;
  out.trace.kind = TraceKind::Solver;
  out.trace.add_config("solver", std::string("gd"));
  out.trace.add_config("step", step);
  out.trace.add_config("grad_tol", grad_tol);
  out.trace.add_config("max_iters", max_iters);

  const auto t0 = Clock::now();
  Gain K = K0;
  PointEval ev = try_evaluate(P, K, /*need_grad=*/true, &stats);
  if (!ev.stabilizing) {
    throw NotStabilizing("gd_solve: initial point cannot be certified");
  }
  for (long k = 0;; ++k) {
    const double gn = ev.grad.norm();
    TraceRow row;
    row.iter = k;
    row.f = ev.f;
    row.grad_norm = gn;
    row.wall_ms = elapsed_ms(t0);
    row.lyap_solves = stats.lyap_solves;
    out.trace.rows.push_back(std::move(row));
    if (!std::isfinite(ev.f) || !std::isfinite(gn)) {
      throw NonFiniteValue("gd_solve: objective became non-finite");
    }
    if (gn <= grad_tol) {
      out.trace.status = RunStatus::Converged;
      break;
    }
    if (k >= max_iters) {
      out.trace.status = RunStatus::MaxIters;
      break;
    }
    const Gain K_next = K - step * ev.grad;
    require_finite(K_next, "gd_solve iterate");
    PointEval next = try_evaluate(P, K_next, /*need_grad=*/true, &stats);
    if (!next.stabilizing) {
      throw StepRejected("gd_solve: step left the stabilizing set at iter " +
                         std::to_string(k));
    }
    K = K_next;
    ev = std::move(next);
  }
  out.K = K;
  out.p = Matrix::Zero(P.m(), P.r());
  return out;
}

double restart_step_bound(double L1, double d, double eta) {
  if (!(L1 > 0.0)) throw std::invalid_argument("restart_step_bound: L1 <= 0");
  if (eta < 0.0 || d < 0.0) {
    throw std::invalid_argument("restart_step_bound: negative d or eta");
  }
  const double a = 1.0 - 2.0 * d * eta;
  if (!(a > 0.0)) {
    throw InvalidDamping("restart_step_bound: requires 1 - 2 d eta > 0");
  }
  return (-eta + std::sqrt(eta * eta + 8.0 * a / L1)) / (2.0 * a);
}

SolveResult accel_solve(const LqrProblem& P, const Gain& K0,
                        const AccelConfig& cfg) {
  if (!(cfg.T > 0.0)) throw std::invalid_argument("accel_solve: T must be > 0");
  if (cfg.d < 0.0 || cfg.eta < 0.0) {
    throw std::invalid_argument("accel_solve: negative damping or eta");
  }
  if (cfg.max_restarts < 0 || cfg.max_iters < 0 || !(cfg.grad_tol > 0.0)) {
    throw std::invalid_argument("accel_solve: bad budget or tolerance");
  }
  if (!is_stabilizing(P, K0)) {
    throw NotStabilizing("accel_solve: initial gain is not stabilizing");
  }

  OracleStats stats;
  SolveResult out;
  out.trace.kind = TraceKind::Solver;
  out.trace.add_config("solver", std::string("accel"));
  out.trace.add_config("T", cfg.T);
  out.trace.add_config("d", cfg.d);
  out.trace.add_config("beta", cfg.beta);
  out.trace.add_config("eta", cfg.eta);
  out.trace.add_config("alpha1", cfg.alpha1);
  out.trace.add_config("max_restarts", cfg.max_restarts);
  out.trace.add_config("max_iters", cfg.max_iters);
  out.trace.add_config("grad_tol", cfg.grad_tol);
  if (cfg.beta != 0.0) {
    out.trace.add_config("warning",
                         std::string("beta != 0: restart guarantee only "
                                     "certified for beta = 0"));
  }
  if (cfg.d == 0.0) {
    out.trace.add_config("warning", std::string("d = 0: undamped run"));
  }

  const auto t0 = Clock::now();
  Gain K = K0;
  Matrix p = Matrix::Zero(P.m(), P.r());
  PointEval ev = try_evaluate(P, K, /*need_grad=*/true, &stats);
  if (!ev.stabilizing) {
    throw NotStabilizing("accel_solve: initial point cannot be certified");
  }
  if (ev.f > cfg.alpha1) {
    throw std::invalid_argument("accel_solve: alpha1 below f(K0)");
  }

  long restarts = 0;
  long pending_restarts = 0;
  const double damp = 1.0 - 2.0 * cfg.d * cfg.T;

  for (long k = 0;;) {
    const double gn = ev.grad.norm();
    TraceRow row;
    row.iter = k;
    row.f = ev.f;
    row.grad_norm = gn;
    row.restart = pending_restarts;
    row.wall_ms = elapsed_ms(t0);
    row.lyap_solves = stats.lyap_solves;
    out.trace.rows.push_back(std::move(row));
    pending_restarts = 0;
    if (!std::isfinite(ev.f) || !std::isfinite(gn)) {
      throw NonFiniteValue("accel_solve: objective became non-finite");
    }
    if (gn <= cfg.grad_tol) {
      out.trace.status = RunStatus::Converged;
      break;
    }
    if (k >= cfg.max_iters) {
      out.trace.status = RunStatus::MaxIters;
      break;
    }

    bool accepted = false;
    while (!accepted) {
      Matrix step_grad = ev.grad;
      if (cfg.beta != 0.0) {
        PointEval shifted =
            try_evaluate(P, K + cfg.beta * p, /*need_grad=*/true, &stats);
        if (!shifted.stabilizing) {
          // The extrapolated probe fell outside S; treat like a sublevel
          // violation and restart.
          ++restarts;
          ++pending_restarts;
          if (restarts > cfg.max_restarts) break;
          p = -cfg.eta * ev.grad;
          continue;
        }
        step_grad = shifted.grad;
      }
      const Matrix p_trial = damp * p - cfg.T * step_grad;
      const Gain K_trial = K + cfg.T * p_trial;
      require_finite(K_trial, "accel_solve iterate");
      PointEval trial = try_evaluate(P, K_trial, /*need_grad=*/true, &stats);
      if (trial.stabilizing && trial.f <= cfg.alpha1) {
        K = K_trial;
        p = p_trial;
        ev = std::move(trial);
        accepted = true;
        ++k;
      } else {
        // Restarting rule: discard the violating iterate and reset the
        // momentum at the current point.
        ++restarts;
        ++pending_restarts;
        if (restarts > cfg.max_restarts) break;
        p = -cfg.eta * ev.grad;
      }
    }
    if (!accepted) {
      out.trace.status = RunStatus::RestartBudgetExceeded;
      break;
    }
  }
  out.trace.add_config("restarts_total", restarts);
  out.K = K;
  out.p = p;
  return out;
}

HybridResult simulate_hybrid_flow(const LqrProblem& P, const Gain& K0,
                                  const Matrix& p0, const AccelConfig& cfg,
                                  double horizon, double dt) {
  if (!(dt > 0.0) || dt > 1e-3 + 1e-15 ||
      (cfg.T > 0.0 && dt > cfg.T / 10.0 + 1e-15)) {
    throw std::invalid_argument(
        "simulate_hybrid_flow: need 0 < dt <= min(1e-3, T/10)");
  }
  if (!(horizon > 0.0)) {
    throw std::invalid_argument("simulate_hybrid_flow: horizon must be > 0");
  }
  if (!is_stabilizing(P, K0)) {
    throw NotStabilizing("simulate_hybrid_flow: initial gain not stabilizing");
  }
  if (p0.rows() != P.m() || p0.cols() != P.r()) {
    throw std::invalid_argument("simulate_hybrid_flow: bad momentum shape");
  }

  OracleStats stats;
  HybridResult out;
  out.trace.kind = TraceKind::Hybrid;
  out.trace.add_config("solver", std::string("hybrid"));
  out.trace.add_config("d", cfg.d);
  out.trace.add_config("beta", cfg.beta);
  out.trace.add_config("eta", cfg.eta);
  out.trace.add_config("alpha1", cfg.alpha1);
  out.trace.add_config("max_jumps", cfg.max_restarts);
  out.trace.add_config("horizon", horizon);
  out.trace.add_config("dt", dt);

  // Energy reference: the optimal cost where it is computable.
  double f_star = 0.0;
  if (P.kind == ProblemKind::SLQR) {
    f_star = cost(P, care_oracle(P, K0, &stats), &stats);
  }
  out.trace.add_config("f_star", f_star);

  auto grad_at = [&](const Gain& K) {
    PointEval ev = try_evaluate(P, K, /*need_grad=*/true, &stats);
    if (!ev.stabilizing) {
      throw NonFiniteValue("simulate_hybrid_flow: flow left the "
                           "stabilizing set");
    }
    return ev;
  };

  // pdot = -2 d p - grad f(K + beta p); the beta = 0 path needs one gradient.
  auto momentum_rate = [&](const Gain& K, const Matrix& p,
                           const Matrix& grad_K) {
    Matrix g = grad_K;
    if (cfg.beta != 0.0) g = grad_at(K + cfg.beta * p).grad;
    return (-2.0 * cfg.d * p - g).eval();
  };

  const auto t0 = Clock::now();
  Gain K = K0;
  Matrix p = p0;
  PointEval ev = grad_at(K);
  const long steps = static_cast<long>(std::ceil(horizon / dt));
  long jumps = 0;

  auto push_row = [&](long it, const PointEval& e, const Matrix& mom,
                      long jumped) {
    TraceRow r;
    r.iter = it;
    r.f = e.f;
    r.grad_norm = e.grad.norm();
    r.restart = jumped;
    r.wall_ms = elapsed_ms(t0);
    r.lyap_solves = stats.lyap_solves;
    r.energy = 0.5 * mom.squaredNorm() + e.f - f_star;
    r.dfdt = (e.grad.array() * mom.array()).sum();
    out.trace.rows.push_back(std::move(r));
  };

  push_row(0, ev, p, 0);
  out.trace.status = RunStatus::MaxIters;  // horizon exhausted by default

  for (long s = 1; s <= steps; ++s) {
    // Classic RK4 on z = (K, p).
    const Matrix k1_K = p;
    const Matrix k1_p = momentum_rate(K, p, ev.grad);

    const Gain K2 = K + 0.5 * dt * k1_K;
    const Matrix p2 = p + 0.5 * dt * k1_p;
    PointEval e2 = grad_at(K2);
    const Matrix k2_K = p2;
    const Matrix k2_p = momentum_rate(K2, p2, e2.grad);

    const Gain K3 = K + 0.5 * dt * k2_K;
    const Matrix p3 = p + 0.5 * dt * k2_p;
    PointEval e3 = grad_at(K3);
    const Matrix k3_K = p3;
    const Matrix k3_p = momentum_rate(K3, p3, e3.grad);

    const Gain K4 = K + dt * k3_K;
    const Matrix p4 = p + dt * k3_p;
    PointEval e4 = grad_at(K4);
    const Matrix k4_K = p4;
    const Matrix k4_p = momentum_rate(K4, p4, e4.grad);

    K += (dt / 6.0) * (k1_K + 2.0 * k2_K + 2.0 * k3_K + k4_K);
    p += (dt / 6.0) * (k1_p + 2.0 * k2_p + 2.0 * k3_p + k4_p);
    require_finite(K, "hybrid flow state");
    require_finite(p, "hybrid flow momentum");

    ev = grad_at(K);
    const double dfdt = (ev.grad.array() * p.array()).sum();
    long jumped = 0;
    if (ev.f >= cfg.alpha1 && dfdt >= 0.0) {
      ++jumps;
      if (jumps > cfg.max_restarts) {
        push_row(s, ev, p, 0);
        out.trace.status = RunStatus::RestartBudgetExceeded;
        out.K = K;
        out.p = p;
        out.jumps = jumps;
        return out;
      }
      p = -cfg.eta * ev.grad;
      jumped = 1;
    }
    push_row(s, ev, p, jumped);
  }

  out.K = K;
  out.p = p;
  out.jumps = jumps;
  return out;
}

}  // namespace lqropt
