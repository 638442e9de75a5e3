#include "lqropt/olqr_solver.hpp"

#include <chrono>
#include <cmath>

namespace lqropt {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

double frob_inner(const Matrix& A, const Matrix& B) {
  return (A.array() * B.array()).sum();
}

}  // namespace

SmoothOracle make_lqr_oracle(const LqrProblem& P, double working_bound,
                             OracleStats* stats, bool fd_hvp) {
  // Boundary slack keeps the defining point K1 itself inside the domain.
  const double bound = working_bound * (1.0 + 1e-9) + 1e-12;
  auto inside = [&P, bound, stats](const Matrix& K) {
    PointEval ev = try_evaluate(P, K, /*need_grad=*/false, stats);
    return ev.stabilizing && ev.f <= bound;
  };

  SmoothOracle o;
  o.domain_check = inside;
  o.value = [&P, bound, stats](const Matrix& K) {
    PointEval ev = try_evaluate(P, K, /*need_grad=*/false, stats);
    if (!ev.stabilizing || ev.f > bound) {
      throw LeftFeasibleSet("oracle query outside the working sublevel set");
    }
    return ev.f;
  };
  o.gradient = [&P, bound, stats](const Matrix& K) {
    PointEval ev = try_evaluate(P, K, /*need_grad=*/true, stats);
    if (!ev.stabilizing || ev.f > bound) {
      throw LeftFeasibleSet("oracle query outside the working sublevel set");
    }
    return ev.grad;
  };
  o.hvp = [&P, bound, stats, fd_hvp](const Matrix& K, const Matrix& E) {
    PointEval ev = try_evaluate(P, K, /*need_grad=*/false, stats);
    if (!ev.stabilizing || ev.f > bound) {
      throw LeftFeasibleSet("oracle query outside the working sublevel set");
    }
    if (fd_hvp) {
      return hvp_fd(P, K, E, default_hvp_step(K), stats);
    }
    return hvp_exact(P, K, E, stats);
  };
  return o;
}

NagResult nag_restart(const SmoothOracle& phi, const Matrix& y1, double eps,
                      double L1, double sigma1, long max_restarts,
                      const NagOptions& options) {
  if (!(eps > 0.0) || !(L1 > 0.0) || !(sigma1 > 0.0) || sigma1 > L1) {
    throw std::invalid_argument("nag_restart: need 0 < sigma1 <= L1, eps > 0");
  }
  if (max_restarts < 0) {
    throw std::invalid_argument("nag_restart: negative restart budget");
  }
  const double kappa = L1 / sigma1;
  const double sq = std::sqrt(kappa);
  const double momentum = (sq - 1.0) / (sq + 1.0);

  Matrix K = y1;
  Matrix y_prev = y1;
  double threshold = phi.value(K);
  const double gap = options.opt_gap.value_or(std::max(threshold, 0.0));

  // Certified iteration budget, evaluated in log space to survive kappa^{S+1}.
  const double S = static_cast<double>(max_restarts);
  double log_term = (S + 2.0) * std::log(2.0) + (S + 1.0) * std::log(kappa) +
                    std::log(std::max(L1 * std::max(gap, 1e-300), 1e-300)) -
                    2.0 * std::log(eps);
  log_term = std::max(log_term, 1.0);
  const double budget =
      options.budget_safety * (S + 1.0 + sq * log_term) + 16.0;

  NagResult out;
  long segment_iter = 1;
  for (;;) {
    const Matrix g = phi.gradient(K);
    const double gn = g.norm();
    if (options.observer) {
      // The algorithm itself never needs phi at accepted iterates; evaluate
      // it only for observers.
      options.observer(NagObservation{out.iters, phi.value(K), gn,
                                      out.restarts, segment_iter});
    }
    if (gn < eps) {
      out.K = K;
      return out;
    }
    if (static_cast<double>(out.iters) > budget) {
      throw NonConvexDetected(
          "nag_restart: iteration budget exceeded; strong convexity or "
          "smoothness hypothesis looks violated");
    }
    const Matrix y_next = K - g / L1;
    const Matrix K_next = (1.0 + momentum) * y_next - momentum * y_prev;
    const double value_next = phi.value(K_next);
    if (value_next >= threshold) {
      // Restarting rule: drop the trial iterate, restart from the current
      // point with rebuilt momentum state.
      ++out.restarts;
      if (out.restarts > max_restarts) {
        throw RestartBudgetExceeded("nag_restart: more than " +
                                    std::to_string(max_restarts) +
                                    " restarts");
      }
      y_prev = K;
      threshold = phi.value(K);
      segment_iter = 1;
      continue;
    }
    y_prev = y_next;
    K = K_next;
    ++out.iters;
    ++segment_iter;
    if (!K.allFinite()) {
      throw NonFiniteValue("nag_restart: iterate became non-finite");
    }
  }
}

SnagResult semiconvex_nag(const SmoothOracle& psi, const Matrix& K1,
                          double eps, double L1, double gamma,
                          long max_restarts, const SnagOptions& options) {
  if (!(eps > 0.0) || !(L1 > 0.0) || !(gamma > 0.0) || gamma > L1) {
    throw std::invalid_argument(
        "semiconvex_nag: need 0 < gamma <= L1 and eps > 0");
  }
  const double psi0 = psi.value(K1);
  const double gap = options.opt_gap.value_or(std::max(psi0, 0.0));
  const long outer_budget = static_cast<long>(
      std::ceil(2.0 * (1.0 + 5.0 * gamma * std::max(gap, 0.0) / (eps * eps))));
  const double eps_inner = eps * std::sqrt(gamma / (50.0 * (L1 + 2.0 * gamma)));

  SnagResult out;
  Matrix K = K1;
  for (long j = 0;; ++j) {
    const Matrix g = psi.gradient(K);
    const double gn = g.norm();
    if (options.observer) {
      options.observer(SnagObservation{j, psi.value(K), gn, out.nag_iters,
                                       out.nag_restarts});
    }
    if (gn < eps) {
      out.K = K;
      out.outer_iters = j;
      return out;
    }
    if (j >= outer_budget) {
      throw IterationBudgetExceeded(
          "semiconvex_nag: outer iteration budget exceeded");
    }

    // g_j(K') = psi(K') + gamma |K' - K_j|^2 is gamma-strongly convex and
    // (L1 + 2 gamma)-smooth when psi is gamma-semiconvex.
    const Matrix center = K;
    SmoothOracle g_j;
    g_j.domain_check = psi.domain_check;
    g_j.value = [&psi, center, gamma](const Matrix& x) {
      return psi.value(x) + gamma * (x - center).squaredNorm();
    };
    g_j.gradient = [&psi, center, gamma](const Matrix& x) {
      return (psi.gradient(x) + 2.0 * gamma * (x - center)).eval();
    };
    g_j.hvp = [&psi, gamma](const Matrix& x, const Matrix& e) {
      return (psi.hvp(x, e) + 2.0 * gamma * e).eval();
    };

    NagOptions inner;
    inner.opt_gap = options.opt_gap;
    NagResult nag = nag_restart(g_j, K, eps_inner, L1 + 2.0 * gamma, gamma,
                                max_restarts, inner);
    out.nag_iters += nag.iters;
    out.nag_restarts += nag.restarts;
    K = nag.K;
  }
}

NcdResult ncd(const SmoothOracle& psi, const Matrix& K1, double delta,
              double L2, double alpha, double delta_f,
              const NcdOptions& options) {
  if (!(delta > 0.0) || !(delta < 1.0)) {
    throw std::invalid_argument("ncd: delta must lie in (0, 1)");
  }
  if (!(L2 > 0.0) || !(alpha > 0.0) || !(delta_f > 0.0)) {
    throw std::invalid_argument("ncd: L2, alpha, delta_f must be positive");
  }
  if (!(options.smoothness_L1 > 0.0)) {
    throw std::invalid_argument("ncd: options.smoothness_L1 must be set");
  }
  if (alpha > options.smoothness_L1) {
    throw std::invalid_argument("ncd: alpha must not exceed the smoothness");
  }

  const double cube = alpha * alpha * alpha;
  const double delta_prime = delta / (1.0 + L2 * L2 * delta_f / cube);
  const long budget = static_cast<long>(
      std::ceil(1.0 + 12.0 * L2 * L2 * delta_f / cube));

  const Eigen::Index rows = K1.rows(), cols = K1.cols();
  NcdResult out;
  Matrix K = K1;
  for (long j = 1;; ++j) {
    if (j > budget) {
      throw IterationBudgetExceeded("ncd: iteration budget exceeded");
    }
    LinearOperator H;
    H.dim = rows * cols;
    H.apply = [&psi, &K, rows, cols](const Vector& v) {
      return vec(psi.hvp(K, unvec(v, rows, cols)));
    };
    MinEigResult eig;
    try {
      eig = min_eig_estimate(H, options.smoothness_L1, alpha, delta_prime,
                             options.seed + static_cast<std::uint64_t>(j));
    } catch (const BudgetExceeded& e) {
      throw EigenBudgetExceeded(e.what());
    }
    ++out.iters;
    out.last_min_eig_est = eig.lambda_est;

    if (eig.lambda_est <= -alpha / 2.0) {
      const Matrix v_hat = unvec(eig.v, rows, cols);
      const Matrix g = psi.gradient(K);
      const double trace_dir = frob_inner(v_hat, g);
      const double sign = trace_dir < 0.0 ? -1.0 : 1.0;
      const double length = 2.0 * std::abs(eig.lambda_est) / L2;
      const double psi_before = psi.value(K);
      K -= length * sign * v_hat;
      const double psi_after = psi.value(K);
      ++out.curvature_steps;
      if (options.on_step) {
        options.on_step(NcdStep{j, psi_before, psi_after, eig.lambda_est,
                                g.norm()});
      }
      if (options.observer) {
        options.observer(NcdObservation{j, psi_after, eig.lambda_est, true});
      }
    } else {
      if (options.observer) {
        options.observer(
            NcdObservation{j, psi.value(K), eig.lambda_est, false});
      }
      out.K = K;
      return out;
    }
  }
}

SmoothOracle build_penalized(const SmoothOracle& f, const Matrix& K_hat,
                             double L1, double L2, double alpha) {
  if (!(L1 > 0.0) || !(L2 > 0.0) || !(alpha > 0.0)) {
    throw std::invalid_argument("build_penalized: constants must be positive");
  }
  const double radius = alpha / L2;  // penalty-free zone around K_hat
  const Matrix center = K_hat;

  SmoothOracle o;
  o.domain_check = f.domain_check;
  o.value = [f, center, L1, radius](const Matrix& K) {
    const double excess = std::max((K - center).norm() - radius, 0.0);
    return f.value(K) + L1 * excess * excess;
  };
  o.gradient = [f, center, L1, radius](const Matrix& K) {
    Matrix g = f.gradient(K);
    const Matrix D = K - center;
    const double s = D.norm();
    if (s > radius) {
      g += 2.0 * L1 * (s - radius) / s * D;
    }
    return g;
  };
  o.hvp = [f, center, L1, radius](const Matrix& K, const Matrix& E) {
    Matrix h = f.hvp(K, E);
    const Matrix D = K - center;
    const double s = D.norm();
    if (s > radius) {
      const Matrix u = D / s;
      h += 2.0 * L1 *
           ((1.0 - radius / s) * E + (radius / s) * frob_inner(u, E) * u);
    }
    return h;
  };
  return o;
}

AOlqrResult a_olqr(const LqrProblem& P, const Gain& K1,
                   const AOlqrConfig& cfg) {
  if (!(cfg.eps > 0.0) || !(cfg.L1 > 0.0) || !(cfg.L2 > 0.0)) {
    throw std::invalid_argument("a_olqr: eps, L1, L2 must be positive");
  }
  if (!(cfg.delta > 0.0) || !(cfg.delta < 1.0)) {
    throw std::invalid_argument("a_olqr: delta must lie in (0, 1)");
  }
  if (!is_stabilizing(P, K1)) {
    throw NotStabilizing("a_olqr: initial gain is not stabilizing");
  }

  OracleStats stats;
  const double f1 = cost(P, K1, &stats);
  const double delta_f = cfg.delta_f > 0.0 ? cfg.delta_f : f1;
  // Default curvature threshold sqrt(L2 eps), kept inside (0, L1] (it can
  // only exceed L1 when eps is outside its certified range).
  const double alpha = cfg.alpha > 0.0
                           ? cfg.alpha
                           : std::min(std::sqrt(cfg.L2 * cfg.eps), cfg.L1);
  if (alpha > cfg.L1) {
    throw std::invalid_argument("a_olqr: alpha must lie in (0, L1]");
  }

  AOlqrResult out;
  Trace& tr = out.trace;
  tr.kind = TraceKind::Olqr;
  tr.add_config("solver", std::string("a-olqr"));
  tr.add_config("eps", cfg.eps);
  tr.add_config("L1", cfg.L1);
  tr.add_config("L2", cfg.L2);
  tr.add_config("alpha", alpha);
  tr.add_config("delta_f", delta_f);
  tr.add_config("delta", cfg.delta);
  tr.add_config("max_nag_restarts", cfg.max_nag_restarts);
  tr.add_config("seed", static_cast<long>(cfg.seed));
  tr.add_config("fd_hvp", static_cast<long>(cfg.fd_hvp ? 1 : 0));
  tr.add_config("working_bound", f1);

  const double eps_cap = std::min(std::cbrt(delta_f * delta_f * cfg.L2),
                                  cfg.L1 * cfg.L1 / cfg.L2);
  if (cfg.eps > eps_cap) {
    if (!cfg.allow_eps_violation) {
      throw std::invalid_argument(
          "a_olqr: eps exceeds min(delta_f^{2/3} L2^{1/3}, L1^2/L2); set "
          "allow_eps_violation to run anyway");
    }
    tr.add_config("warning",
                  std::string("eps exceeds the certified range; guarantee "
                              "void"));
  }

  const double cube = alpha * alpha * alpha;
  const double xi_terms = 12.0 * cfg.L2 * cfg.L2 / cube +
                          std::sqrt(10.0) * cfg.L2 / (alpha * cfg.eps);
  const double Xi = std::ceil(1.0 + delta_f * xi_terms);
  const double delta2 = cfg.delta / Xi;
  const long outer_cap =
      static_cast<long>(std::min(std::ceil(2.0 + delta_f * xi_terms), 1e18));
  tr.add_config("Xi", Xi);
  tr.add_config("delta_second", delta2);
  tr.add_config("outer_cap", outer_cap);

  SmoothOracle f = make_lqr_oracle(P, f1, &stats, cfg.fd_hvp);

  const auto t0 = Clock::now();
  long row_id = 0;
  long ncd_steps_total = 0;
  long nag_restarts_total = 0;

  auto push_row = [&](const char* phase, double fval, double gn,
                      double min_eig, long new_restarts) {
    TraceRow r;
    r.iter = row_id++;
    r.f = fval;
    r.grad_norm = gn;
    r.restart = new_restarts;
    r.wall_ms = elapsed_ms(t0);
    r.lyap_solves = stats.lyap_solves;
    r.phase = phase;
    r.min_eig_est = min_eig;
    r.ncd_steps = ncd_steps_total;
    r.nag_restarts = nag_restarts_total;
    tr.rows.push_back(std::move(r));
  };

  Gain K = K1;
  for (long k = 1; k <= outer_cap; ++k) {
    double psi_hat = std::nan("");
    NcdOptions nopt;
    nopt.smoothness_L1 = cfg.L1;
    nopt.seed = cfg.seed * 1000003ULL + static_cast<std::uint64_t>(k) * 97ULL;
    nopt.on_step = [&](const NcdStep& st) {
      ++ncd_steps_total;
      push_row("ncd", st.psi_before, st.grad_norm, st.curvature, 0);
    };
    nopt.observer = [&](const NcdObservation& obs) {
      if (!obs.stepped) psi_hat = obs.psi;
    };
    NcdResult probe = ncd(f, K, delta2, cfg.L2, alpha, delta_f, nopt);
    const Gain K_hat = probe.K;
    if (std::isnan(psi_hat)) psi_hat = f.value(K_hat);

    const Matrix g_hat = f.gradient(K_hat);
    const double gn_hat = g_hat.norm();
    push_row("ncd", psi_hat, gn_hat, probe.last_min_eig_est, 0);

    if (gn_hat < cfg.eps) {
      tr.status = RunStatus::Converged;
      tr.add_config("outer_iters", k);
      out.K = K_hat;
      return out;
    }

    SmoothOracle f_k = build_penalized(f, K_hat, cfg.L1, cfg.L2, alpha);
    const long snag_base_restarts = nag_restarts_total;
    long seen_restarts = 0;
    SnagOptions sopt;
    sopt.observer = [&](const SnagObservation& obs) {
      nag_restarts_total = snag_base_restarts + obs.nag_restarts;
      push_row("snag", obs.psi, obs.grad_norm, std::nan(""),
               obs.nag_restarts - seen_restarts);
      seen_restarts = obs.nag_restarts;
    };
    // Inner accuracy eps/2, smoothness 3 L1, semiconvexity 3 alpha.
    SnagResult snag = semiconvex_nag(f_k, K_hat, cfg.eps / 2.0, 3.0 * cfg.L1,
                                     3.0 * alpha, cfg.max_nag_restarts, sopt);
    nag_restarts_total = snag_base_restarts + snag.nag_restarts;
    K = snag.K;
  }
  throw IterationBudgetExceeded("a_olqr: outer iteration budget exceeded");
}

}  // namespace lqropt
