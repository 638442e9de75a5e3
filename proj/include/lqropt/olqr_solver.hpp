#pragma once

#include <cstdint>
#include <functional>
#include <optional>

#include "lqropt/lqr.hpp"
#include "lqropt/trace.hpp"

namespace lqropt {

// First- and second-order oracle for a smooth objective over m x r matrices.
// Callbacks are expected to raise LeftFeasibleSet themselves when queried
// outside their domain; domain_check exposes the same predicate to callers.
struct SmoothOracle {
  std::function<double(const Matrix&)> value;
  std::function<Matrix(const Matrix&)> gradient;
  std::function<Matrix(const Matrix&, const Matrix&)> hvp;
  std::function<bool(const Matrix&)> domain_check;
};

// LQR cost as a SmoothOracle whose domain is the stabilizing gains with cost
// at most working_bound. Queries outside the domain raise LeftFeasibleSet.
// With fd_hvp the Hessian-vector product uses the forward-difference
// approximation (grad f(K + h E) - grad f(K)) / h instead of the exact pair
// of auxiliary Lyapunov solves.
SmoothOracle make_lqr_oracle(const LqrProblem& P, double working_bound,
                             OracleStats* stats = nullptr,
                             bool fd_hvp = false);

struct NagObservation {
  long iter = 0;        // accepted iterations so far, across restarts
  double phi = 0.0;     // objective at the iterate
  double grad_norm = 0.0;
  long restarts = 0;    // restarts so far
  long segment_iter = 0;  // iterations since the active restart
};

struct NagOptions {
  // Optimality gap used for the iteration budget; defaults to phi(y1), which
  // upper-bounds the gap for the nonnegative objectives used here.
  std::optional<double> opt_gap;
  double budget_safety = 2.0;
  std::function<void(const NagObservation&)> observer;
};

struct NagResult {
  Matrix K;
  long iters = 0;
  long restarts = 0;
};

// Nesterov accelerated gradient for a sigma1-strongly convex, L1-smooth
// objective, with the restarting rule: a trial iterate with
// phi(K_{j+1}) >= phi(K_1) is discarded and the scheme restarts from K_j.
// Raises RestartBudgetExceeded beyond max_restarts restarts and
// NonConvexDetected when the iteration count exceeds the certified budget
// S + 1 + sqrt(kappa) log(2^{S+2} kappa^{S+1} L1 gap / eps^2) by the safety
// factor, which signals a hypothesis violation.
NagResult nag_restart(const SmoothOracle& phi, const Matrix& y1, double eps,
                      double L1, double sigma1, long max_restarts,
                      const NagOptions& options = {});

struct SnagObservation {
  long outer_iter = 0;
  double psi = 0.0;
  double grad_norm = 0.0;
  long nag_iters = 0;
  long nag_restarts = 0;
};

struct SnagOptions {
  std::optional<double> opt_gap;
  std::function<void(const SnagObservation&)> observer;
};

struct SnagResult {
  Matrix K;
  long outer_iters = 0;
  long nag_iters = 0;
  long nag_restarts = 0;
};

// Stationary points of a gamma-semiconvex, L1-smooth objective by repeated
// NAG solves of g_j(K) = psi(K) + gamma |K - K_j|_F^2 at inner accuracy
// eps' = eps sqrt(gamma / (50 (L1 + 2 gamma))). The returned point satisfies
// |grad psi|_F <= eps and the descent inequality
// psi(K1) - psi(K) >= min{gamma |K - K1|^2, (eps/sqrt(10)) |K - K1|}.
SnagResult semiconvex_nag(const SmoothOracle& psi, const Matrix& K1,
                          double eps, double L1, double gamma,
                          long max_restarts, const SnagOptions& options = {});

struct NcdStep {
  long iter = 0;
  double psi_before = 0.0;
  double psi_after = 0.0;
  double curvature = 0.0;  // quadratic form along the probe direction
  double grad_norm = 0.0;
};

struct NcdObservation {
  long iter = 0;
  double psi = 0.0;
  double min_eig_est = 0.0;
  bool stepped = false;
};

struct NcdOptions {
  double smoothness_L1 = 0.0;  // bound on |hessian|, used by the eigen probe
  std::uint64_t seed = 0;
  std::function<void(const NcdStep&)> on_step;
  std::function<void(const NcdObservation&)> observer;
};

struct NcdResult {
  Matrix K;
  long iters = 0;        // eigenvalue probes performed
  long curvature_steps = 0;
  double last_min_eig_est = 0.0;
};

// Negative curvature descent: probes the smallest Hessian eigenvalue with a
// randomized Lanczos estimate accurate to alpha/2 and, while the curvature is
// below -alpha/2, steps along the probe direction with length
// 2 |curvature| / L2. Each executed step decreases psi by at least
// alpha^3 / (12 L2^2); the iteration budget is 1 + 12 L2^2 delta_f / alpha^3.
NcdResult ncd(const SmoothOracle& psi, const Matrix& K1, double delta,
              double L2, double alpha, double delta_f,
              const NcdOptions& options);

// f_k(K) = f(K) + L1 ([|K - K_hat|_F - alpha/L2]_+)^2: the convex proximity
// penalty that makes the objective 3 alpha-semiconvex and 3 L1-smooth around
// a point where the Hessian is bounded below by -alpha.
SmoothOracle build_penalized(const SmoothOracle& f, const Matrix& K_hat,
                             double L1, double L2, double alpha);

struct AOlqrConfig {
  double eps = 1e-3;
  double L1 = 0.0;  // smoothness bound, e.g. constants(P, f(K1)).L1
  double L2 = 0.0;  // Hessian Lipschitz bound, e.g. constants(P, f(K1)).L2
  double alpha = 0.0;    // curvature threshold; 0 selects sqrt(L2 * eps)
  double delta_f = 0.0;  // optimality gap; 0 selects f(K1)
  double delta = 0.05;   // failure probability
  long max_nag_restarts = 20;
  std::uint64_t seed = 0;
  bool fd_hvp = false;
  // The guarantee needs eps <= min(delta_f^{2/3} L2^{1/3}, L1^2 / L2);
  // setting this runs anyway and records a warning in the trace.
  bool allow_eps_violation = false;
};

struct AOlqrResult {
  Gain K;
  Trace trace;
};

// Two-procedure output-feedback solver: alternate negative curvature descent
// on f with Semiconvex-NAG on the penalized objective until the gradient
// falls below eps; the result is a second-order stationary point with
// smallest Hessian eigenvalue at least -2 sqrt(L2 eps) with probability
// 1 - delta.
AOlqrResult a_olqr(const LqrProblem& P, const Gain& K1,
                   const AOlqrConfig& cfg);

}  // namespace lqropt
