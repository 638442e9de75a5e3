#pragma once

#include "lqropt/lqr.hpp"
#include "lqropt/trace.hpp"

namespace lqropt {

// Configuration of the momentum scheme
//   p_{k+1} = (1 - 2 d T) p_k - T grad f(K_k + beta p_k)
//   K_{k+1} = K_k + T p_{k+1}
// with the restarting rule: a trial iterate whose cost exceeds alpha1 is
// discarded and the state reset to (K_k, -eta grad f(K_k)).
struct AccelConfig {
  double T = 0.0;         // step size, time units
  double d = 0.0;         // damping
  double beta = 0.0;      // extrapolation; the restart guarantee needs 0
  double eta = 0.0;       // restart gradient gain
  double alpha1 = 0.0;    // sublevel threshold; callers default to f(K0)
  long max_restarts = 100;
  long max_iters = 1000000;
  double grad_tol = 1e-6;
};

struct SolveResult {
  Gain K;
  Matrix p;  // final momentum; zero rows for gradient descent
  Trace trace;
};

// Vanilla gradient descent baseline; throws StepRejected if a step ever
// leaves the stabilizing set (should not happen at a step within 1/L1).
SolveResult gd_solve(const LqrProblem& P, const Gain& K0, double step,
                     double grad_tol, long max_iters);

// Largest step size for which the post-restart composite step is certified:
//   T <= (-eta + sqrt(eta^2 + 8 (1 - 2 d eta) / L1)) / (2 (1 - 2 d eta)).
// Needs 1 - 2 d eta > 0; at eta = 0 this is exactly sqrt(2 / L1).
double restart_step_bound(double L1, double d, double eta);

// Semi-implicit Euler discretization of the restarted heavy-ball flow.
SolveResult accel_solve(const LqrProblem& P, const Gain& K0,
                        const AccelConfig& cfg);

struct HybridResult {
  Gain K;
  Matrix p;
  long jumps = 0;
  Trace trace;
};

// Integrates the continuous flow
//   Kdot = p,   pdot = -grad f(K) - 2 d p - (grad f(K + beta p) - grad f(K))
// with classic fourth-order Runge-Kutta. After each step, if
// f(K) >= cfg.alpha1 and <grad f(K), p> >= 0 the jump map (K, -eta grad f(K))
// is applied; at most cfg.max_restarts jumps are allowed. Each row records
// the energy H = 0.5 |p|_F^2 + f(K) - f* (f* from the Riccati oracle on SLQR
// problems, 0 otherwise) and the directional derivative <grad f(K), p>.
HybridResult simulate_hybrid_flow(const LqrProblem& P, const Gain& K0,
                                  const Matrix& p0, const AccelConfig& cfg,
                                  double horizon, double dt);

}  // namespace lqropt
