#pragma once

#include <optional>

#include "lqropt/linalg.hpp"

namespace lqropt {

enum class ProblemKind { SLQR, OLQR };

// Continuous-time LQR data: dynamics (A, B), output map C, weights (Q, R)
// and initial-state covariance Sigma. SLQR means C is exactly the identity.
struct LqrProblem {
  Matrix A;      // n x n
  Matrix B;      // n x m
  Matrix C;      // r x n
  Matrix Q;      // n x n, positive definite
  Matrix R;      // m x m, positive definite
  Matrix Sigma;  // n x n, positive definite
  ProblemKind kind = ProblemKind::SLQR;

  Eigen::Index n() const { return A.rows(); }
  Eigen::Index m() const { return B.cols(); }
  Eigen::Index r() const { return C.rows(); }

  // Checks dimensions, positive definiteness of the weights (smallest
  // eigenvalue > 1e-12) and that kind matches C; throws std::invalid_argument.
  void validate() const;

  static LqrProblem make(Matrix A, Matrix B, Matrix C, Matrix Q, Matrix R,
                         Matrix Sigma);
};

// Gains are plain m x r matrices.
using Gain = Matrix;

// Tallies of oracle work, threaded through solvers for trace reporting.
struct OracleStats {
  long lyap_solves = 0;
  long cost_evals = 0;
  long grad_evals = 0;
  long hvp_evals = 0;
};

bool is_stabilizing(const LqrProblem& P, const Gain& K);

// f(K) = Tr(X Sigma) with A_K^T X + X A_K + C^T K^T R K C + Q = 0.
double cost(const LqrProblem& P, const Gain& K, OracleStats* stats = nullptr);

// grad f(K) = 2 (R K C - B^T X) Y C^T with A_K Y + Y A_K^T + Sigma = 0.
Matrix gradient(const LqrProblem& P, const Gain& K,
                OracleStats* stats = nullptr);

// Both at once through one closed-loop factorization.
struct CostGradient {
  double f = 0.0;
  Matrix grad;
};
CostGradient cost_and_gradient(const LqrProblem& P, const Gain& K,
                               OracleStats* stats = nullptr);

// Non-throwing evaluation for solver inner loops: reports stability instead
// of raising, and shares one factorization between cost and gradient.
struct PointEval {
  bool stabilizing = false;
  double f = 0.0;
  Matrix grad;
};
PointEval try_evaluate(const LqrProblem& P, const Gain& K, bool need_grad,
                       OracleStats* stats = nullptr);

// Quadratic form of the Hessian, nabla^2 f(K)[E, E], via the auxiliary
// Lyapunov solutions X' and Y'.
double hessian_quadratic_form(const LqrProblem& P, const Gain& K,
                              const Matrix& E, OracleStats* stats = nullptr);

// The same query with the auxiliary solutions exposed: X' solves
// A_K^T X' + X' A_K + M^T E C + (M^T E C)^T = 0 with M = R K C - B^T X, and
// Y' solves A_K Y' + Y' A_K^T - (B E C Y + (B E C Y)^T) = 0. The value
// matches <hvp_exact(E), E>.
struct HessianForm {
  Matrix X_prime;
  Matrix Y_prime;
  double value = 0.0;
};
HessianForm hessian_form(const LqrProblem& P, const Gain& K, const Matrix& E,
                         OracleStats* stats = nullptr);

// Hessian-vector product 2(R E C - B^T X') Y C^T + 2(R K C - B^T X) Y' C^T,
// the directional derivative of the gradient along E.
Matrix hvp_exact(const LqrProblem& P, const Gain& K, const Matrix& E,
                 OracleStats* stats = nullptr);

// Forward-difference Hessian-vector product (grad f(K+hE) - grad f(K)) / h.
Matrix hvp_fd(const LqrProblem& P, const Gain& K, const Matrix& E, double h,
              OracleStats* stats = nullptr);

// Default forward-difference step sqrt(machine eps) * (1 + |K|_F).
double default_hvp_step(const Gain& K);

// (m r) x (m r) Hessian in the column-stacked basis; column j is
// vec(hvp_exact(basis_j)), symmetrized by averaging with its transpose.
// When asymmetry_out is given it receives |H - H^T|_F of the raw assembly.
Matrix assemble_dense_hessian(const LqrProblem& P, const Gain& K,
                              OracleStats* stats = nullptr,
                              double* asymmetry_out = nullptr);

// Certified constants on the sublevel set S_alpha.
struct ConstantsBundle {
  double alpha = 0.0;
  double xi = 0.0;
  double zeta = 0.0;
  double kappa1 = 0.0;
  double kappa2 = 0.0;
  double kappa3 = 0.0;
  double kappa4 = 0.0;
  double L1 = 0.0;  // gradient Lipschitz constant
  double L2 = 0.0;  // Hessian Lipschitz constant
  std::optional<double> mu;          // PL constant, needs f(K*)
  std::optional<double> kappa_cond;  // L1 / mu
};

// Evaluates the certified constant formulas at sublevel value alpha. The PL
// constant needs an estimate f_star of the optimal cost and is filled only
// when one is supplied.
ConstantsBundle constants(const LqrProblem& P, double alpha,
                          std::optional<double> f_star = std::nullopt);

// Ground-truth optimal gain for SLQR problems via the Kleinman iteration
// K_{i+1} = R^{-1} B^T X_i, X_i the closed-loop Lyapunov solution for K_i.
// The cost sequence is monotone nonincreasing and the result satisfies
// |grad f(K*)|_F <= 1e-9.
Gain care_oracle(const LqrProblem& P, const Gain& K0,
                 OracleStats* stats = nullptr);

}  // namespace lqropt
