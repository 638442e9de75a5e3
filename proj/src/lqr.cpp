#include "lqropt/lqr.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

namespace lqropt {

namespace {

double smallest_sym_eigenvalue(const Matrix& M) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (M + M.transpose()),
                                           Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

double largest_sym_eigenvalue(const Matrix& M) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (M + M.transpose()),
                                           Eigen::EigenvaluesOnly);
  return es.eigenvalues()(es.eigenvalues().size() - 1);
}

double spectral_norm(const Matrix& M) {
  if (M.size() == 0) return 0.0;
  return M.jacobiSvd().singularValues()(0);
}

// One closed-loop evaluation point: a single LU factorization of the
// vectorized Lyapunov operator serves X, Y and the Hessian auxiliaries X', Y'.
// Cached per (P, K) query only; nothing survives across oracle calls.
class ClosedLoop {
 public:
  ClosedLoop(const LqrProblem& P, const Gain& K, OracleStats* stats,
             bool stability_known = false)
      : P_(P), K_(K), stats_(stats), A_K_(P.A - P.B * K * P.C) {
    if (!stability_known) {
      const double abscissa = spectral_abscissa(A_K_);
      if (!(abscissa < -kStabilityMargin)) {
        throw NotStabilizing("closed loop is not stabilizing (abscissa " +
                             std::to_string(abscissa) + ")");
      }
    }
    const Eigen::Index n = P.n();
    Matrix M = Matrix::Zero(n * n, n * n);
    const Matrix At = A_K_.transpose();
    for (Eigen::Index j = 0; j < n; ++j) M.block(j * n, j * n, n, n) = At;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        const double a = At(i, j);
        if (a != 0.0) M.block(i * n, j * n, n, n).diagonal().array() += a;
      }
    }
    lu_.compute(M);
  }

  const Matrix& closed_loop() const { return A_K_; }

  // A_K^T Z + Z A_K + W = 0
  Matrix solve_primal(const Matrix& W) const {
    if (stats_) ++stats_->lyap_solves;
    const Eigen::Index n = P_.n();
    Matrix Z = unvec(lu_.solve(-vec(W)), n, n);
    Matrix R = A_K_.transpose() * Z + Z * A_K_ + W;
    const double bound = 1e-10 * (1.0 + W.norm());
    if (R.norm() > bound) {
      Z += unvec(lu_.solve(-vec(R)), n, n);
      R = A_K_.transpose() * Z + Z * A_K_ + W;
    }
    Z = 0.5 * (Z + Z.transpose()).eval();
    R = A_K_.transpose() * Z + Z * A_K_ + W;
    if (!Z.allFinite() || R.norm() > bound) {
      throw SingularSystem("closed-loop Lyapunov solve missed the residual "
                           "certificate");
    }
    return Z;
  }

  // A_K Z + Z A_K^T + W = 0, reusing the factorization through its transpose.
  Matrix solve_dual(const Matrix& W) const {
    if (stats_) ++stats_->lyap_solves;
    const Eigen::Index n = P_.n();
    Matrix Z = unvec(lu_.transpose().solve(-vec(W)), n, n);
    Matrix R = A_K_ * Z + Z * A_K_.transpose() + W;
    const double bound = 1e-10 * (1.0 + W.norm());
    if (R.norm() > bound) {
      Z += unvec(lu_.transpose().solve(-vec(R)), n, n);
      R = A_K_ * Z + Z * A_K_.transpose() + W;
    }
    Z = 0.5 * (Z + Z.transpose()).eval();
    R = A_K_ * Z + Z * A_K_.transpose() + W;
    if (!Z.allFinite() || R.norm() > bound) {
      throw SingularSystem("closed-loop Lyapunov solve missed the residual "
                           "certificate");
    }
    return Z;
  }

  const Matrix& X() const {
    if (!x_) {
      const Matrix KC = K_ * P_.C;
      x_ = solve_primal(KC.transpose() * P_.R * KC + P_.Q);
    }
    return *x_;
  }

  const Matrix& Y() const {
    if (!y_) y_ = solve_dual(P_.Sigma);
    return *y_;
  }

  double f() const { return (X() * P_.Sigma).trace(); }

  // M = R K C - B^T X, the stationarity defect.
  Matrix defect() const { return P_.R * K_ * P_.C - P_.B.transpose() * X(); }

  Matrix grad() const {
    if (stats_) ++stats_->grad_evals;
    return 2.0 * defect() * Y() * P_.C.transpose();
  }

  // Auxiliary solutions for a Hessian query along direction E.
  Matrix Xprime(const Matrix& E) const {
    const Matrix ME = defect().transpose() * E * P_.C;
    return solve_primal(ME + ME.transpose());
  }

  Matrix Yprime(const Matrix& E) const {
    const Matrix BECY = P_.B * E * P_.C * Y();
    return solve_dual(-(BECY + BECY.transpose()));
  }

 private:
  const LqrProblem& P_;
  const Gain& K_;
  OracleStats* stats_;
  Matrix A_K_;
  Eigen::PartialPivLU<Matrix> lu_;
  mutable std::optional<Matrix> x_;
  mutable std::optional<Matrix> y_;
};

void check_gain_dims(const LqrProblem& P, const Gain& K) {
  if (K.rows() != P.m() || K.cols() != P.r()) {
    throw std::invalid_argument("gain has wrong shape");
  }
  if (!K.allFinite()) {
    throw std::invalid_argument("gain has non-finite entries");
  }
}

}  // namespace

void LqrProblem::validate() const {
  const Eigen::Index nn = n(), mm = m(), rr = r();
  if (nn <= 0 || mm <= 0 || rr <= 0) {
    throw std::invalid_argument("LqrProblem: empty dimensions");
  }
  if (A.cols() != nn || B.rows() != nn || C.cols() != nn || Q.rows() != nn ||
      Q.cols() != nn || R.rows() != mm || R.cols() != mm ||
      Sigma.rows() != nn || Sigma.cols() != nn) {
    throw std::invalid_argument("LqrProblem: inconsistent dimensions");
  }
  if (!A.allFinite() || !B.allFinite() || !C.allFinite() || !Q.allFinite() ||
      !R.allFinite() || !Sigma.allFinite()) {
    throw std::invalid_argument("LqrProblem: non-finite entries");
  }
  if (smallest_sym_eigenvalue(Q) <= 1e-12 ||
      smallest_sym_eigenvalue(R) <= 1e-12 ||
      smallest_sym_eigenvalue(Sigma) <= 1e-12) {
    throw std::invalid_argument("LqrProblem: Q, R, Sigma must be positive "
                                "definite (smallest eigenvalue > 1e-12)");
  }
  const bool c_is_identity =
      rr == nn && C == Matrix::Identity(nn, nn);
  if ((kind == ProblemKind::SLQR) != c_is_identity) {
    throw std::invalid_argument(
        "LqrProblem: kind must be SLQR exactly when C is the identity");
  }
}

LqrProblem LqrProblem::make(Matrix A, Matrix B, Matrix C, Matrix Q, Matrix R,
                            Matrix Sigma) {
  LqrProblem P;
  P.A = std::move(A);
  P.B = std::move(B);
  P.C = std::move(C);
  P.Q = std::move(Q);
  P.R = std::move(R);
  P.Sigma = std::move(Sigma);
  const bool c_is_identity =
      P.C.rows() == P.C.cols() && P.C == Matrix::Identity(P.C.rows(), P.C.cols());
  P.kind = c_is_identity ? ProblemKind::SLQR : ProblemKind::OLQR;
  P.validate();
  return P;
}

bool is_stabilizing(const LqrProblem& P, const Gain& K) {
  check_gain_dims(P, K);
  const Matrix A_K = P.A - P.B * K * P.C;
  try {
    return spectral_abscissa(A_K) < -kStabilityMargin;
  } catch (const EigenFailure&) {
    // Retry once on a balanced copy; treat a second failure as unstable.
    try {
      const Vector d = A_K.cwiseAbs().rowwise().sum().cwiseMax(1e-30);
      const Matrix balanced =
          d.cwiseInverse().asDiagonal() * A_K * d.asDiagonal();
      return spectral_abscissa(balanced) < -kStabilityMargin;
    } catch (const EigenFailure&) {
      return false;
    }
  }
}

double cost(const LqrProblem& P, const Gain& K, OracleStats* stats) {
  check_gain_dims(P, K);
  ClosedLoop cl(P, K, stats);
  if (stats) ++stats->cost_evals;
  return cl.f();
}

Matrix gradient(const LqrProblem& P, const Gain& K, OracleStats* stats) {
  check_gain_dims(P, K);
  ClosedLoop cl(P, K, stats);
  return cl.grad();
}

CostGradient cost_and_gradient(const LqrProblem& P, const Gain& K,
                               OracleStats* stats) {
  check_gain_dims(P, K);
  ClosedLoop cl(P, K, stats);
  if (stats) ++stats->cost_evals;
  return CostGradient{cl.f(), cl.grad()};
}

PointEval try_evaluate(const LqrProblem& P, const Gain& K, bool need_grad,
                       OracleStats* stats) {
  check_gain_dims(P, K);
  PointEval out;
  if (!is_stabilizing(P, K)) return out;
  try {
    ClosedLoop cl(P, K, stats, /*stability_known=*/true);
    if (stats) ++stats->cost_evals;
    out.f = cl.f();
    if (need_grad) out.grad = cl.grad();
    out.stabilizing = true;
  } catch (const SingularSystem&) {
    // So close to the stability margin that the residual certificate fails:
    // unusable for a solver step, same as unstable.
    out.stabilizing = false;
  }
  return out;
}

HessianForm hessian_form(const LqrProblem& P, const Gain& K, const Matrix& E,
                         OracleStats* stats) {
  check_gain_dims(P, K);
  if (E.rows() != P.m() || E.cols() != P.r()) {
    throw std::invalid_argument("direction has wrong shape");
  }
  ClosedLoop cl(P, K, stats);
  HessianForm out;
  if (E.isZero(0.0)) {
    out.X_prime = Matrix::Zero(P.n(), P.n());
    out.Y_prime = Matrix::Zero(P.n(), P.n());
    return out;
  }
  out.X_prime = cl.Xprime(E);
  out.Y_prime = cl.Yprime(E);
  const Matrix lhs = (P.R * E * P.C - P.B.transpose() * out.X_prime) *
                     cl.Y() * P.C.transpose();
  const Matrix rhs = cl.defect() * out.Y_prime * P.C.transpose();
  const double half = (lhs.array() * E.array()).sum() +
                      (rhs.array() * E.array()).sum();
  out.value = 2.0 * half;
  return out;
}

double hessian_quadratic_form(const LqrProblem& P, const Gain& K,
                              const Matrix& E, OracleStats* stats) {
  return hessian_form(P, K, E, stats).value;
}

Matrix hvp_exact(const LqrProblem& P, const Gain& K, const Matrix& E,
                 OracleStats* stats) {
  check_gain_dims(P, K);
  if (E.rows() != P.m() || E.cols() != P.r()) {
    throw std::invalid_argument("direction has wrong shape");
  }
  if (stats) ++stats->hvp_evals;
  ClosedLoop cl(P, K, stats);
  if (E.isZero(0.0)) return Matrix::Zero(P.m(), P.r());
  const Matrix Xp = cl.Xprime(E);
  const Matrix Yp = cl.Yprime(E);
  return 2.0 * (P.R * E * P.C - P.B.transpose() * Xp) * cl.Y() *
             P.C.transpose() +
         2.0 * cl.defect() * Yp * P.C.transpose();
}

Matrix hvp_fd(const LqrProblem& P, const Gain& K, const Matrix& E, double h,
              OracleStats* stats) {
  check_gain_dims(P, K);
  if (!(h > 0.0)) throw std::invalid_argument("hvp_fd: step must be positive");
  if (stats) ++stats->hvp_evals;
  const Matrix g0 = gradient(P, K, stats);
  if (E.isZero(0.0)) return Matrix::Zero(P.m(), P.r());
  const Matrix g1 = gradient(P, K + h * E, stats);
  return (g1 - g0) / h;
}

double default_hvp_step(const Gain& K) {
  return std::sqrt(std::numeric_limits<double>::epsilon()) * (1.0 + K.norm());
}

Matrix assemble_dense_hessian(const LqrProblem& P, const Gain& K,
                              OracleStats* stats, double* asymmetry_out) {
  check_gain_dims(P, K);
  const Eigen::Index m = P.m(), r = P.r();
  const Eigen::Index d = m * r;
  Matrix H(d, d);
  Matrix basis = Matrix::Zero(m, r);
  for (Eigen::Index j = 0; j < d; ++j) {
    basis(j % m, j / m) = 1.0;
    H.col(j) = vec(hvp_exact(P, K, basis, stats));
    basis(j % m, j / m) = 0.0;
  }
  if (asymmetry_out) *asymmetry_out = (H - H.transpose()).norm();
  return 0.5 * (H + H.transpose()).eval();
}

ConstantsBundle constants(const LqrProblem& P, double alpha,
                          std::optional<double> f_star) {
  if (!(alpha > 0.0)) throw InvalidAlpha("constants: alpha must be positive");
  const double norm_B = spectral_norm(P.B);
  if (norm_B == 0.0) throw ZeroInput("constants: B must be nonzero");
  const double norm_A = spectral_norm(P.A);
  const double norm_C = spectral_norm(P.C);
  const double frob_C = P.C.norm();
  const double norm_R = spectral_norm(P.R);
  const double lmin_Q = smallest_sym_eigenvalue(P.Q);
  const double lmin_R = smallest_sym_eigenvalue(P.R);
  const double lmax_R = largest_sym_eigenvalue(P.R);
  const double lmin_S = smallest_sym_eigenvalue(P.Sigma);
  const double n = static_cast<double>(P.n());

  ConstantsBundle b;
  b.alpha = alpha;
  b.zeta = 2.0 * norm_B * alpha / (lmin_S * lmin_R) + norm_A / norm_B;
  const double bc_over_sigma = norm_B * norm_C * alpha / lmin_S;
  b.kappa1 = (2.0 / lmin_Q) * (bc_over_sigma + norm_C * norm_C * norm_R * b.zeta);
  b.kappa2 = b.kappa1;
  b.kappa3 = (2.0 / lmin_Q) *
             ((b.kappa1 + b.kappa2) * bc_over_sigma + norm_C * norm_C * norm_R);
  b.kappa4 = (2.0 / lmin_Q) *
             (2.0 * b.kappa2 * bc_over_sigma + norm_C * norm_C * norm_R);
  const double t = alpha * norm_B / (lmin_S * lmin_Q);
  b.xi = (std::sqrt(n) * alpha / lmin_S) * (t + std::sqrt(t * t + lmax_R));
  b.L1 = (2.0 * alpha / lmin_Q) *
         (lmax_R * norm_C * norm_C + norm_B * frob_C * b.xi);
  b.L2 = 2.0 * norm_B * norm_C * alpha * alpha / (lmin_Q * lmin_S) *
         (2.0 * b.kappa3 + b.kappa4);
  if (f_star) {
    if (!(*f_star > 0.0)) {
      throw std::invalid_argument("constants: f_star must be positive");
    }
    const double denom = norm_A + norm_B * norm_B * alpha / (lmin_S * lmin_R);
    b.mu = lmin_R * lmin_S * lmin_S * lmin_Q / (8.0 * *f_star * denom * denom);
    b.kappa_cond = b.L1 / *b.mu;
  }
  return b;
}

Gain care_oracle(const LqrProblem& P, const Gain& K0, OracleStats* stats) {
  if (P.kind != ProblemKind::SLQR) {
    throw std::invalid_argument("care_oracle: requires an SLQR problem");
  }
  check_gain_dims(P, K0);
  if (!is_stabilizing(P, K0)) {
    throw NotStabilizing("care_oracle: initial gain is not stabilizing");
  }
  const Eigen::PartialPivLU<Matrix> r_lu(P.R);
  Gain K = K0;
  constexpr int kMaxIters = 200;
  for (int i = 0; i < kMaxIters; ++i) {
    ClosedLoop cl(P, K, stats);
    const Gain K_next = r_lu.solve(P.B.transpose() * cl.X());
    const double delta = (K_next - K).norm();
    if (delta <= 1e-12 * (1.0 + K.norm())) {
      return K_next;
    }
    if (!is_stabilizing(P, K_next)) {
      throw NoConvergence("care_oracle: Kleinman iterate left the "
                          "stabilizing set");
    }
    K = K_next;
  }
  throw NoConvergence("care_oracle: no convergence after 200 iterations");
}

}  // namespace lqropt
