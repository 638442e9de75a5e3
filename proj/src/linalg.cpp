#include "lqropt/linalg.hpp"

#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

namespace lqropt {

namespace {

// Kronecker sum I (x) A^T + A^T (x) I, the coefficient matrix of the
// vectorized equation A^T X + X A = -W.
Matrix lyapunov_coefficient(const Matrix& A) {
  const Eigen::Index n = A.rows();
  const Matrix At = A.transpose();
  Matrix M = Matrix::Zero(n * n, n * n);
  // I (x) A^T: block-diagonal copies of A^T.
  for (Eigen::Index j = 0; j < n; ++j) {
    M.block(j * n, j * n, n, n) = At;
  }
  // A^T (x) I: entry (A^T)(i,j) scales an identity block.
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double a = At(i, j);
      if (a != 0.0) {
        M.block(i * n, j * n, n, n).diagonal().array() += a;
      }
    }
  }
  return M;
}

Matrix solve_lyapunov_impl(const Matrix& A, const Matrix& W) {
  const Eigen::Index n = A.rows();
  if (A.cols() != n || W.rows() != n || W.cols() != n) {
    throw std::invalid_argument("solve_lyapunov: dimension mismatch");
  }
  const double abscissa = spectral_abscissa(A);
  if (!(abscissa < -kStabilityMargin)) {
    throw NotHurwitz("solve_lyapunov: spectral abscissa " +
                     std::to_string(abscissa) + " is not below the margin");
  }

  Matrix M = lyapunov_coefficient(A);
  Eigen::PartialPivLU<Matrix> lu(M);
  // PartialPivLU has no rank query; a vanishing diagonal entry of U marks a
  // numerically singular system.
  const double umax = lu.matrixLU().diagonal().cwiseAbs().maxCoeff();
  const double umin = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
  if (!(umin > umax * 1e-300) || !std::isfinite(umax)) {
    throw SingularSystem("solve_lyapunov: vectorized system is singular");
  }

  Vector x = lu.solve(-vec(W));
  Matrix X = unvec(x, n, n);

  const double wnorm = W.norm();
  const double bound = 1e-10 * (1.0 + wnorm);
  auto residual = [&](const Matrix& Xc) {
    return (A.transpose() * Xc + Xc * A + W).eval();
  };
  Matrix R = residual(X);
  if (R.norm() > bound) {
    // One pass of iterative refinement through the same factorization.
    Vector dx = lu.solve(-vec(R));
    X += unvec(dx, n, n);
    R = residual(X);
  }
  X = 0.5 * (X + X.transpose()).eval();
  R = residual(X);
  if (!R.allFinite() || R.norm() > bound) {
    throw SingularSystem("solve_lyapunov: residual " +
                         std::to_string(R.norm()) +
                         " exceeds the certified bound");
  }
  return X;
}

}  // namespace

Vector vec(const Matrix& M) {
  return Eigen::Map<const Vector>(M.data(), M.size());
}

Matrix unvec(const Vector& v, Eigen::Index rows, Eigen::Index cols) {
  return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

double spectral_abscissa(const Matrix& A) {
  if (A.rows() != A.cols()) {
    throw std::invalid_argument("spectral_abscissa: matrix must be square");
  }
  Eigen::EigenSolver<Matrix> es(A, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) {
    throw EigenFailure("spectral_abscissa: eigen solver did not converge");
  }
  return es.eigenvalues().real().maxCoeff();
}

Matrix solve_lyapunov(const Matrix& A, const Matrix& W) {
  return solve_lyapunov_impl(A, W);
}

Matrix solve_lyapunov_dual(const Matrix& A, const Matrix& W) {
  return solve_lyapunov_impl(A.transpose(), W);
}

MinEigResult min_eig_estimate(const LinearOperator& H, double upper_bound,
                              double accuracy, double failure_prob,
                              std::uint64_t seed) {
  const Eigen::Index d = H.dim;
  if (d <= 0 || !H.apply) {
    throw std::invalid_argument("min_eig_estimate: empty operator");
  }
  if (!(accuracy > 0.0) || !(accuracy <= upper_bound)) {
    throw std::invalid_argument("min_eig_estimate: need 0 < accuracy <= L1");
  }
  if (!(failure_prob > 0.0) || !(failure_prob >= 1e-300)) {
    throw std::invalid_argument("min_eig_estimate: bad failure probability");
  }

  const long cap = static_cast<long>(std::ceil(
      4.0 * std::sqrt(upper_bound / accuracy) *
      std::log(4.0 * static_cast<double>(d) / failure_prob)));
  const long max_steps = std::min<long>(std::max<long>(cap, 1), d);

  // Shifted operator B = L1 I - H; its leading eigenvector is the smallest
  // eigenvector of H.
  auto apply_shifted = [&](const Vector& x) {
    return (upper_bound * x - H.apply(x)).eval();
  };

  // Uniform start on the unit sphere from a seeded generator.
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector q(d);
  do {
    for (Eigen::Index i = 0; i < d; ++i) q(i) = normal(gen);
  } while (q.norm() == 0.0);
  q.normalize();

  MinEigResult out;
  Matrix basis(d, max_steps);
  Vector alpha(max_steps), beta(max_steps);
  const double res_tol = std::min(accuracy / 8.0, 1e-8 * (1.0 + upper_bound));

  Vector q_prev = Vector::Zero(d);
  double beta_prev = 0.0;
  long k = 0;
  bool certified = false;
  Vector ritz_tridiag;  // leading Ritz vector in the Lanczos basis

  while (k < max_steps) {
    basis.col(k) = q;
    Vector w = apply_shifted(q);
    ++out.apply_calls;
    alpha(k) = q.dot(w);
    w -= alpha(k) * q + beta_prev * q_prev;
    // Full reorthogonalization; dimensions here are tiny.
    w -= basis.leftCols(k + 1) * (basis.leftCols(k + 1).transpose() * w);
    const double b = w.norm();
    ++k;

    // Ritz extraction on the tridiagonal section.
    Matrix T = Matrix::Zero(k, k);
    for (long i = 0; i < k; ++i) T(i, i) = alpha(i);
    for (long i = 0; i + 1 < k; ++i) {
      T(i, i + 1) = beta(i);
      T(i + 1, i) = beta(i);
    }
    Eigen::SelfAdjointEigenSolver<Matrix> te(T);
    if (te.info() != Eigen::Success) {
      throw EigenFailure("min_eig_estimate: tridiagonal eigen solve failed");
    }
    ritz_tridiag = te.eigenvectors().col(k - 1);
    const double res = b * std::abs(ritz_tridiag(k - 1));

    if (res <= res_tol || b <= 1e-14 * (1.0 + upper_bound) || k == d) {
      certified = true;
      break;
    }
    beta(k - 1) = b;
    beta_prev = b;
    q_prev = basis.col(k - 1);
    q = w / b;
  }

  if (!certified) {
    throw BudgetExceeded(
        "min_eig_estimate: iteration cap reached without certificate");
  }

  Vector v = basis.leftCols(k) * ritz_tridiag;
  v.normalize();
  out.v = v;
  out.lambda_est = v.dot(H.apply(v));
  ++out.apply_calls;
  out.iters = k;
  return out;
}

SymEig dense_sym_eig(const Matrix& H) {
  if (H.rows() != H.cols()) {
    throw std::invalid_argument("dense_sym_eig: matrix must be square");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (H + H.transpose()));
  if (es.info() != Eigen::Success) {
    throw EigenFailure("dense_sym_eig: eigen solver did not converge");
  }
  return SymEig{es.eigenvalues(), es.eigenvectors()};
}

}  // namespace lqropt
