#pragma once

#include <cstdint>
#include <functional>

#include <Eigen/Dense>

#include "lqropt/errors.hpp"

namespace lqropt {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// A matrix counts as Hurwitz only if its spectral abscissa is below
// -kStabilityMargin, so the Lyapunov systems we build stay well conditioned.
inline constexpr double kStabilityMargin = 1e-9;

// Matrix-free symmetric operator, used for Hessian-vector products.
struct LinearOperator {
  Eigen::Index dim = 0;
  std::function<Vector(const Vector&)> apply;
};

// Largest real part over the eigenvalues of A.
double spectral_abscissa(const Matrix& A);

// Solves A^T X + X A + W = 0 for symmetric W and Hurwitz A via the Kronecker
// vectorization (I (x) A^T + A^T (x) I) vec(X) = -vec(W) with a dense LU.
// The result is symmetrized and its residual verified against
// 1e-10 * (1 + |W|_F); one step of iterative refinement is applied first if
// the raw solve misses that bound.
Matrix solve_lyapunov(const Matrix& A, const Matrix& W);

// Solves A Y + Y A^T + W = 0 (the transposed equation).
Matrix solve_lyapunov_dual(const Matrix& A, const Matrix& W);

struct MinEigResult {
  double lambda_est = 0.0;  // v^T H v for the returned direction
  Vector v;                 // unit vector
  long iters = 0;           // Lanczos steps taken
  long apply_calls = 0;     // operator applications
};

// Additive alpha-approximate smallest eigenvector of a symmetric operator H
// with |H| <= upper_bound. Runs Lanczos on the shifted operator
// upper_bound * I - H, whose leading eigenvector is the smallest eigenvector
// of H, from a seeded uniform start on the unit sphere. The iteration cap is
// ceil(4 * sqrt(upper_bound/accuracy) * ln(4 dim / failure_prob)); hitting it
// without the residual certificate raises BudgetExceeded.
MinEigResult min_eig_estimate(const LinearOperator& H, double upper_bound,
                              double accuracy, double failure_prob,
                              std::uint64_t seed);

struct SymEig {
  Vector eigenvalues;   // ascending
  Matrix eigenvectors;  // orthonormal columns, aligned with eigenvalues
};

// Dense symmetric eigendecomposition; used as a test oracle.
SymEig dense_sym_eig(const Matrix& H);

// Column-stacking vectorization and its inverse.
Vector vec(const Matrix& M);
Matrix unvec(const Vector& v, Eigen::Index rows, Eigen::Index cols);

}  // namespace lqropt
