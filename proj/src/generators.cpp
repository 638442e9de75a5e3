#include "lqropt/generators.hpp"

#include <random>

namespace lqropt {

namespace {

Matrix uniform_matrix(Eigen::Index rows, Eigen::Index cols,
                      std::mt19937_64& gen) {
  Matrix M(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      M(i, j) = (gen() >> 11) * 0x1.0p-53;
    }
  }
  return M;
}

}  // namespace

LqrProblem gen_integrator_chain(int n) {
  if (n < 1) throw std::invalid_argument("gen_integrator_chain: n >= 1");
  Matrix A = Matrix::Zero(n, n);
  for (int i = 0; i + 1 < n; ++i) A(i, i + 1) = 1.0;
  Matrix B = Matrix::Zero(n, 1);
  B(n - 1, 0) = 1.0;
  return LqrProblem::make(A, B, Matrix::Identity(n, n),
                          Matrix::Identity(n, n), Matrix::Identity(1, 1),
                          Matrix::Identity(n, n));
}

Gain chain_binomial_gain(int n) {
  // Characteristic polynomial lambda^n + k_n lambda^{n-1} + ... + k_1, so
  // k_{i} = C(n, i-1) places every pole at -1.
  Gain K(1, n);
  double c = 1.0;
  for (int i = 0; i < n; ++i) {
    K(0, i) = c;
    c = c * (n - i) / (i + 1);
  }
  return K;
}

LqrProblem gen_random_medium(int n, int m, std::uint64_t seed) {
  if (n < 1 || m < 1) throw std::invalid_argument("gen_random_medium: n,m >= 1");
  for (int attempt = 0; attempt < 100; ++attempt) {
    std::mt19937_64 gen(seed + static_cast<std::uint64_t>(attempt));
    const Matrix U = uniform_matrix(n, n, gen);
    const Matrix A = U / static_cast<double>(n) - Matrix::Identity(n, n);
    const Matrix B =
        Matrix::Ones(n, m) + 0.5 * uniform_matrix(n, m, gen);
    const Matrix Q1 = uniform_matrix(n, n, gen);
    const Matrix R1 = uniform_matrix(m, m, gen);
    // 1e-9 jitter keeps the squared factors strictly positive definite.
    const Matrix Q = Q1 * Q1.transpose() + 1e-9 * Matrix::Identity(n, n);
    const Matrix R = R1 * R1.transpose() + 1e-9 * Matrix::Identity(m, m);
    if (spectral_abscissa(A) < -kStabilityMargin) {
      return LqrProblem::make(A, B, Matrix::Identity(n, n), Q, R,
                              Matrix::Identity(n, n));
    }
  }
  throw GenerationFailed(
      "gen_random_medium: no Hurwitz A in 100 seeded attempts");
}

LqrProblem gen_olqr_chain(int n) {
  if (n < 1) throw std::invalid_argument("gen_olqr_chain: n >= 1");
  Matrix A = -Matrix::Identity(n, n);
  for (int i = 0; i + 1 < n; ++i) A(i, i + 1) = 1.0;
  Matrix B = Matrix::Zero(n, 1);
  B(n - 1, 0) = 1.0;
  Matrix C = Matrix::Zero(1, n);
  C(0, 0) = 1.0;
  return LqrProblem::make(A, B, C, Matrix::Identity(n, n),
                          Matrix::Identity(1, 1), Matrix::Identity(n, n));
}

}  // namespace lqropt
