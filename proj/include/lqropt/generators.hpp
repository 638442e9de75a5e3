#pragma once

#include <cstdint>

#include "lqropt/lqr.hpp"

namespace lqropt {

// Integrator chain: A has ones on the superdiagonal, B is the last standard
// basis vector, C = I, Q = Sigma = I, R = 1.
LqrProblem gen_integrator_chain(int n);

// A gain that places all closed-loop poles of the chain at -1 (binomial
// coefficients); stabilizing for every n.
Gain chain_binomial_gain(int n);

// Medium-size random SLQR instance: A = (1/n) U - I, B = ones + U'/2,
// Q = Q1 Q1^T + 1e-9 I, R = R1 R1^T + 1e-9 I, Sigma = I, with U, U', Q1, R1
// uniform on [0,1]. Regenerates with an incremented seed until A is Hurwitz
// so that K = 0 is stabilizing; raises GenerationFailed after 100 attempts.
LqrProblem gen_random_medium(int n, int m, std::uint64_t seed);

// Output-feedback desk instance: the integrator chain shifted by -I (so K = 0
// stabilizes) observed through the first state only.
LqrProblem gen_olqr_chain(int n);

}  // namespace lqropt
