#pragma once

// Gamma dead-time law kappa_n as a closed linear ODE chain. The state is
// ordered (b_0, ..., b_n, A) with b_k = integral kappa_k(t - x) nu(x) dx:
//   b_0' = beta lambda A - beta b_0
//   b_k' = beta (b_{k-1} - b_k),   1 <= k <= n
//   A'   = b_n - lambda A
// The functional C(b) = A + sum_k b_k/beta is conserved and equals 1.

#include <Eigen/Dense>

#include "refrac/core.hpp"

namespace refrac::gamma_chain {

using Matrix = Eigen::MatrixXd;
using State = Eigen::VectorXd;  // n + 2 entries

Matrix build_generator(int n, double beta, double lambda);

// b_k = nu, A = 1 - nu (n+1)/beta with nu = (1/lambda + (n+1)/beta)^{-1};
// lambda = 0 gives A = 1, b = 0.
State equilibrium_state(int n, double beta, double lambda);

// A + sum_k b_k / beta.
double conserved(const State& b, double beta);

// exp(M) by scaling and squaring with a 20-term Taylor series, scaled so
// that ||M / 2^s||_1 <= 0.5.
Matrix expm(const Matrix& m);

struct ChainTrace {
  Trace trace;
  std::vector<State> states;  // one per grid point
};

// Equilibrium for lambda0, then lambda1 from t = 0 on; the grid must start
// at t >= 0. exp(M dt) is formed once and applied step by step.
ChainTrace step_response(int n, double beta, double lambda0, double lambda1, const TimeGrid& grid);

// Classical RK4 with time-dependent lambda; needs (lambda_max + beta) dt <= 0.1.
ChainTrace integrate(int n, double beta, const InputSignal& sig, const State& b0, const TimeGrid& grid);

}  // namespace refrac::gamma_chain
