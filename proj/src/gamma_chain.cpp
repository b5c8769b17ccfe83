#include "refrac/gamma_chain.hpp"

#include <cmath>
#include <string>

#include "refrac/errors.hpp"

namespace refrac::gamma_chain {

namespace {

void check(int n, double beta) {
  if (n < 0) throw ArgumentError("gamma shape index must be >= 0");
  if (!(beta > 0.0) || !std::isfinite(beta)) throw ArgumentError("gamma rate beta must be > 0");
}

// M b without forming M.
State apply(int n, double beta, double lambda, const State& b) {
  State out(n + 2);
  const double a = b(n + 1);
  out(0) = beta * (lambda * a - b(0));
  for (int k = 1; k <= n; ++k) out(k) = beta * (b(k - 1) - b(k));
  out(n + 1) = b(n) - lambda * a;
  return out;
}

}  // namespace

Matrix build_generator(int n, double beta, double lambda) {
  check(n, beta);
  if (!(lambda >= 0.0)) throw ArgumentError("input rate must be >= 0");
  Matrix m = Matrix::Zero(n + 2, n + 2);
  m(0, 0) = -beta;
  m(0, n + 1) = beta * lambda;
  for (int k = 1; k <= n; ++k) {
    m(k, k - 1) = beta;
    m(k, k) = -beta;
  }
  m(n + 1, n) = 1.0;
  m(n + 1, n + 1) = -lambda;
  return m;
}

State equilibrium_state(int n, double beta, double lambda) {
  check(n, beta);
  if (!(lambda >= 0.0)) throw ArgumentError("input rate must be >= 0");
  State b = State::Zero(n + 2);
  if (lambda == 0.0) {
    b(n + 1) = 1.0;
    return b;
  }
  const double mean = (n + 1.0) / beta;
  const double nu = lambda / (1.0 + lambda * mean);
  b.head(n + 1).setConstant(nu);
  b(n + 1) = 1.0 / (1.0 + lambda * mean);
  return b;
}

double conserved(const State& b, double beta) {
  const auto n1 = b.size() - 1;
  return b(n1) + b.head(n1).sum() / beta;
}

Matrix expm(const Matrix& m) {
  const double norm = m.cwiseAbs().colwise().sum().maxCoeff();
  int s = 0;
  if (norm > 0.5) s = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  const Matrix a = m / std::ldexp(1.0, s);
  const auto dim = m.rows();
  Matrix result = Matrix::Identity(dim, dim);
  Matrix term = Matrix::Identity(dim, dim);
  for (int j = 1; j <= 20; ++j) {
    term = term * a / static_cast<double>(j);
    result += term;
  }
  for (int i = 0; i < s; ++i) result = result * result;
  return result;
}

ChainTrace step_response(int n, double beta, double lambda0, double lambda1, const TimeGrid& grid) {
  check(n, beta);
  if (!(lambda1 > 0.0)) throw ArgumentError("step response needs lambda1 > 0");
  if (grid.t0() < 0.0) throw ArgumentError("step response grid must start at t >= 0");
  const State b0 = equilibrium_state(n, beta, lambda0);
  const Matrix m = build_generator(n, beta, lambda1);

  ChainTrace out{Trace{grid, std::vector<double>(grid.size()), std::vector<double>(grid.size())}, {}};
  out.states.reserve(grid.size());
  State b = grid.t0() == 0.0 ? b0 : State(expm(m * grid.t0()) * b0);
  const Matrix e = expm(m * grid.dt());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (i > 0) b = e * b;
    out.trace.active[i] = b(n + 1);
    out.trace.rate[i] = lambda1 * b(n + 1);
    out.states.push_back(b);
  }
  return out;
}

ChainTrace integrate(int n, double beta, const InputSignal& sig, const State& b0, const TimeGrid& grid) {
  check(n, beta);
  if (b0.size() != n + 2) throw ArgumentError("initial chain state must have n + 2 entries");
  const double h = grid.dt();
  const double lam_max = sig.sup(grid.t0(), grid.back());
  if ((lam_max + beta) * h > 0.1) {
    throw ArgumentError("time step too large for the chain: (lambda_max + beta) h = " +
                        std::to_string((lam_max + beta) * h) + " > 0.1");
  }
  ChainTrace out{Trace{grid, std::vector<double>(grid.size()), std::vector<double>(grid.size())}, {}};
  out.states.reserve(grid.size());
  State b = b0;
  out.trace.active[0] = b(n + 1);
  out.trace.rate[0] = sig(grid.t0()) * b(n + 1);
  out.states.push_back(b);
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    const double t = grid[i];
    const double l_s = sig(t);
    const double l_m = sig(t + 0.5 * h);
    const double l_e = sig.left_limit(grid[i + 1]);
    const State k1 = apply(n, beta, l_s, b);
    const State k2 = apply(n, beta, l_m, b + 0.5 * h * k1);
    const State k3 = apply(n, beta, l_m, b + 0.5 * h * k2);
    const State k4 = apply(n, beta, l_e, b + h * k3);
    b += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    out.trace.active[i + 1] = b(n + 1);
    out.trace.rate[i + 1] = sig(grid[i + 1]) * b(n + 1);
    out.states.push_back(b);
  }
  return out;
}

}  // namespace refrac::gamma_chain
