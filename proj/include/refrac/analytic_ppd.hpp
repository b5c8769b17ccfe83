#pragma once

// Closed-form machinery for the Poisson process with a fixed dead-time d:
// interval density, its k-fold convolutions, the renewal density R, the
// fundamental solution of the occupation DDE and the exact step response.
//
// Naming: R is the renewal density (conditional intensity given an event at
// 0), sum_{k>=1} f^{*k}. The literature this follows calls it the
// "auto-correlation function". The k = 0 Dirac term is never evaluated
// numerically; every consumer evaluates R at arguments >= d > 0 where it
// vanishes.

#include "refrac/core.hpp"

namespace refrac::analytic {

struct PpdParams {
  double lambda;  // input rate [1/s], >= 0
  double d;       // dead-time [s], >= 0
};

// f(t) = lambda theta(t - d) e^{-lambda (t - d)}.
double interval_density(const PpdParams& p, double t);

// f^{*k}(t) = lambda^k (t - kd)^{k-1} e^{-lambda(t - kd)} theta(t - kd)/(k-1)!, k >= 1,
// evaluated in log-space.
double kfold_interval_density(const PpdParams& p, int k, double t);

// R(t) = sum_{k=1}^{floor(t/d)} f^{*k}(t) for t > 0; lambda when d = 0.
double autocorrelation(const PpdParams& p, double t);

// g(t) = R(t + d)/lambda for t >= 0, g(t < 0) = 0.
double fundamental_solution(const PpdParams& p, double t);

// a0 = 1/(1 + lambda d).
double equilibrium_active_fraction(double lambda, double d);
double equilibrium_rate(double lambda, double d);

// Response to lambda0 -> lambda1 at t = 0 from equilibrium:
// A(t) = (a0/lambda1)(lambda0 + (1 - lambda0/lambda1) R(t + d)), nu = lambda1 A.
Trace step_response(double lambda0, double lambda1, double d, const TimeGrid& grid);

// Integral-form solution A(t) = u(0) g(t) + integral_0^d nu_hist(s - d) g(t - s) ds
// for constant lambda on t >= 0, given the history (A, nu) on [-d, 0]. The
// history must satisfy integral_{-d}^0 nu + A(0) = 1 within 1e-6.
Trace solve_with_history(double lambda, double d, const History& history, const TimeGrid& grid);

}  // namespace refrac::analytic
