#pragma once

// Representing a renewal process as a Poisson process with random dead-time:
// intervals I = X + E with X ~ rho and E ~ Exp(lambda) independent, so that
//   rho(x) = iota(x) + iota'(x)/lambda + (iota(0)/lambda) delta(x).
// rho is a density iff lambda >= sup_x (h - h'/h) = sup_x (-iota'/iota).

#include <functional>
#include <optional>
#include <vector>

#include "refrac/core.hpp"

namespace refrac::renewal {

struct RenewalSpec {
  std::function<double(double)> pdf;      // iota
  std::function<double(double)> dpdf;     // iota'
  std::function<double(double)> hazard;   // h = iota/F, optional
  std::function<double(double)> dhazard;  // h', optional
  double x_min;                           // lower end (> 0) of the log-spaced evaluation grid
  double x_max;
};

// iota = kappa_r, r + 1 exponential stages with rate beta (r = 0 is Exp(beta)).
RenewalSpec gamma_interval(int r, double beta);
// x = xi Delta with log xi ~ N(mu, sigma^2).
RenewalSpec lognormal_interval(double mu, double sigma, double delta);
// Linear interpolation of tabulated iota; derivative by central differences.
RenewalSpec sampled_interval(std::vector<double> x, std::vector<double> pdf);

struct PprdRepresentation {
  double lambda;
  DeadTimeLaw law;
  std::vector<double> x;    // evaluation nodes (empty for closed-form laws)
  std::vector<double> rho;  // iota + iota'/lambda at the nodes, before normalization
};

// Tabulates rho on {0} and a log-spaced grid starting at 4096 nodes, doubling
// until the trapezoid mass changes by less than 1e-9. Values in [-1e-12, 0)
// are clipped; anything lower throws NotRepresentableError at that x.
PprdRepresentation dead_time_from_interval(const RenewalSpec& spec, double lambda);

struct HazardVerdict {
  bool admissible;
  double sup;        // sup of h - h'/h on the grid
  double sup_at;     // its location
  double violation;  // first x violating the condition, NaN when admissible
};

HazardVerdict check_hazard_condition(const RenewalSpec& spec, double lambda);

// sup_x (h - h'/h) by grid search refined with golden section.
double minimal_lambda(const RenewalSpec& spec);

// iota = kappa_r: lambda = beta and rho = kappa_{r-1}; r = 0 is pure Poisson
// (all mass at zero).
PprdRepresentation construct_gamma(int r, double beta);

// e^{-1 - mu + sigma^2}/(Delta sigma^2).
double lognormal_lambda_bound(double mu, double sigma, double delta);

// lambda defaults to the bound; lambda below it throws ArgumentError.
PprdRepresentation construct_lognormal(double mu, double sigma, double delta,
                                       std::optional<double> lambda = std::nullopt);

// sup over `points` log-spaced x in [x_min, x_max] of |iota - rho * eps|,
// eps(x) = lambda e^{-lambda x}.
double convolution_residual(const RenewalSpec& spec, const PprdRepresentation& rep, int points = 512);

}  // namespace refrac::renewal
