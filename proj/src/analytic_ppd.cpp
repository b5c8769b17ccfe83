#include "refrac/analytic_ppd.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "refrac/errors.hpp"

namespace refrac::analytic {

namespace {

void check_params(const PpdParams& p) {
  if (!(p.lambda >= 0.0) || !(p.d >= 0.0) || !std::isfinite(p.lambda) || !std::isfinite(p.d)) {
    throw ArgumentError("PPD parameters need lambda >= 0 and d >= 0");
  }
}

// Composite Simpson over [a, b] with panel width at most `h`.
template <class F>
double simpson(F&& f, double a, double b, double h) {
  if (b <= a) return 0.0;
  int n = std::max(2, static_cast<int>(std::ceil((b - a) / h - 1e-9)));
  n += n % 2;
  const double w = (b - a) / n;
  double sum = f(a) + f(b);
  for (int i = 1; i < n; ++i) sum += (i % 2 == 1 ? 4.0 : 2.0) * f(a + i * w);
  return sum * w / 3.0;
}

}  // namespace

double interval_density(const PpdParams& p, double t) {
  check_params(p);
  if (t < p.d) return 0.0;
  return p.lambda * std::exp(-p.lambda * (t - p.d));
}

double kfold_interval_density(const PpdParams& p, int k, double t) {
  check_params(p);
  if (k < 1) throw ArgumentError("k-fold interval density needs k >= 1 (k = 0 is the Dirac delta)");
  const double s = t - k * p.d;
  if (s < 0.0 || p.lambda == 0.0) return 0.0;
  if (k == 1) return p.lambda * std::exp(-p.lambda * s);
  if (s == 0.0) return 0.0;
  return std::exp(k * std::log(p.lambda) + (k - 1) * std::log(s) - p.lambda * s - std::lgamma(static_cast<double>(k)));
}

double autocorrelation(const PpdParams& p, double t) {
  check_params(p);
  if (!(t > 0.0)) throw DomainError("renewal density is evaluated for t > 0 only");
  if (p.d == 0.0) return p.lambda;
  double sum = 0.0;
  for (int k = 1; t - k * p.d >= 0.0; ++k) sum += kfold_interval_density(p, k, t);
  return sum;
}

double fundamental_solution(const PpdParams& p, double t) {
  check_params(p);
  if (!(p.lambda > 0.0)) throw ArgumentError("fundamental solution needs lambda > 0");
  if (t < 0.0) return 0.0;
  if (p.d == 0.0) return 1.0;
  return autocorrelation(p, t + p.d) / p.lambda;
}

double equilibrium_active_fraction(double lambda, double d) {
  if (!(lambda >= 0.0) || !(d >= 0.0)) throw ArgumentError("equilibrium needs lambda >= 0 and d >= 0");
  return 1.0 / (1.0 + lambda * d);
}

double equilibrium_rate(double lambda, double d) { return lambda * equilibrium_active_fraction(lambda, d); }

Trace step_response(double lambda0, double lambda1, double d, const TimeGrid& grid) {
  if (!(lambda1 > 0.0)) throw ArgumentError("step response needs lambda1 > 0");
  if (grid.t0() < 0.0) throw ArgumentError("step response grid must start at t >= 0");
  const double a0 = equilibrium_active_fraction(lambda0, d);
  const PpdParams p{lambda1, d};
  Trace out{grid, std::vector<double>(grid.size()), std::vector<double>(grid.size())};
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double a = 1.0;
    if (d > 0.0) {
      const double r = autocorrelation(p, grid[i] + d);
      a = a0 / lambda1 * (lambda0 + (1.0 - lambda0 / lambda1) * r);
    }
    out.active[i] = a;
    out.rate[i] = lambda1 * a;
  }
  return out;
}

Trace solve_with_history(double lambda, double d, const History& history, const TimeGrid& grid) {
  if (!(lambda > 0.0)) throw ArgumentError("integral-form solution needs lambda > 0");
  if (!(d >= 0.0)) throw ArgumentError("dead-time must be >= 0");
  if (grid.t0() < 0.0) throw ArgumentError("integral-form solution grid must start at t >= 0");
  Trace out{grid, std::vector<double>(grid.size(), 1.0), std::vector<double>(grid.size(), lambda)};
  if (d == 0.0) return out;

  const double h = d / 1024.0;
  // Normalization of the history: integral_{-d}^0 nu + A(0) = 1.
  const double mass = simpson(history.rate, -d, 0.0, h) + history.active(0.0);
  if (std::abs(mass - 1.0) > 1e-6) {
    throw ValidationError("history violates normalization: integral(nu) + A(0) = " + std::to_string(mass));
  }

  const PpdParams p{lambda, d};
  const double u0 = history.active(0.0);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double t = grid[i];
    const double upper = std::min(t, d);
    // g(t - s) has derivative kinks at s = t - j d.
    std::vector<double> cuts{0.0};
    for (int j = 1; t - j * d > 0.0; ++j) {
      if (t - j * d < upper) cuts.push_back(t - j * d);
    }
    cuts.push_back(upper);
    std::sort(cuts.begin(), cuts.end());
    auto integrand = [&](double s) { return history.rate(s - d) * fundamental_solution(p, t - s); };
    double conv = 0.0;
    for (std::size_t c = 0; c + 1 < cuts.size(); ++c) conv += simpson(integrand, cuts[c], cuts[c + 1], h);
    // For t < d the kernel jumps from 1 to 0 at s = t; the upper limit handles it.
    out.active[i] = u0 * fundamental_solution(p, t) + conv;
    out.rate[i] = lambda * out.active[i];
  }
  return out;
}

}  // namespace refrac::analytic
