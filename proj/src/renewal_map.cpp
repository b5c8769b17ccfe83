#include "refrac/renewal_map.hpp"

#include <algorithm>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "numeric.hpp"
#include "refrac/errors.hpp"

namespace refrac::renewal {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::size_t kSearchNodes = 4096;

std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  std::vector<double> x(n);
  const double a = std::log(lo), b = std::log(hi);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
  }
  x.front() = lo;
  x.back() = hi;
  return x;
}

void check_spec(const RenewalSpec& spec) {
  if (!spec.pdf || !spec.dpdf) throw ArgumentError("renewal spec needs the interval density and its derivative");
  if (!(spec.x_min > 0.0) || !(spec.x_max > spec.x_min)) throw ArgumentError("renewal spec needs 0 < x_min < x_max");
}

// h - h'/h where h > 0 (equivalently -iota'/iota); NaN where undefined.
double shape_rate(const RenewalSpec& spec, double x) {
  if (spec.hazard && spec.dhazard) {
    const double h = spec.hazard(x);
    if (h > 1e12) throw NotRepresentableError("hazard is unbounded (exceeds 1e12)", x);
    if (h > 0.0) return h - spec.dhazard(x) / h;
    return kNaN;
  }
  const double p = spec.pdf(x);
  return p > 0.0 ? -spec.dpdf(x) / p : kNaN;
}

// The h = 0 branch: h' >= 0 (iota' >= 0 when only iota is known).
bool zero_branch_ok(const RenewalSpec& spec, double x) {
  if (spec.hazard && spec.dhazard) return spec.dhazard(x) >= -1e-12;
  return spec.dpdf(x) >= -1e-12;
}

// e^{-a x} integral_0^x e^{a y} dP(y), a >= 0.
double damped_transform(const DeadTimeLaw& law, double a, double x) {
  if (a * x <= 650.0) return std::exp(-a * x) * law.exp_integral(a, 0.0, x);
  const double lo = std::max(0.0, x - 700.0 / a);
  auto f = [&](double y) { return law.density(y) * std::exp(a * (y - x)); };
  return detail::gauss_composite(f, lo, x, 64) + law.atom_at_zero() * std::exp(-a * x);
}

double golden_max(const RenewalSpec& spec, double lo, double hi) {
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = std::log(lo), b = std::log(hi);
  auto f = [&](double u) {
    const double v = shape_rate(spec, std::exp(u));
    return std::isnan(v) ? -INFINITY : v;
  };
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 200 && b - a > 1e-14 * std::max(1.0, std::abs(a)); ++it) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  return std::max(fc, fd);
}

}  // namespace

RenewalSpec gamma_interval(int r, double beta) {
  if (r < 0) throw ArgumentError("gamma interval index r must be >= 0");
  if (!(beta > 0.0)) throw ArgumentError("gamma interval rate must be > 0");
  const double s = r + 1.0;
  auto log_pdf = [r, beta](double x) {
    return (r + 1) * std::log(beta) + r * std::log(x) - beta * x - std::lgamma(r + 1.0);
  };
  RenewalSpec spec;
  spec.pdf = [r, beta, log_pdf](double x) {
    if (x < 0.0) return 0.0;
    if (x == 0.0) return r == 0 ? beta : 0.0;
    return std::exp(log_pdf(x));
  };
  spec.dpdf = [r, beta, log_pdf](double x) {
    if (x < 0.0) return 0.0;
    if (x == 0.0) return r == 0 ? -beta * beta : (r == 1 ? beta * beta : 0.0);
    return std::exp(log_pdf(x)) * (r / x - beta);
  };
  spec.hazard = [r, s, beta, log_pdf](double x) {
    if (x <= 0.0) return r == 0 ? beta : 0.0;
    return std::exp(log_pdf(x)) / boost::math::gamma_q(s, beta * x);
  };
  spec.dhazard = [r, s, beta, log_pdf](double x) {
    if (x <= 0.0) return r == 1 ? beta * beta : 0.0;
    const double p = std::exp(log_pdf(x));
    const double surv = boost::math::gamma_q(s, beta * x);
    const double h = p / surv;
    return p * (r / x - beta) / surv + h * h;
  };
  spec.x_min = boost::math::gamma_p_inv(s, 1e-14) / beta;
  spec.x_max = boost::math::gamma_q_inv(s, 1e-12) / beta;
  return spec;
}

RenewalSpec lognormal_interval(double mu, double sigma, double delta) {
  if (!(sigma > 0.0) || !(delta > 0.0) || !std::isfinite(mu)) {
    throw ArgumentError("log-normal interval needs sigma > 0 and Delta > 0");
  }
  // g(x) = -iota'/iota = (1 + (log(x/Delta) - mu)/sigma^2)/x.
  auto g = [=](double x) { return (1.0 + (std::log(x / delta) - mu) / (sigma * sigma)) / x; };
  auto pdf = [=](double x) {
    if (x <= 0.0) return 0.0;
    const double z = (std::log(x / delta) - mu) / sigma;
    return std::exp(-0.5 * z * z) / (std::sqrt(2.0 * std::numbers::pi) * sigma * x);
  };
  auto surv = [=](double x) {
    if (x <= 0.0) return 1.0;
    return 0.5 * std::erfc((std::log(x / delta) - mu) / (sigma * std::numbers::sqrt2));
  };
  RenewalSpec spec;
  spec.pdf = pdf;
  spec.dpdf = [=](double x) { return x <= 0.0 ? 0.0 : -pdf(x) * g(x); };
  spec.hazard = [=](double x) { return x <= 0.0 ? 0.0 : pdf(x) / surv(x); };
  spec.dhazard = [=](double x) {
    if (x <= 0.0) return 0.0;
    const double h = pdf(x) / surv(x);
    return -pdf(x) * g(x) / surv(x) + h * h;
  };
  const double z_hi = std::numbers::sqrt2 * boost::math::erfc_inv(2e-10);
  const double z_lo = std::numbers::sqrt2 * boost::math::erfc_inv(2e-14);
  spec.x_min = delta * std::exp(mu - sigma * z_lo);
  spec.x_max = delta * std::exp(mu + sigma * z_hi);
  return spec;
}

RenewalSpec sampled_interval(std::vector<double> x, std::vector<double> pdf) {
  if (x.size() != pdf.size() || x.size() < 3) throw ArgumentError("sampled interval density needs >= 3 matching nodes");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(pdf[i] >= 0.0) || !std::isfinite(pdf[i])) throw ArgumentError("interval density must be finite and >= 0");
    if (i > 0 && !(x[i] > x[i - 1])) throw ArgumentError("interval density nodes must be strictly increasing");
  }
  if (!(x.front() >= 0.0)) throw ArgumentError("interval density nodes must be >= 0");
  std::vector<double> d(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const std::size_t a = i == 0 ? 0 : i - 1;
    const std::size_t b = i + 1 == x.size() ? i : i + 1;
    d[i] = (pdf[b] - pdf[a]) / (x[b] - x[a]);
  }
  auto interp = [x](const std::vector<double>& v) {
    return [x, v](double t) {
      if (t < x.front() || t > x.back()) return 0.0;
      auto it = std::upper_bound(x.begin(), x.end(), t);
      const std::size_t i = it == x.end() ? x.size() - 2 : static_cast<std::size_t>(it - x.begin()) - 1;
      const double w = (t - x[i]) / (x[i + 1] - x[i]);
      return v[i] + w * (v[i + 1] - v[i]);
    };
  };
  RenewalSpec spec;
  spec.pdf = interp(pdf);
  spec.dpdf = interp(d);
  spec.x_min = x.front() > 0.0 ? x.front() : x[1];
  spec.x_max = x.back();
  return spec;
}

PprdRepresentation dead_time_from_interval(const RenewalSpec& spec, double lambda) {
  check_spec(spec);
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ArgumentError("input rate lambda must be > 0");
  const double atom0 = spec.pdf(0.0) / lambda;

  std::vector<double> x, rho;
  double prev_mass = kNaN;
  for (std::size_t n = 4096;; n *= 2) {
    x = log_grid(spec.x_min, spec.x_max, n);
    x.insert(x.begin(), 0.0);
    rho.resize(x.size());
    double mass = atom0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      double v = spec.pdf(x[i]) + spec.dpdf(x[i]) / lambda;
      if (v < -1e-12) {
        throw NotRepresentableError("dead-time density is negative at x = " + std::to_string(x[i]) +
                                        " (rho = " + std::to_string(v) + ")",
                                    x[i]);
      }
      rho[i] = v;
      if (i > 0) mass += 0.5 * (x[i] - x[i - 1]) * (std::max(v, 0.0) + std::max(rho[i - 1], 0.0));
    }
    if (std::abs(mass - prev_mass) < 1e-9) break;
    if (n >= (std::size_t{1} << 20)) throw NumericalError("dead-time density mass did not stabilize by 2^20 nodes");
    prev_mass = mass;
  }
  std::vector<double> clipped(rho.size());
  std::transform(rho.begin(), rho.end(), clipped.begin(), [](double v) { return std::max(v, 0.0); });
  return {lambda, DeadTimeLaw::tabulated(x, std::move(clipped), atom0), std::move(x), std::move(rho)};
}

HazardVerdict check_hazard_condition(const RenewalSpec& spec, double lambda) {
  check_spec(spec);
  HazardVerdict v{true, -INFINITY, kNaN, kNaN};
  for (double x : log_grid(spec.x_min, spec.x_max, kSearchNodes)) {
    const double s = shape_rate(spec, x);
    bool ok;
    if (std::isnan(s)) {
      ok = zero_branch_ok(spec, x);
    } else {
      if (s > v.sup) {
        v.sup = s;
        v.sup_at = x;
      }
      ok = s <= lambda * (1.0 + 1e-9);
    }
    if (!ok && v.admissible) {
      v.admissible = false;
      v.violation = x;
    }
  }
  return v;
}

double minimal_lambda(const RenewalSpec& spec) {
  check_spec(spec);
  const auto x = log_grid(spec.x_min, spec.x_max, kSearchNodes);
  std::size_t best = 0;
  double best_v = -INFINITY;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double s = shape_rate(spec, x[i]);
    if (!std::isnan(s) && s > best_v) {
      best_v = s;
      best = i;
    }
  }
  if (!std::isfinite(best_v)) throw NotRepresentableError("no point with positive hazard on the grid", spec.x_min);
  const double lo = x[best == 0 ? 0 : best - 1];
  const double hi = x[std::min(best + 1, x.size() - 1)];
  return std::max(best_v, golden_max(spec, lo, hi));
}

PprdRepresentation construct_gamma(int r, double beta) {
  if (r < 0) throw ArgumentError("gamma interval index r must be >= 0");
  if (!(beta > 0.0)) throw ArgumentError("gamma interval rate must be > 0");
  if (r == 0) return {beta, DeadTimeLaw::fixed(0.0), {}, {}};
  return {beta, DeadTimeLaw::gamma(r - 1, beta), {}, {}};
}

double lognormal_lambda_bound(double mu, double sigma, double delta) {
  if (!(sigma > 0.0) || !(delta > 0.0)) throw ArgumentError("log-normal interval needs sigma > 0 and Delta > 0");
  return std::exp(-1.0 - mu + sigma * sigma) / (delta * sigma * sigma);
}

PprdRepresentation construct_lognormal(double mu, double sigma, double delta, std::optional<double> lambda) {
  const double bound = lognormal_lambda_bound(mu, sigma, delta);
  const double lam = lambda.value_or(bound);
  if (lam < bound * (1.0 - 1e-12)) {
    throw ArgumentError("lambda = " + std::to_string(lam) + " is below the representability bound " +
                        std::to_string(bound));
  }
  return dead_time_from_interval(lognormal_interval(mu, sigma, delta), lam);
}

double convolution_residual(const RenewalSpec& spec, const PprdRepresentation& rep, int points) {
  check_spec(spec);
  double worst = 0.0;
  for (double x : log_grid(spec.x_min, spec.x_max, static_cast<std::size_t>(std::max(points, 2)))) {
    const double conv = rep.lambda * damped_transform(rep.law, rep.lambda, x);
    worst = std::max(worst, std::abs(spec.pdf(x) - conv));
  }
  return worst;
}

}  // namespace refrac::renewal
