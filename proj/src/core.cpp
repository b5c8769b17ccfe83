#include "refrac/core.hpp"

#include <algorithm>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <string>

#include "numeric.hpp"
#include "refrac/errors.hpp"

namespace refrac {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

bool finite_nonneg(double v) { return std::isfinite(v) && v >= 0.0; }

// Index i of the sampled cell [t_i, t_{i+1}] holding t, with fraction.
std::pair<std::size_t, double> locate(const TimeGrid& g, double t) {
  const double span = g.back() - g.t0();
  const double slack = 1e-12 * std::max(1.0, std::abs(span));
  if (!(t >= g.t0() - slack && t <= g.back() + slack)) {
    throw RangeError("time " + std::to_string(t) + " outside sampled span [" +
                     std::to_string(g.t0()) + ", " + std::to_string(g.back()) + "]");
  }
  const double u = std::clamp((t - g.t0()) / g.dt(), 0.0, static_cast<double>(g.size() - 1));
  auto i = static_cast<std::size_t>(std::floor(u));
  if (i >= g.size() - 1) i = g.size() - 2;
  return {i, u - static_cast<double>(i)};
}

double gamma_log_density(int n, double beta, double x) {
  return (n + 1) * std::log(beta) + n * std::log(x) - beta * x - std::lgamma(n + 1.0);
}

double gamma_density(int n, double beta, double x) {
  if (x < 0.0) return 0.0;
  if (x == 0.0) return n == 0 ? beta : 0.0;
  return std::exp(gamma_log_density(n, beta, x));
}

// Integral over [x1, x2] of kappa_n(x) e^{a x}.
double gamma_exp_integral(int n, double beta, double a, double x1, double x2) {
  x1 = std::max(x1, 0.0);
  if (x2 <= x1) return 0.0;
  const double c = beta - a;
  const double shape = n + 1.0;
  if (c > 1e-3 * beta) {
    double diff;
    if (c * x1 > shape) {
      const double q2 = std::isinf(x2) ? 0.0 : boost::math::gamma_q(shape, c * x2);
      diff = boost::math::gamma_q(shape, c * x1) - q2;
    } else {
      const double p2 = std::isinf(x2) ? 1.0 : boost::math::gamma_p(shape, c * x2);
      diff = p2 - boost::math::gamma_p(shape, c * x1);
    }
    return std::exp(shape * std::log(beta / c)) * diff;
  }
  if (std::isinf(x2)) throw DomainError("exponential moment of the gamma law diverges");
  auto f = [&](double x) { return gamma_density(n, beta, x) * std::exp(a * x); };
  return detail::gauss_composite(f, x1, x2, 32);
}

// Linear density on segment i of a tabulated law, restricted to [lo, hi].
struct Piece {
  double xa, xb, p0, slope;
};

std::vector<Piece> tabulated_pieces(const law::Tabulated& t, double lo, double hi) {
  std::vector<Piece> out;
  for (std::size_t i = 0; i + 1 < t.x.size(); ++i) {
    const double a = std::max(t.x[i], lo);
    const double b = std::min(t.x[i + 1], hi);
    if (b <= a) continue;
    const double slope = (t.density[i + 1] - t.density[i]) / (t.x[i + 1] - t.x[i]);
    out.push_back({a, b, t.density[i] + slope * (a - t.x[i]), slope});
  }
  return out;
}

double tabulated_density(const law::Tabulated& t, double x) {
  if (x < t.x.front() || x > t.x.back()) return 0.0;
  auto it = std::upper_bound(t.x.begin(), t.x.end(), x);
  std::size_t i = it == t.x.end() ? t.x.size() - 2 : static_cast<std::size_t>(it - t.x.begin()) - 1;
  const double w = (x - t.x[i]) / (t.x[i + 1] - t.x[i]);
  return t.density[i] + w * (t.density[i + 1] - t.density[i]);
}

double tabulated_cumulative(const law::Tabulated& t, double x) {
  if (x <= t.x.front()) return 0.0;
  if (x >= t.x.back()) return t.cumulative.back();
  auto it = std::upper_bound(t.x.begin(), t.x.end(), x);
  const auto i = static_cast<std::size_t>(it - t.x.begin()) - 1;
  return t.cumulative[i] + 0.5 * (x - t.x[i]) * (t.density[i] + tabulated_density(t, x));
}

}  // namespace

// ---------------------------------------------------------------------------

TimeGrid::TimeGrid(double t0, double dt, std::size_t n) : t0_(t0), dt_(dt), n_(n) {
  if (!std::isfinite(t0) || !(dt > 0.0) || !std::isfinite(dt) || n < 1) {
    throw ArgumentError("time grid needs finite t0, dt > 0 and n >= 1");
  }
}

TimeGrid TimeGrid::covering(double t_begin, double t_end, double dt) {
  if (!(dt > 0.0) || !(t_end >= t_begin)) throw ArgumentError("time grid needs dt > 0 and t_end >= t_begin");
  const double steps = (t_end - t_begin) / dt;
  const double rounded = std::round(steps);
  const auto n = static_cast<std::size_t>(std::abs(steps - rounded) <= 1e-9 * std::max(1.0, steps) ? rounded
                                                                                                    : std::floor(steps));
  return TimeGrid(t_begin, dt, n + 1);
}

// ---------------------------------------------------------------------------

InputSignal InputSignal::constant(double rate) {
  if (!finite_nonneg(rate)) throw ArgumentError("input rate must be finite and >= 0");
  return InputSignal(signal::Constant{rate});
}

InputSignal InputSignal::step(double before, double after, double t_switch) {
  if (!finite_nonneg(before) || !finite_nonneg(after) || !std::isfinite(t_switch)) {
    throw ArgumentError("step rates must be finite and >= 0");
  }
  return InputSignal(signal::Step{before, after, t_switch});
}

InputSignal InputSignal::cosine(double mean, double amplitude, double frequency) {
  if (!finite_nonneg(amplitude) || !(mean >= amplitude) || !std::isfinite(mean) || !finite_nonneg(frequency)) {
    throw ArgumentError("cosine input needs mean >= amplitude >= 0 and frequency >= 0");
  }
  return InputSignal(signal::Cosine{mean, amplitude, frequency});
}

InputSignal InputSignal::sampled(TimeGrid grid, std::vector<double> values) {
  if (values.size() != grid.size() || values.size() < 2) {
    throw ArgumentError("sampled input needs one value per grid point and at least two points");
  }
  if (!std::all_of(values.begin(), values.end(), finite_nonneg)) {
    throw ArgumentError("sampled input rates must be finite and >= 0");
  }
  return InputSignal(signal::Sampled{grid, std::move(values)});
}

double InputSignal::operator()(double t) const {
  if (!std::isfinite(t)) throw DomainError("input evaluated at non-finite time");
  return std::visit(
      overloaded{
          [](const signal::Constant& s) { return s.rate; },
          [t](const signal::Step& s) { return t < s.t_switch ? s.before : s.after; },
          [t](const signal::Cosine& s) {
            return std::max(0.0, s.mean + s.amplitude * std::cos(angular_frequency(s.frequency) * t));
          },
          [t](const signal::Sampled& s) {
            auto [i, w] = locate(s.grid, t);
            return s.values[i] + w * (s.values[i + 1] - s.values[i]);
          },
      },
      v_);
}

double InputSignal::left_limit(double t) const {
  if (const auto* s = std::get_if<signal::Step>(&v_)) return t <= s->t_switch ? s->before : s->after;
  return (*this)(t);
}

double InputSignal::integral(double a, double b) const {
  if (b < a) return -integral(b, a);
  return std::visit(
      overloaded{
          [&](const signal::Constant& s) { return s.rate * (b - a); },
          [&](const signal::Step& s) {
            const double m = std::clamp(s.t_switch, a, b);
            return s.before * (m - a) + s.after * (b - m);
          },
          [&](const signal::Cosine& s) {
            const double w = angular_frequency(s.frequency);
            if (w == 0.0) return (s.mean + s.amplitude) * (b - a);
            return s.mean * (b - a) + s.amplitude * (std::sin(w * b) - std::sin(w * a)) / w;
          },
          [&](const signal::Sampled& s) {
            auto [ia, wa] = locate(s.grid, a);
            auto [ib, wb] = locate(s.grid, b);
            const double dt = s.grid.dt();
            auto value = [&](std::size_t i, double w) { return s.values[i] + w * (s.values[i + 1] - s.values[i]); };
            if (ia == ib) return 0.5 * (value(ia, wa) + value(ib, wb)) * (b - a);
            double sum = 0.5 * (value(ia, wa) + s.values[ia + 1]) * (1.0 - wa) * dt;
            for (std::size_t i = ia + 1; i < ib; ++i) sum += 0.5 * (s.values[i] + s.values[i + 1]) * dt;
            sum += 0.5 * (s.values[ib] + value(ib, wb)) * wb * dt;
            return sum;
          },
      },
      v_);
}

double InputSignal::sup(double a, double b) const {
  return std::visit(overloaded{
                        [](const signal::Constant& s) { return s.rate; },
                        [&](const signal::Step& s) {
                          double m = 0.0;
                          if (a < s.t_switch) m = std::max(m, s.before);
                          if (b >= s.t_switch) m = std::max(m, s.after);
                          return m;
                        },
                        [](const signal::Cosine& s) { return s.mean + s.amplitude; },
                        [&](const signal::Sampled& s) {
                          double m = std::max((*this)(std::clamp(a, s.grid.t0(), s.grid.back())),
                                              (*this)(std::clamp(b, s.grid.t0(), s.grid.back())));
                          for (std::size_t i = 0; i < s.values.size(); ++i) {
                            if (s.grid[i] >= a && s.grid[i] <= b) m = std::max(m, s.values[i]);
                          }
                          return m;
                        },
                    },
                    v_);
}

bool InputSignal::piecewise_constant() const {
  return std::holds_alternative<signal::Constant>(v_) || std::holds_alternative<signal::Step>(v_);
}

double eval_input(const InputSignal& sig, double t) { return sig(t); }

// ---------------------------------------------------------------------------

DeadTimeLaw DeadTimeLaw::fixed(double d) {
  if (!finite_nonneg(d)) throw ArgumentError("dead-time must be finite and >= 0");
  return DeadTimeLaw(law::Fixed{d});
}

DeadTimeLaw DeadTimeLaw::gamma(int n, double beta) {
  if (n < 0 || !(beta > 0.0) || !std::isfinite(beta)) throw ArgumentError("gamma law needs n >= 0 and beta > 0");
  return DeadTimeLaw(law::Gamma{n, beta});
}

DeadTimeLaw DeadTimeLaw::gamma_with_mean(int n, double mean) {
  if (!(mean > 0.0)) throw ArgumentError("gamma law mean must be > 0");
  return gamma(n, (n + 1.0) / mean);
}

DeadTimeLaw DeadTimeLaw::tabulated(std::vector<double> x, std::vector<double> density, double atom0) {
  if (x.size() != density.size() || x.size() < 2) {
    throw ArgumentError("tabulated law needs matching node/density arrays of length >= 2");
  }
  if (!(atom0 >= 0.0 && atom0 <= 1.0)) throw ArgumentError("atom at zero must lie in [0, 1]");
  if (!(x.front() >= 0.0)) throw ArgumentError("tabulated law nodes must be >= 0");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!finite_nonneg(density[i])) throw ArgumentError("tabulated density must be finite and >= 0");
    if (i > 0 && !(x[i] > x[i - 1])) throw ArgumentError("tabulated law nodes must be strictly increasing");
  }
  std::vector<double> cum(x.size(), 0.0);
  for (std::size_t i = 1; i < x.size(); ++i) cum[i] = cum[i - 1] + 0.5 * (x[i] - x[i - 1]) * (density[i] + density[i - 1]);
  const double mass = atom0 + cum.back();
  if (std::abs(mass - 1.0) > 1e-9) {
    throw ValidationError("tabulated law mass " + std::to_string(mass) + " differs from 1 by more than 1e-9");
  }
  if (cum.back() > 0.0) {
    const double scale = (1.0 - atom0) / cum.back();
    for (auto& v : density) v *= scale;
    for (auto& v : cum) v *= scale;
  }
  return DeadTimeLaw(law::Tabulated{std::move(x), std::move(density), atom0, std::move(cum)});
}

double DeadTimeLaw::density(double x) const {
  return std::visit(overloaded{
                        [](const law::Fixed&) { return 0.0; },
                        [x](const law::Gamma& g) { return gamma_density(g.n, g.beta, x); },
                        [x](const law::Tabulated& t) { return tabulated_density(t, x); },
                    },
                    v_);
}

double DeadTimeLaw::survivor(double x) const {
  if (!(x >= 0.0)) throw DomainError("survivor function needs x >= 0");
  return std::visit(overloaded{
                        [x](const law::Fixed& f) { return x < f.d ? 1.0 : 0.0; },
                        [x](const law::Gamma& g) { return boost::math::gamma_q(g.n + 1.0, g.beta * x); },
                        [x](const law::Tabulated& t) {
                          return std::max(0.0, (1.0 - t.atom0) - tabulated_cumulative(t, x));
                        },
                    },
                    v_);
}

double DeadTimeLaw::mean() const { return moment(1); }

double DeadTimeLaw::atom_at_zero() const {
  return std::visit(overloaded{
                        [](const law::Fixed& f) { return f.d == 0.0 ? 1.0 : 0.0; },
                        [](const law::Gamma&) { return 0.0; },
                        [](const law::Tabulated& t) { return t.atom0; },
                    },
                    v_);
}

double DeadTimeLaw::quantile_tail(double tail) const {
  if (!(tail > 0.0 && tail < 1.0)) throw DomainError("tail probability must lie in (0, 1)");
  return std::visit(overloaded{
                        [](const law::Fixed& f) { return f.d; },
                        [tail](const law::Gamma& g) { return boost::math::gamma_q_inv(g.n + 1.0, tail) / g.beta; },
                        [&](const law::Tabulated& t) {
                          if (survivor(0.0) <= tail) return 0.0;
                          double lo = 0.0;
                          double hi = t.x.back();
                          for (int it = 0; it < 200 && hi - lo > 1e-15 * t.x.back(); ++it) {
                            const double mid = 0.5 * (lo + hi);
                            (survivor(mid) > tail ? lo : hi) = mid;
                          }
                          return hi;
                        },
                    },
                    v_);
}

double DeadTimeLaw::exp_integral(double a, double x1, double x2) const {
  return std::visit(overloaded{
                        [&](const law::Fixed& f) { return (f.d >= x1 && f.d <= x2) ? std::exp(a * f.d) : 0.0; },
                        [&](const law::Gamma& g) { return gamma_exp_integral(g.n, g.beta, a, x1, x2); },
                        [&](const law::Tabulated& t) {
                          double sum = (x1 <= 0.0 && x2 >= 0.0) ? t.atom0 : 0.0;
                          for (const auto& p : tabulated_pieces(t, x1, x2)) {
                            sum += detail::linear_exp_segment(p.xa, p.xb, p.p0, p.slope, a);
                          }
                          return sum;
                        },
                    },
                    v_);
}

cplx DeadTimeLaw::transform(cplx a) const {
  return std::visit(overloaded{
                        [&](const law::Fixed& f) { return std::exp(a * f.d); },
                        [&](const law::Gamma& g) { return std::pow(g.beta / (g.beta - a), g.n + 1); },
                        [&](const law::Tabulated& t) {
                          cplx sum = t.atom0;
                          for (const auto& p : tabulated_pieces(t, 0.0, t.x.back())) {
                            sum += detail::linear_exp_segment(p.xa, p.xb, p.p0, p.slope, a);
                          }
                          return sum;
                        },
                    },
                    v_);
}

double DeadTimeLaw::moment(int m) const {
  if (m < 0) throw DomainError("moment order must be >= 0");
  return std::visit(overloaded{
                        [m](const law::Fixed& f) { return std::pow(f.d, m); },
                        [m](const law::Gamma& g) {
                          double v = 1.0;
                          for (int j = 1; j <= m; ++j) v *= (g.n + j) / g.beta;
                          return v;
                        },
                        [m](const law::Tabulated& t) {
                          using Rule = boost::math::quadrature::gauss<double, 15>;
                          double sum = m == 0 ? t.atom0 : 0.0;
                          for (const auto& p : tabulated_pieces(t, 0.0, t.x.back())) {
                            auto f = [&](double x) { return std::pow(x, m) * (p.p0 + p.slope * (x - p.xa)); };
                            sum += Rule::integrate(f, p.xa, p.xb);
                          }
                          return sum;
                        },
                    },
                    v_);
}

double DeadTimeLaw::integrated_survivor(double y) const {
  if (!(y >= 0.0)) throw DomainError("integrated survivor needs y >= 0");
  return std::visit(overloaded{
                        [y](const law::Fixed& f) { return std::max(f.d - y, 0.0); },
                        [y](const law::Gamma& g) {
                          const double s = g.n + 1.0;
                          return s / g.beta * boost::math::gamma_q(s + 1.0, g.beta * y) -
                                 y * boost::math::gamma_q(s, g.beta * y);
                        },
                        [y](const law::Tabulated& t) {
                          using Rule = boost::math::quadrature::gauss<double, 3>;
                          double sum = 0.0;
                          for (const auto& p : tabulated_pieces(t, y, t.x.back())) {
                            auto f = [&](double x) { return (x - y) * (p.p0 + p.slope * (x - p.xa)); };
                            sum += Rule::integrate(f, p.xa, p.xb);
                          }
                          return sum;
                        },
                    },
                    v_);
}

double law_survivor(const DeadTimeLaw& law, double x) { return law.survivor(x); }
double law_mean(const DeadTimeLaw& law) { return law.mean(); }

// ---------------------------------------------------------------------------

Spectrum::Spectrum(double omega, int order) : omega_(omega), order_(order), c_(2 * order + 1, cplx{}) {
  if (order < 0) throw ArgumentError("spectrum order must be >= 0");
  if (!(omega > 0.0) || !std::isfinite(omega)) throw ArgumentError("spectrum base frequency must be > 0");
}

Spectrum::Spectrum(double omega, std::vector<cplx> coeffs)
    : omega_(omega), order_(static_cast<int>(coeffs.size() / 2)), c_(std::move(coeffs)) {
  if (c_.size() % 2 != 1) throw ArgumentError("spectrum needs 2K+1 coefficients");
  if (!(omega > 0.0) || !std::isfinite(omega)) throw ArgumentError("spectrum base frequency must be > 0");
}

cplx Spectrum::operator[](int k) const {
  if (k < -order_ || k > order_) return {};
  return c_[static_cast<std::size_t>(k + order_)];
}

void Spectrum::set(int k, cplx value) {
  if (k < -order_ || k > order_) throw RangeError("harmonic index outside spectrum order");
  c_[static_cast<std::size_t>(k + order_)] = value;
}

cplx Spectrum::evaluate(double t) const {
  cplx sum = (*this)[0];
  for (int k = 1; k <= order_; ++k) {
    const double ph = k * omega_ * t;
    const cplx e{std::cos(ph), std::sin(ph)};
    sum += (*this)[k] * e + (*this)[-k] * std::conj(e);
  }
  return sum;
}

double Spectrum::hermitian_defect() const {
  double m = std::abs((*this)[0].imag());
  for (int k = 1; k <= order_; ++k) m = std::max(m, std::abs((*this)[-k] - std::conj((*this)[k])));
  return m;
}

void Spectrum::symmetrize() {
  set(0, {(*this)[0].real(), 0.0});
  for (int k = 1; k <= order_; ++k) {
    const cplx avg = 0.5 * ((*this)[k] + std::conj((*this)[-k]));
    set(k, avg);
    set(-k, std::conj(avg));
  }
}

Spectrum Spectrum::resized(int order) const {
  Spectrum out(omega_, order);
  for (int k = -std::min(order, order_); k <= std::min(order, order_); ++k) out.set(k, (*this)[k]);
  return out;
}

Spectrum spectrum_of_signal(const InputSignal& sig, double omega, int order) {
  Spectrum out(omega, order);
  const double period = kTwoPi / omega;
  std::visit(overloaded{
                 [&](const signal::Constant& s) { out.set(0, s.rate); },
                 [&](const signal::Step&) { throw ArgumentError("a step input is not periodic"); },
                 [&](const signal::Cosine& s) {
                   out.set(0, s.mean);
                   if (s.amplitude == 0.0) return;
                   const double m = angular_frequency(s.frequency) / omega;
                   const double mr = std::round(m);
                   if (mr < 1.0 || std::abs(m - mr) > 1e-9 * std::max(1.0, m)) {
                     throw ArgumentError("cosine frequency is not a harmonic of the base frequency");
                   }
                   const int k = static_cast<int>(mr);
                   if (k <= order) {
                     out.set(k, 0.5 * s.amplitude);
                     out.set(-k, 0.5 * s.amplitude);
                   }
                 },
                 [&](const signal::Sampled& s) {
                   const auto n = s.values.size();
                   if (std::abs(static_cast<double>(n) * s.grid.dt() - period) > 1e-9 * period) {
                     throw ArgumentError("sampled input must span exactly one period (n*dt == 2 pi/omega)");
                   }
                   if (2 * static_cast<std::size_t>(order) + 1 > n) {
                     throw ArgumentError("spectrum order exceeds the Nyquist limit of the samples");
                   }
                   for (int k = -order; k <= order; ++k) {
                     cplx sum{};
                     for (std::size_t j = 0; j < n; ++j) {
                       const double ph = -k * omega * s.grid[j];
                       sum += s.values[j] * cplx{std::cos(ph), std::sin(ph)};
                     }
                     out.set(k, sum / static_cast<double>(n));
                   }
                   out.symmetrize();
                 },
             },
             sig.variant());
  return out;
}

// ---------------------------------------------------------------------------

History equilibrium_history(double lambda, const DeadTimeLaw& law) {
  if (!finite_nonneg(lambda)) throw ArgumentError("equilibrium rate must be finite and >= 0");
  const double a = 1.0 / (1.0 + lambda * law.mean());
  return History{[a](double) { return a; }, [v = lambda * a](double) { return v; }};
}

History sampled_history(const TimeGrid& grid, std::vector<double> active, std::vector<double> rate) {
  if (active.size() != grid.size() || rate.size() != grid.size() || grid.size() < 2) {
    throw ArgumentError("sampled history needs one (A, nu) pair per grid point and at least two points");
  }
  auto interp = [grid](const std::vector<double>& v) {
    return [grid, v](double t) {
      auto [i, w] = locate(grid, t);
      return v[i] + w * (v[i + 1] - v[i]);
    };
  };
  return History{interp(active), interp(rate)};
}

}  // namespace refrac
