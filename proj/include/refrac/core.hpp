#pragma once

// Shared domain types: time grids, input signals, dead-time laws, Fourier
// spectra and sampled traces. Every type here is immutable after
// construction and every free function is pure.

#include <complex>
#include <cstddef>
#include <functional>
#include <numbers>
#include <span>
#include <variant>
#include <vector>

namespace refrac {

using cplx = std::complex<double>;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// All frequencies enter as Hz and are converted here, and only here.
constexpr double angular_frequency(double f_hz) { return kTwoPi * f_hz; }
constexpr double frequency_hz(double omega) { return omega / kTwoPi; }

// Uniform sampling t_i = t0 + i*dt, i = 0..n-1.
class TimeGrid {
 public:
  TimeGrid(double t0, double dt, std::size_t n);

  // Grid covering [t_begin, t_end] with step dt; the end point is included
  // when (t_end - t_begin)/dt is integral within 1e-9.
  static TimeGrid covering(double t_begin, double t_end, double dt);

  double t0() const { return t0_; }
  double dt() const { return dt_; }
  std::size_t size() const { return n_; }
  double operator[](std::size_t i) const { return t0_ + static_cast<double>(i) * dt_; }
  double back() const { return (*this)[n_ - 1]; }

 private:
  double t0_;
  double dt_;
  std::size_t n_;
};

// ---------------------------------------------------------------------------
// Input rate lambda(t)

namespace signal {
struct Constant {
  double rate;
};
// lambda = before for t < t_switch, after for t >= t_switch (right-continuous).
struct Step {
  double before;
  double after;
  double t_switch;
};
// lambda = mean + amplitude * cos(2 pi f t), mean >= amplitude >= 0.
struct Cosine {
  double mean;
  double amplitude;
  double frequency;
};
// Piecewise-linear interpolation of samples on a grid.
struct Sampled {
  TimeGrid grid;
  std::vector<double> values;
};
}  // namespace signal

class InputSignal {
 public:
  using Variant = std::variant<signal::Constant, signal::Step, signal::Cosine, signal::Sampled>;

  static InputSignal constant(double rate);
  static InputSignal step(double before, double after, double t_switch);
  static InputSignal cosine(double mean, double amplitude, double frequency);
  static InputSignal sampled(TimeGrid grid, std::vector<double> values);

  const Variant& variant() const { return v_; }

  // Right-continuous value lambda(t).
  double operator()(double t) const;
  // lambda(t-); differs from operator() only at the switch of a Step.
  double left_limit(double t) const;
  // Exact integral of lambda over [a, b] (piecewise-linear exact for Sampled).
  double integral(double a, double b) const;
  // Upper bound of lambda on [a, b].
  double sup(double a, double b) const;
  // Constant or Step: lambda is piecewise constant with at most one switch.
  bool piecewise_constant() const;

 private:
  explicit InputSignal(Variant v) : v_(std::move(v)) {}
  Variant v_;
};

double eval_input(const InputSignal& sig, double t);

// ---------------------------------------------------------------------------
// Dead-time law rho

namespace law {
struct Fixed {
  double d;
};
// kappa_n(x) = beta^{n+1} x^n e^{-beta x} / n!, mean (n+1)/beta.
struct Gamma {
  int n;
  double beta;
};
// Piecewise-linear density on strictly increasing nodes x (x[0] >= 0), zero
// outside [x.front(), x.back()], plus a point mass atom0 at x = 0.
struct Tabulated {
  std::vector<double> x;
  std::vector<double> density;
  double atom0;
  std::vector<double> cumulative;  // trapezoid mass up to node i
};
}  // namespace law

class DeadTimeLaw {
 public:
  using Variant = std::variant<law::Fixed, law::Gamma, law::Tabulated>;

  static DeadTimeLaw fixed(double d);
  static DeadTimeLaw gamma(int n, double beta);
  // Gamma law with shape index n and the given mean: beta = (n+1)/mean.
  static DeadTimeLaw gamma_with_mean(int n, double mean);
  // Total mass atom0 + integral(density) must equal 1 within 1e-9; the
  // density is rescaled to absorb that residual exactly.
  static DeadTimeLaw tabulated(std::vector<double> x, std::vector<double> density, double atom0);

  const Variant& variant() const { return v_; }

  // Continuous part of the density (atoms excluded).
  double density(double x) const;
  // F(x) = P(X > x).
  double survivor(double x) const;
  double mean() const;
  double atom_at_zero() const;
  // Smallest w with P(X > w) <= tail (w = d for Fixed).
  double quantile_tail(double tail) const;
  // Integral over [x1, x2] of e^{a x} dP(x), atoms included when inside.
  double exp_integral(double a, double x1, double x2) const;
  // E[e^{a X}] for complex a with Re(a) < beta (Gamma) / any a otherwise.
  cplx transform(cplx a) const;
  // Raw moment E[X^m].
  double moment(int m) const;
  // E[(X - y)^+] = integral_y^inf F(u) du.
  double integrated_survivor(double y) const;

 private:
  explicit DeadTimeLaw(Variant v) : v_(std::move(v)) {}
  Variant v_;
};

double law_survivor(const DeadTimeLaw& law, double x);
double law_mean(const DeadTimeLaw& law);

// ---------------------------------------------------------------------------
// Fourier spectrum c_k, k = -K..K, of a real T-periodic function, T = 2 pi/omega.

class Spectrum {
 public:
  Spectrum(double omega, int order);
  Spectrum(double omega, std::vector<cplx> coeffs);  // size 2K+1, ascending k

  double omega() const { return omega_; }
  int order() const { return order_; }
  // c_k, zero for |k| > K.
  cplx operator[](int k) const;
  void set(int k, cplx value);
  const std::vector<cplx>& coefficients() const { return c_; }

  // Sum_k c_k e^{i k omega t}.
  cplx evaluate(double t) const;
  // max_k |c_{-k} - conj(c_k)|.
  double hermitian_defect() const;
  // Replace c_k, c_{-k} by their Hermitian average.
  void symmetrize();
  // Copy truncated/zero-padded to order K.
  Spectrum resized(int order) const;

 private:
  double omega_;
  int order_;
  std::vector<cplx> c_;
};

// Exact coefficients for Constant and Cosine (cosine frequency must be an
// integer multiple of omega/2pi); DFT for a Sampled signal spanning exactly
// one period. Other inputs throw ArgumentError.
Spectrum spectrum_of_signal(const InputSignal& sig, double omega, int order);

// ---------------------------------------------------------------------------

// Active fraction A(t) and ensemble rate nu(t) sampled on a grid.
struct Trace {
  TimeGrid grid;
  std::vector<double> active;
  std::vector<double> rate;
};

// Initial trajectory on [t0 - window, t0]. `rate` is nu = lambda * A.
struct History {
  std::function<double(double)> active;
  std::function<double(double)> rate;
};

// Stationary state for constant input `lambda`: A = 1/(1 + lambda E[x]).
History equilibrium_history(double lambda, const DeadTimeLaw& law);

// Linear interpolation of sampled (A, nu) pairs.
History sampled_history(const TimeGrid& grid, std::vector<double> active, std::vector<double> rate);

}  // namespace refrac
