#pragma once

// Periodic steady state under a T-periodic input. With A = sum alpha_k e^{ik w t},
// nu = lambda A = sum beta_k e^{ik w t} and input spectrum Lambda_k:
//   delta_{k0} = alpha_k + q_k sum_l Lambda_l alpha_{k-l},   beta = Lambda * alpha,
// where q_k = integral_0^inf e^{-ik w y} F(y) dy is the harmonic coupling of the
// refractory window (q_0 = E[x]).

#include <vector>

#include "refrac/core.hpp"

namespace refrac::spectral {

// q_0 = d, q_k = (1 - e^{-ik w d})/(ik w).
cplx qk_fixed(double d, double omega, int k);
// Fixed delegates to qk_fixed; Gamma uses the closed form; Tabulated integrates
// against the piecewise-linear density.
cplx qk_law(const DeadTimeLaw& law, double omega, int k);

class HarmonicSystem {
 public:
  // `order` is the truncation K of the unknown spectrum.
  HarmonicSystem(DeadTimeLaw law, Spectrum input, int order);

  double omega() const { return input_.omega(); }
  int order() const { return order_; }
  const Spectrum& input() const { return input_; }
  const DeadTimeLaw& law() const { return law_; }
  // Cached for |k| <= 2K.
  cplx q(int k) const;
  HarmonicSystem with_order(int order) const { return {law_, input_, order}; }

 private:
  DeadTimeLaw law_;
  Spectrum input_;
  int order_;
  std::vector<cplx> q_;  // q_0..q_{2K}
};

// Dense solve of the truncated system, doubling K from max(order, 4 K_in)
// until max_{|k| > K/2} |alpha_k| < 1e-12.
Spectrum solve_active_spectrum(const HarmonicSystem& sys);

// beta_k = sum_l alpha_{k-l} Lambda_l, k = -K..K.
Spectrum output_spectrum(const HarmonicSystem& sys, const Spectrum& alpha);

// max |beta_k - (delta_{k0} - alpha_k)/q_k| over harmonics with |q_k| > 1e-12.
double output_consistency(const HarmonicSystem& sys, const Spectrum& alpha, const Spectrum& beta);

struct InputInference {
  Spectrum lambda;
  double condition;  // 1-norm condition estimate of the linear map
};

// Solves beta_k = sum_m Lambda_m (delta_{km} - q_{k-m} beta_{k-m}) for Lambda
// with |m| <= order of beta. Condition above 1e12 throws NumericalError.
InputInference infer_input_spectrum(const Spectrum& beta, const DeadTimeLaw& law);

// Minimal solution of the three-term recurrence for lambda = lambda0 + eps cos(w t):
// r_{n-1} = -1/(x_n + r_n), x_n = (1/q_n + lambda0)(2/eps), r_N = 0, N doubled
// until |dr_0/r_0| < tol. alpha_0 = 1/(1 + q_0 (lambda0 + eps Re r_0)),
// alpha_{k+1} = alpha_k r_k. The returned order is where |alpha_k| falls
// below 1e-18 alpha_0, at least `min_order`.
Spectrum cosine_continued_fraction(double lambda0, double eps, const DeadTimeLaw& law, double omega,
                                   double tol = 1e-13, int min_order = 8);

// A(t) and nu(t) from their spectra; imaginary parts above 1e-8 throw.
Trace periodic_rate(const Spectrum& alpha, const Spectrum& beta, const TimeGrid& grid);

struct SweepPoint {
  double f;
  Spectrum alpha;
  Spectrum beta;
  double max_rate;  // max over one period of nu(t), 512 samples
};

// Cosine drive lambda0 (1 + depth cos 2 pi f t) at each frequency, solved by
// continued fraction; spectra truncated to `harmonics`.
std::vector<SweepPoint> sweep_serial(const DeadTimeLaw& law, double lambda0, double depth,
                                     const std::vector<double>& freqs, int harmonics);
// Same results, frequencies distributed over OpenMP threads.
std::vector<SweepPoint> sweep(const DeadTimeLaw& law, double lambda0, double depth, const std::vector<double>& freqs,
                              int harmonics);

}  // namespace refrac::spectral
