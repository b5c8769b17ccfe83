#pragma once

// Event-level simulation of an ensemble of independent components with
// random dead-times, and binned estimators of nu(t) and A(t).

#include <cstdint>
#include <utility>
#include <vector>

#include "refrac/core.hpp"

namespace refrac::mc {

// h(t, tau) = lambda(t) (1 - F(tau)/E[F(t, tau | x)]), the event rate at age tau.
// Fixed laws return lambda(t) theta(tau - d) exactly. Constant and step inputs
// use closed forms; other inputs integrate over the law with the exact
// cumulative input.
double hazard_pprd(const InputSignal& sig, const DeadTimeLaw& law, double t, double tau);

// P(active at t | last event at t - tau) = 1 - F(tau)/E[F(t, tau | x)].
double activity_probability(const InputSignal& sig, const DeadTimeLaw& law, double t, double tau);

enum class Method { generative, rejection };

struct SimConfig {
  std::size_t components = 1;
  std::uint64_t seed = 0;
  double t_begin = 0.0;
  double t_end = 1.0;
  double bin_width = 1e-3;
  Method method = Method::generative;
  double lambda_max = 0.0;  // thinning bound, >= sup lambda on [t_begin, t_end]
  bool estimate_active = true;
  bool keep_events = false;
};

struct EnsembleEstimate {
  TimeGrid grid;  // bin centres
  std::size_t components;
  std::vector<double> rate;       // events / (M bin_width)
  std::vector<double> rate_se;    // from the per-component count variance
  std::vector<double> active;     // NaN when not estimated
  std::vector<double> active_se;
  std::vector<std::uint64_t> count;
  std::vector<std::vector<double>> events;  // per component, when kept
};

using Interval = std::pair<double, double>;  // [begin, end)

// Components start in the stationary state for lambda(t_begin-). Results are
// bit-identical for any thread count.
EnsembleEstimate simulate(const InputSignal& sig, const DeadTimeLaw& law, const SimConfig& cfg);
// Single-threaded reference with the same output.
EnsembleEstimate simulate_serial(const InputSignal& sig, const DeadTimeLaw& law, const SimConfig& cfg);

// Draw a dead-time, then wait for the next input event by thinning.
EnsembleEstimate simulate_generative(const InputSignal& sig, const DeadTimeLaw& law, SimConfig cfg);
// Thin a Poisson(lambda_max) stream with the hazard h(t, tau)/lambda_max.
EnsembleEstimate simulate_rejection(const InputSignal& sig, const DeadTimeLaw& law, SimConfig cfg);

// Binned estimate on `bins` (t0 = first bin start, dt = width). Refractory
// intervals, when given, yield A-hat at bin centres; otherwise A-hat is NaN.
EnsembleEstimate estimate_from_events(const std::vector<std::vector<double>>& events, const TimeGrid& bins,
                                      const std::vector<std::vector<Interval>>* refractory = nullptr);

}  // namespace refrac::mc
