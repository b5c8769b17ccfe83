#pragma once

// Forward integration of the occupation dynamics
//   fixed delay:        A' = nu(t - d) - lambda(t) A(t)
//   distributed delay:  A' = -lambda(t) A(t) + integral rho(x) nu(t - x) dx
// with nu = lambda A, by method of steps with a classical RK4 stage layout.
// Past output rates are kept at grid nodes (both one-sided limits) and at
// step midpoints, so every delayed read lands on a stored sample.

#include <cstddef>
#include <optional>
#include <vector>

#include "refrac/core.hpp"

namespace refrac::dde {

// Ring of past output-rate samples covering `window` steps back from the
// newest node. Step j spans [t_j, t_{j+1}]; indices may be negative (history).
class HistoryBuffer {
 public:
  explicit HistoryBuffer(std::size_t window);

  void set_node(std::ptrdiff_t j, double left, double right);
  void set_mid(std::ptrdiff_t j, double value);

  double left(std::ptrdiff_t j) const { return left_[slot(j)]; }
  double right(std::ptrdiff_t j) const { return right_[slot(j)]; }
  double average(std::ptrdiff_t j) const { return 0.5 * (left_[slot(j)] + right_[slot(j)]); }
  double mid(std::ptrdiff_t j) const { return mid_[slot(j)]; }
  std::size_t window() const { return cap_ - 2; }

 private:
  std::size_t slot(std::ptrdiff_t j) const {
    const auto c = static_cast<std::ptrdiff_t>(cap_);
    return static_cast<std::size_t>(((j % c) + c) % c);
  }
  std::size_t cap_;
  std::vector<double> left_, right_, mid_;
};

// Fixed dead-time d. grid.dt() must equal d/m for an integer m >= 64 and
// lambda_max * dt <= 0.1. Without a history the ensemble starts in
// equilibrium for lambda(t0-).
Trace integrate_ppd(const InputSignal& sig, double d, const TimeGrid& grid,
                    const std::optional<History>& history = std::nullopt);

// Distributed dead-time. The kernel is truncated at the 1 - 1e-12 quantile
// W of the law and needs grid.dt() <= W/256; an atom at x = d (Fixed law)
// must sit on a grid multiple.
Trace integrate_pprd(const InputSignal& sig, const DeadTimeLaw& law, const TimeGrid& grid,
                     const std::optional<History>& history = std::nullopt);

struct ResidualReport {
  std::vector<double> residual;
  double max_abs = 0.0;
};

// r(t) = A(t) + integral_{-inf}^t nu(s) F(t - s) ds - 1 along a trace; the
// ensemble is taken as stationary for lambda(t0-) before the trace starts.
ResidualReport normalization_residual(const Trace& trace, const InputSignal& sig, const DeadTimeLaw& law);

}  // namespace refrac::dde
