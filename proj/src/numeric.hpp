#pragma once

// Internal numeric helpers shared by the library sources.

#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <complex>
#include <limits>
#include <type_traits>

namespace refrac::detail {

// phi1(z) = (e^z - 1)/z and phi2(z) = integral_0^1 u e^{z u} du, stable at z -> 0.
template <class T>
T phi1(T z) {
  if (std::abs(z) < 0.5) {
    T term = T(1.0);
    T sum = T(1.0);
    for (int k = 1; k < 24; ++k) {
      term *= z / static_cast<double>(k + 1);
      sum += term;
    }
    return sum;
  }
  return (std::exp(z) - T(1.0)) / z;
}

template <class T>
T phi2(T z) {
  if (std::abs(z) < 0.5) {
    // sum_k z^k / (k! (k+2))
    T zk = T(1.0);
    T sum = T(0.5);
    double fact = 1.0;
    for (int k = 1; k < 24; ++k) {
      zk *= z;
      fact *= k;
      sum += zk / (fact * (k + 2));
    }
    return sum;
  }
  return (std::exp(z) * (z - T(1.0)) + T(1.0)) / (z * z);
}

// Exact integral over [xa, xb] of (p0 + slope (x - xa)) e^{a x}.
template <class T>
T linear_exp_segment(double xa, double xb, double p0, double slope, T a) {
  const double h = xb - xa;
  if (h <= 0.0) return T(0.0);
  const T z = a * h;
  return std::exp(a * xa) * (p0 * h * phi1(z) + slope * h * h * phi2(z));
}

// Composite Gauss-Legendre rule: `panels` equal panels, 20 nodes each.
template <class F>
double gauss_composite(F&& f, double a, double b, int panels) {
  using Rule = boost::math::quadrature::gauss<double, 20>;
  if (b <= a) return 0.0;
  const double h = (b - a) / panels;
  double sum = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * h;
    sum += Rule::integrate(f, lo, p + 1 == panels ? b : lo + h);
  }
  return sum;
}

}  // namespace refrac::detail
