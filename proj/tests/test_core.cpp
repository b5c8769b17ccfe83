#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>

#include "doctest.h"
#include "refrac/core.hpp"
#include "refrac/errors.hpp"

using namespace refrac;
using boost::math::quadrature::gauss_kronrod;

TEST_CASE("time grid sampling") {
  const TimeGrid g(0.5, 0.25, 5);
  CHECK(g[0] == 0.5);
  CHECK(g[4] == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(g.back() == g[4]);
  CHECK(TimeGrid::covering(0.0, 1.0, 0.001).size() == 1001);
  CHECK_THROWS_AS(TimeGrid(0.0, 0.0, 3), ArgumentError);
  CHECK_THROWS_AS(TimeGrid(0.0, 0.1, 0), ArgumentError);
}

TEST_CASE("input signal evaluation") {
  CHECK(eval_input(InputSignal::constant(5.0), 1.0) == 5.0);
  const auto step = InputSignal::step(5.0, 10.0, 0.0);
  CHECK(eval_input(step, 0.0) == 10.0);
  CHECK(eval_input(step, -1e-12) == 5.0);
  CHECK(step.left_limit(0.0) == 5.0);
  CHECK(eval_input(InputSignal::cosine(10.0, 9.0, 1.0), 0.0) == doctest::Approx(19.0).epsilon(1e-15));
  CHECK_THROWS_AS(InputSignal::cosine(5.0, 6.0, 1.0), ArgumentError);

  const TimeGrid g(0.0, 0.5, 3);
  const auto s = InputSignal::sampled(g, {1.0, 3.0, 2.0});
  CHECK(s(0.25) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(s(0.75) == doctest::Approx(2.5).epsilon(1e-15));
  CHECK_THROWS_AS(s(1.5), RangeError);
  CHECK(s.integral(0.0, 1.0) == doctest::Approx(0.25 * (1 + 3) + 0.25 * (3 + 2)).epsilon(1e-15));
}

TEST_CASE("signal integrals agree with quadrature") {
  const auto c = InputSignal::cosine(10.0, 9.0, 3.0);
  const double q = gauss_kronrod<double, 31>::integrate([&](double t) { return c(t); }, 0.1, 0.73, 10, 1e-14);
  CHECK(c.integral(0.1, 0.73) == doctest::Approx(q).epsilon(1e-12));
  const auto s = InputSignal::step(5.0, 50.0, 0.2);
  CHECK(s.integral(0.0, 0.5) == doctest::Approx(5.0 * 0.2 + 50.0 * 0.3).epsilon(1e-14));
}

TEST_CASE("fixed law survivor and mean") {
  const auto law = DeadTimeLaw::fixed(0.08);
  CHECK(law_survivor(law, 0.05) == 1.0);
  CHECK(law_survivor(law, 0.09) == 0.0);
  CHECK(law_survivor(law, 0.08) == 0.0);
  CHECK(law_mean(law) == 0.08);
  CHECK_THROWS_AS(law_survivor(law, -0.1), DomainError);
}

TEST_CASE("gamma law survivor matches the regularized incomplete gamma function") {
  const auto g1 = DeadTimeLaw::gamma(1, 25.0);
  CHECK(law_survivor(g1, 0.0) == 1.0);
  for (double x : {0.01, 0.04, 0.1, 0.3}) {
    CHECK(law_survivor(g1, x) == doctest::Approx(std::exp(-25 * x) * (1 + 25 * x)).epsilon(1e-13));
  }
  const auto g10 = DeadTimeLaw::gamma(10, 137.5);
  for (double x : {0.01, 0.05, 0.08, 0.2}) {
    CHECK(law_survivor(g10, x) == doctest::Approx(boost::math::gamma_q(11.0, 137.5 * x)).epsilon(1e-12));
  }
}

TEST_CASE("gamma law means") {
  CHECK(law_mean(DeadTimeLaw::gamma(10, 137.5)) == doctest::Approx(0.08).epsilon(1e-15));
  CHECK(law_mean(DeadTimeLaw::gamma(50, 637.5)) == doctest::Approx(0.08).epsilon(1e-15));
  CHECK(law_mean(DeadTimeLaw::gamma_with_mean(50, 0.08)) == doctest::Approx(0.08).epsilon(1e-15));
}

TEST_CASE("gamma density integrates to one") {
  for (int n : {0, 3, 10, 50}) {
    const auto law = DeadTimeLaw::gamma_with_mean(n, 0.08);
    const double beta = (n + 1) / 0.08;
    const double mass =
        gauss_kronrod<double, 61>::integrate([&](double x) { return law.density(x); }, 0.0, (n + 1 + 40 * std::sqrt(n + 1.0) + 40) / beta, 15, 1e-14);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("survivor is non-increasing and complements the atom") {
  const auto tab = DeadTimeLaw::tabulated({0.0, 0.1, 0.2}, {0.0, 5.0, 0.0}, 0.5);
  CHECK(law_survivor(tab, 0.0) + tab.atom_at_zero() == doctest::Approx(1.0).epsilon(1e-12));
  for (const auto& law : {DeadTimeLaw::gamma(4, 50.0), tab, DeadTimeLaw::fixed(0.05)}) {
    double prev = law_survivor(law, 0.0);
    for (int i = 1; i <= 400; ++i) {
      const double v = law_survivor(law, i * 1e-3);
      CHECK(v <= prev + 1e-15);
      prev = v;
    }
  }
}

TEST_CASE("tabulated law quadrature") {
  // Triangle on [0, 0.2] with half the mass in the atom at zero.
  const auto tab = DeadTimeLaw::tabulated({0.0, 0.1, 0.2}, {0.0, 5.0, 0.0}, 0.5);
  CHECK(tab.mean() == doctest::Approx(0.5 * 0.1).epsilon(1e-13));
  CHECK(tab.survivor(0.1) == doctest::Approx(0.25).epsilon(1e-13));
  CHECK(tab.survivor(0.25) == 0.0);
  CHECK_THROWS_AS(DeadTimeLaw::tabulated({0.0, 0.1, 0.2}, {0.0, 5.0, 0.0}, 0.0), ValidationError);
}

TEST_CASE("law transforms") {
  const auto g = DeadTimeLaw::gamma(3, 40.0);
  const cplx a{-5.0, 12.0};
  CHECK(std::abs(g.transform(a) - std::pow(40.0 / (40.0 - a), 4)) < 1e-14);
  const auto f = DeadTimeLaw::fixed(0.05);
  CHECK(std::abs(f.transform(a) - std::exp(a * 0.05)) < 1e-15);
  CHECK(g.moment(2) == doctest::Approx(4.0 * 5.0 / (40.0 * 40.0)).epsilon(1e-14));
  CHECK(g.integrated_survivor(0.0) == doctest::Approx(g.mean()).epsilon(1e-13));
}

TEST_CASE("spectrum of signals") {
  const double w = angular_frequency(5.0);
  const auto c = spectrum_of_signal(InputSignal::cosine(10.0, 9.0, 5.0), w, 2);
  CHECK(c[0] == cplx{10.0, 0.0});
  CHECK(c[1] == cplx{4.5, 0.0});
  CHECK(c[-1] == cplx{4.5, 0.0});
  CHECK(c[2] == cplx{});
  CHECK(c[-2] == cplx{});
  const auto k = spectrum_of_signal(InputSignal::constant(7.0), w, 5);
  CHECK(k[0] == cplx{7.0, 0.0});
  for (int j = 1; j <= 5; ++j) CHECK(std::abs(k[j]) == 0.0);
  CHECK_THROWS_AS(spectrum_of_signal(InputSignal::cosine(10.0, 9.0, 7.5), w, 2), ArgumentError);
}

TEST_CASE("sampled cosine spectrum matches the exact coefficients") {
  const double f = 5.0;
  const int n = 64;
  const TimeGrid g(0.0, 1.0 / (f * n), n);
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = 10.0 + 9.0 * std::cos(kTwoPi * f * g[i]);
  const auto s = spectrum_of_signal(InputSignal::sampled(g, v), angular_frequency(f), 4);
  const auto e = spectrum_of_signal(InputSignal::cosine(10.0, 9.0, f), angular_frequency(f), 4);
  for (int k = -4; k <= 4; ++k) CHECK(std::abs(s[k] - e[k]) < 1e-12);
}

TEST_CASE("spectrum round trip reproduces a band-limited signal") {
  const double f = 2.0;
  const int n = 32;
  const TimeGrid g(0.0, 1.0 / (f * n), n);
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) {
    const double ph = kTwoPi * f * g[i];
    v[i] = 3.0 + std::cos(ph) - 0.5 * std::sin(2 * ph) + 0.25 * std::cos(3 * ph + 0.3);
  }
  const auto s = spectrum_of_signal(InputSignal::sampled(g, v), angular_frequency(f), 5);
  CHECK(s.hermitian_defect() < 1e-15);
  for (int i = 0; i < n; ++i) {
    const cplx r = s.evaluate(g[i]);
    CHECK(std::abs(r.real() - v[i]) < 1e-10);
    CHECK(std::abs(r.imag()) < 1e-12);
  }
}

TEST_CASE("spectrum accessors") {
  Spectrum s(1.0, 2);
  s.set(1, {1.0, 2.0});
  s.set(-1, {1.0, -1.0});
  CHECK(s.hermitian_defect() == doctest::Approx(1.0));
  s.symmetrize();
  CHECK(s.hermitian_defect() == 0.0);
  CHECK(s[1] == cplx{1.0, 1.5});
  CHECK(s[7] == cplx{});
  const auto r = s.resized(4);
  CHECK(r.order() == 4);
  CHECK(r[1] == s[1]);
}

TEST_CASE("equilibrium history") {
  const auto h = equilibrium_history(50.0, DeadTimeLaw::fixed(0.08));
  CHECK(h.active(-0.03) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(h.rate(-0.03) == doctest::Approx(10.0).epsilon(1e-14));
}
