#include <Eigen/Eigenvalues>
#include <cmath>
#include <unsupported/Eigen/MatrixFunctions>

#include "doctest.h"
#include "refrac/analytic_ppd.hpp"
#include "refrac/errors.hpp"
#include "refrac/gamma_chain.hpp"
#include "refrac/spectral.hpp"

using namespace refrac;
using namespace refrac::gamma_chain;

TEST_CASE("generator layout") {
  const Matrix m = build_generator(0, 25.0, 8.0);
  REQUIRE(m.rows() == 2);
  CHECK(m(0, 0) == -25.0);
  CHECK(m(0, 1) == 25.0 * 8.0);
  CHECK(m(1, 0) == 1.0);
  CHECK(m(1, 1) == -8.0);

  const int n = 5;
  const double beta = 75.0, lambda = 30.0;
  const Matrix g = build_generator(n, beta, lambda);
  for (int k = 1; k <= n; ++k) {
    CHECK(g(k, k - 1) == beta);
    CHECK(g(k, k) == -beta);
  }
  CHECK(g(0, n + 1) == beta * lambda);
  CHECK(g(n + 1, n) == 1.0);
  Eigen::RowVectorXd w = Eigen::RowVectorXd::Constant(n + 2, 1.0 / beta);
  w(n + 1) = 1.0;
  CHECK((w * g).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("equilibrium state") {
  const double mean = 0.08;
  for (int n : {0, 10, 50}) {
    const double beta = (n + 1) / mean;
    const double l0 = 1.0 / (0.2 - mean);
    const State b = equilibrium_state(n, beta, l0);
    CHECK(b(n + 1) == doctest::Approx(0.6).epsilon(1e-13));
    for (int k = 0; k <= n; ++k) CHECK(b(k) == doctest::Approx(5.0).epsilon(1e-13));
    CHECK((build_generator(n, beta, l0) * b).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(conserved(b, beta) == doctest::Approx(1.0).epsilon(1e-15));
  }
  const State inf = equilibrium_state(10, 137.5, 1e15);
  CHECK(inf(0) == doctest::Approx(137.5 / 11).epsilon(1e-12));
  const State zero = equilibrium_state(3, 10.0, 0.0);
  CHECK(zero(4) == 1.0);
  CHECK(zero.head(4).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("matrix exponential matches an independent implementation") {
  for (int n : {0, 10, 50}) {
    const double beta = (n + 1) / 0.08;
    const Matrix m = build_generator(n, beta, 50.0) * 0.013;
    const Matrix ref = m.exp();
    CHECK((expm(m) - ref).cwiseAbs().maxCoeff() < 1e-10 * std::max(1.0, ref.cwiseAbs().maxCoeff()));
  }
  Matrix a(2, 2);
  a << 0.0, 1.0, -1.0, 0.0;
  const Matrix r = expm(a * 2.0);
  CHECK(r(0, 0) == doctest::Approx(std::cos(2.0)).epsilon(1e-14));
  CHECK(r(0, 1) == doctest::Approx(std::sin(2.0)).epsilon(1e-14));
}

TEST_CASE("step response endpoints") {
  const int n = 10;
  const double mean = 0.08, beta = (n + 1) / mean;
  const double l0 = 1.0 / (0.2 - mean), l1 = 1.0 / (0.1 - mean);
  const double t_end = 50.0 * std::max(mean, 1.0 / l1);
  const auto ct = step_response(n, beta, l0, l1, TimeGrid::covering(0.0, t_end, 1e-3));
  const State b0 = equilibrium_state(n, beta, l0), b1 = equilibrium_state(n, beta, l1);
  CHECK((ct.states.front() - b0).cwiseAbs().maxCoeff() == 0.0);
  CHECK((ct.states.back() - b1).cwiseAbs().maxCoeff() < 1e-10);
  for (std::size_t i = 0; i < ct.trace.grid.size(); ++i) {
    CHECK(ct.trace.rate[i] == doctest::Approx(l1 * ct.trace.active[i]).epsilon(1e-14));
  }
}

TEST_CASE("integration agrees with the matrix exponential and conserves C") {
  const int n = 10;
  const double mean = 0.08, beta = (n + 1) / mean;
  const double l0 = 1.0 / (0.2 - mean), l1 = 1.0 / (0.1 - mean);
  const double h = 0.01 / (l1 + beta);
  const TimeGrid g(0.0, h, 20001);
  const auto ref = step_response(n, beta, l0, l1, g);
  const auto num = integrate(n, beta, InputSignal::constant(l1), equilibrium_state(n, beta, l0), g);
  double err = 0.0, step_drift = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    err = std::max(err, (num.states[i] - ref.states[i]).cwiseAbs().maxCoeff());
    if (i > 0) step_drift = std::max(step_drift, std::abs(conserved(num.states[i], beta) - conserved(num.states[i - 1], beta)));
  }
  CHECK(err < 1e-8);
  CHECK(step_drift < 1e-12);
  CHECK_THROWS_AS(integrate(n, beta, InputSignal::constant(l1), equilibrium_state(n, beta, l0), TimeGrid(0.0, 0.2 / (l1 + beta), 3)),
                  ArgumentError);
}

TEST_CASE("cosine steady state matches the spectral solution with gamma coefficients") {
  const int n = 10;
  const double mean = 0.08, beta = (n + 1) / mean, f = 5.0;
  const double l0 = 50.0, eps = 45.0;
  const auto law = DeadTimeLaw::gamma(n, beta);
  const auto sig = InputSignal::cosine(l0, eps, f);
  const double h = 0.04 / (l0 + eps + beta);
  const int periods = 30;
  const auto steps = static_cast<std::size_t>(std::round(periods / (f * h)));
  const TimeGrid g(0.0, periods / (f * static_cast<double>(steps)), steps + 1);
  const auto ct = integrate(n, beta, sig, equilibrium_state(n, beta, l0), g);
  const auto cf = spectral::cosine_continued_fraction(l0, eps, law, angular_frequency(f));
  double err = 0.0;
  for (std::size_t i = steps - steps / periods; i < g.size(); ++i) {
    err = std::max(err, std::abs(ct.trace.active[i] - cf.evaluate(g[i]).real()));
  }
  CHECK(err < 1e-5);
}

TEST_CASE("generator spectrum") {
  for (int n : {0, 10, 50}) {
    const double beta = (n + 1) / 0.08;
    for (double lambda : {8.0, 50.0}) {
      const Eigen::EigenSolver<Matrix> es(build_generator(n, beta, lambda));
      int zeros = 0;
      for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        const auto ev = es.eigenvalues()(i);
        if (std::abs(ev) < 1e-8 * beta) {
          ++zeros;
        } else {
          CHECK(ev.real() < 0.0);
        }
      }
      CHECK(zeros == 1);
    }
  }
}

TEST_CASE("large shape approaches the fixed dead-time transient") {
  const double mean = 0.08, l0 = 1.0 / (0.2 - mean), l1 = 1.0 / (0.1 - mean);
  const TimeGrid g(0.0, 1e-3, 801);
  const auto fixed = analytic::step_response(l0, l1, mean, g);
  auto distance = [&](int n) {
    const auto ct = step_response(n, (n + 1) / mean, l0, l1, g);
    double s = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) s += std::pow(ct.trace.active[i] - fixed.active[i], 2);
    return std::sqrt(s * g.dt());
  };
  const double d10 = distance(10), d50 = distance(50), d200 = distance(200);
  CHECK(d50 < d10);
  CHECK(d200 < d50);
}
