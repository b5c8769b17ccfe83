// Acceptance checks. `acceptance N` runs check N, `acceptance` runs all of
// them. Each prints one line "criterion N: PASS|FAIL ..." and the exit status
// is nonzero when any check fails.

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "refrac/analytic_ppd.hpp"
#include "refrac/csv.hpp"
#include "refrac/dde.hpp"
#include "refrac/gamma_chain.hpp"
#include "refrac/mc_sim.hpp"
#include "refrac/renewal_map.hpp"
#include "refrac/spectral.hpp"

using namespace refrac;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double lambda_for_rate(double nu, double mean_dead_time) { return 1.0 / (1.0 / nu - mean_dead_time); }

// Cosine-drive reference set: d = 0.08, output rate 10 Hz, depth 0.9.
constexpr double kD = 0.08;
const double kLambda0 = lambda_for_rate(10.0, kD);
constexpr double kDepth = 0.9;
const std::vector<double> kFreqs{4.0, 6.25, 10.0, 12.5, 17.5};

spectral::HarmonicSystem cosine_system(double f) {
  const double w = angular_frequency(f);
  return {DeadTimeLaw::fixed(kD), spectrum_of_signal(InputSignal::cosine(kLambda0, kDepth * kLambda0, f), w, 1), 16};
}

mc::SimConfig sim_config(std::size_t m, std::uint64_t seed, double t0, double t1, double bin, double lmax) {
  mc::SimConfig c;
  c.components = m;
  c.seed = seed;
  c.t_begin = t0;
  c.t_end = t1;
  c.bin_width = bin;
  c.lambda_max = lmax;
  return c;
}

// Mean of fn over [a, b] by composite Simpson with 64 panels.
double bin_average(const std::function<double(double)>& fn, double a, double b) {
  const int n = 64;
  const double h = (b - a) / n;
  double s = fn(a) + fn(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * fn(a + i * h);
  return s * h / 3.0 / (b - a);
}

// ---------------------------------------------------------------------------

Outcome equilibrium_identity() {
  std::mt19937_64 gen(20240611);
  std::uniform_real_distribution<double> lam(1.0, 20.0), dead(0.01, 0.1);
  double worst = 0.0;
  int failures = 0;
  for (int i = 0; i < 20; ++i) {
    const double l = lam(gen), d = dead(gen);
    auto cfg = sim_config(100000, 1000 + i, 0.0, 10.0, 10.0, l);
    cfg.estimate_active = false;
    const auto est = mc::simulate(InputSignal::constant(l), DeadTimeLaw::fixed(d), cfg);
    const double z = std::abs(est.rate[0] - l / (1.0 + l * d)) / est.rate_se[0];
    worst = std::max(worst, z);
    if (z > 3.0) ++failures;
  }
  return {failures == 0, fmt("20 (lambda, d) pairs, max |nu_hat - nu|/SE = %.2f (limit 3), %d outside", worst, failures)};
}

Outcome step_exactness() {
  double worst = 0.0;
  for (double d : {0.02, 0.05, 0.08}) {
    for (auto [n0, n1] : {std::pair{5.0, 10.0}, std::pair{10.0, 5.0}}) {
      const double l0 = lambda_for_rate(n0, d), l1 = lambda_for_rate(n1, d);
      const double h = d / 1024;
      const TimeGrid g(0.0, h, static_cast<std::size_t>(std::round(0.5 / h)) + 1);
      const auto num = dde::integrate_ppd(InputSignal::step(l0, l1, 0.0), d, g);
      const auto ref = analytic::step_response(l0, l1, d, g);
      for (std::size_t i = 0; i < g.size(); ++i) {
        worst = std::max({worst, std::abs(num.active[i] - ref.active[i]), std::abs(num.rate[i] - ref.rate[i]) / l1});
      }
    }
  }
  return {worst <= 1e-6, fmt("6 step scenarios on [0, 0.5] s, h = d/1024: sup |A_dde - A_exact| = %.3g (limit 1e-6)", worst)};
}

Outcome step_vs_mc() {
  bool ok = true;
  std::string detail;
  for (double d : {0.02, 0.05, 0.08}) {
    const double l0 = lambda_for_rate(5.0, d), l1 = lambda_for_rate(10.0, d);
    auto cfg = sim_config(1000000, 77, -0.05, 0.5, 1e-3, l1);
    cfg.estimate_active = false;
    const auto est = mc::simulate(InputSignal::step(l0, l1, 0.0), DeadTimeLaw::fixed(d), cfg);
    const double a0 = analytic::equilibrium_active_fraction(l0, d);
    auto nu = [&](double t) {
      if (t < 0.0) return l0 * a0;
      return analytic::step_response(l0, l1, d, TimeGrid(t, 1.0, 1)).rate[0];
    };
    std::size_t inside = 0;
    for (std::size_t j = 0; j < est.rate.size(); ++j) {
      const double lo = est.grid[j] - 5e-4, hi = est.grid[j] + 5e-4;
      if (std::abs(est.rate[j] - bin_average(nu, lo, hi)) <= 4.0 * est.rate_se[j]) ++inside;
    }
    const double frac = static_cast<double>(inside) / static_cast<double>(est.rate.size());
    const double cont = std::abs(analytic::step_response(l0, l1, d, TimeGrid(0.0, 1.0, 1)).active[0] - a0);
    const double lim =
        std::abs(analytic::step_response(l0, l1, d, TimeGrid(20.0, 1.0, 1)).active[0] - 1.0 / (1.0 + l1 * d));
    ok = ok && frac >= 0.99 && cont <= 1e-10 && lim <= 1e-6;
    detail += fmt("d=%.2f: %.1f%% bins within 4 SE, |A(0)-a0| = %.1e, |A(20 s)-a1| = %.1e; ", d, 100 * frac, cont, lim);
  }
  detail.resize(detail.size() - 2);
  return {ok, "M = 1e6, 1 ms bins, " + detail};
}

Outcome spectral_vs_dde() {
  bool ok = true;
  std::string detail, diag;
  for (double f : kFreqs) {
    const auto sys = cosine_system(f);
    const auto alpha = spectral::solve_active_spectrum(sys);
    const auto beta = spectral::output_spectrum(sys, alpha);
    const double h = kD / 1024;
    const double period = 1.0 / f;
    const auto n = static_cast<std::size_t>(std::ceil(21 * period / h)) + 1;
    const TimeGrid g(0.0, h, n);
    const auto sig = InputSignal::cosine(kLambda0, kDepth * kLambda0, f);
    auto rel_l2 = [&](const Trace& tr) {
      double num = 0.0, den = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (g[i] < 20 * period - 1e-12 || g[i] > 21 * period + 1e-12) continue;
        const double s = beta.evaluate(g[i]).real();
        num += (tr.rate[i] - s) * (tr.rate[i] - s);
        den += s * s;
      }
      return std::sqrt(num / den);
    };
    const double e = rel_l2(dde::integrate_ppd(sig, kD, g, equilibrium_history(kLambda0, DeadTimeLaw::fixed(kD))));
    // Started on the periodic orbit itself, the same comparison isolates integrator error from the transient.
    const History periodic{[&](double t) { return alpha.evaluate(t).real(); },
                           [&](double t) { return beta.evaluate(t).real(); }};
    const double e_orbit = rel_l2(dde::integrate_ppd(sig, kD, g, periodic));
    ok = ok && e <= 1e-5;
    detail += fmt("f=%.2f: %.2e; ", f, e);
    diag += fmt("%.1e ", e_orbit);
  }
  detail.resize(detail.size() - 2);
  return {ok, "relative L2 over period 21 from equilibrium (limit 1e-5): " + detail +
                  " | started on the periodic orbit: " + diag};
}

Outcome continued_fraction() {
  double worst = 0.0;
  for (double f : kFreqs) {
    const auto sys = cosine_system(f);
    const auto a = spectral::solve_active_spectrum(sys);
    const auto cf =
        spectral::cosine_continued_fraction(kLambda0, kDepth * kLambda0, DeadTimeLaw::fixed(kD), sys.omega());
    for (int k = -8; k <= 8; ++k) worst = std::max(worst, std::abs(a[k] - cf[k]));
  }
  return {worst <= 1e-10, fmt("max |alpha_dense - alpha_cf| over |k| <= 8 = %.2e (limit 1e-10)", worst)};
}

Outcome frequency_doubling() {
  std::vector<double> fs;
  for (int i = 0; i <= 30; ++i) fs.push_back(5.5 + 0.05 * i);
  const auto pts = spectral::sweep(DeadTimeLaw::fixed(kD), kLambda0, kDepth, fs, 4);
  int doubled = 0;
  double best = 0.0;
  for (const auto& p : pts) {
    const double r = std::abs(p.beta[2]) / std::abs(p.beta[1]);
    best = std::max(best, r);
    if (r > 1.0) ++doubled;
  }
  const auto sys = cosine_system(1.0 / kD);
  const auto a = spectral::solve_active_spectrum(sys);
  const auto cf = spectral::cosine_continued_fraction(kLambda0, kDepth * kLambda0, DeadTimeLaw::fixed(kD), sys.omega());
  double distort = 0.0;
  for (int k = 1; k <= a.order(); ++k) distort = std::max({distort, std::abs(a[k]), std::abs(cf[k])});
  return {doubled > 0 && distort <= 1e-10,
          fmt("|beta_2| > |beta_1| at %d of %zu points in [5.5, 7] Hz (max ratio %.3f); at f = 1/d max_{k!=0} "
              "|alpha_k| = %.1e (limit 1e-10)",
              doubled, pts.size(), best, distort)};
}

Outcome mean_rate_resonance() {
  std::vector<double> fs;
  for (int i = 0; i <= 798; ++i) fs.push_back(0.1 + 0.05 * i);
  const auto pts = spectral::sweep(DeadTimeLaw::fixed(kD), kLambda0, kDepth, fs, 2);
  std::vector<double> maxima;
  for (std::size_t i = 1; i + 1 < pts.size(); ++i) {
    const double b = pts[i].beta[0].real();
    if (b > pts[i - 1].beta[0].real() && b > pts[i + 1].beta[0].real()) maxima.push_back(pts[i].f);
  }
  bool ok = true;
  std::string detail;
  for (int k : {1, 2}) {
    const double fk = k / kD;
    double nearest = NAN;
    for (double m : maxima) {
      if (m <= fk && (std::isnan(nearest) || m > nearest)) nearest = m;
    }
    const bool hit = !std::isnan(nearest) && nearest >= 0.9 * fk;
    ok = ok && hit;
    detail += fmt("%d/d = %.1f Hz: nearest maximum below at %.2f Hz (%.1f%% below, limit 10%%); ", k, fk, nearest,
                  100 * (1 - nearest / fk));
  }
  detail.resize(detail.size() - 2);
  return {ok, "beta_0 sweep 0.1-40 Hz step 0.05: " + detail};
}

Outcome gamma_chain_checks() {
  bool ok = true;
  std::string detail;
  for (int n : {10, 50}) {
    const double mean = 0.08, beta = (n + 1) / mean;
    const double l0 = lambda_for_rate(5.0, mean), l1 = lambda_for_rate(10.0, mean);
    const double h = 0.01 / (l1 + beta);
    const TimeGrid g(0.0, h, 100001);
    const auto ex = gamma_chain::step_response(n, beta, l0, l1, g);
    const auto rk = gamma_chain::integrate(n, beta, InputSignal::constant(l1), gamma_chain::equilibrium_state(n, beta, l0), g);
    double err = 0.0, drift_rk = 0.0, drift_ex = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      err = std::max(err, (ex.states[i] - rk.states[i]).cwiseAbs().maxCoeff());
      drift_rk = std::max(drift_rk, std::abs(gamma_chain::conserved(rk.states[i], beta) - 1.0));
      drift_ex = std::max(drift_ex, std::abs(gamma_chain::conserved(ex.states[i], beta) - 1.0));
    }
    double eq = 0.0;
    for (double lam : {l0, l1, 1.0, 500.0}) {
      const auto b = gamma_chain::equilibrium_state(n, beta, lam);
      const double nu = 1.0 / (1.0 / lam + mean);
      eq = std::max(eq, std::abs(lam * b(n + 1) - nu) / nu);
      for (int k = 0; k <= n; ++k) eq = std::max(eq, std::abs(b(k) - nu) / nu);
    }
    ok = ok && err <= 1e-8 && drift_rk <= 1e-10 && drift_ex <= 1e-10 && eq <= 1e-12;
    detail += fmt("n=%d: expm vs RK4 %.1e, drift over 1e5 steps RK4 %.1e / expm %.1e, equilibrium rate %.1e; ", n, err,
                  drift_rk, drift_ex, eq);
  }
  detail.resize(detail.size() - 2);
  return {ok, detail + " (limits 1e-8, 1e-10, 1e-12)"};
}

Outcome pprd_cross_validation() {
  bool ok = true;
  std::string detail;
  const double mean = 0.08;
  const double l0 = lambda_for_rate(5.0, mean), l1 = lambda_for_rate(10.0, mean);
  for (int n : {10, 50}) {
    const double beta = (n + 1) / mean;
    const auto law = DeadTimeLaw::gamma(n, beta);
    const auto sig = InputSignal::step(l0, l1, 0.0);
    const TimeGrid g(0.0, 1e-4, 3501);
    const auto chain = gamma_chain::step_response(n, beta, l0, l1, g);
    const auto dd = dde::integrate_pprd(sig, law, g);
    double err = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) err = std::max(err, std::abs(chain.trace.active[i] - dd.active[i]));

    const int trials = 25;
    auto cfg = sim_config(100000, 0, -0.05, 0.35, 5e-3, l1);
    cfg.method = mc::Method::rejection;
    cfg.estimate_active = false;
    std::vector<double> sum, var;
    for (int t = 0; t < trials; ++t) {
      cfg.seed = 9000 + static_cast<std::uint64_t>(t);
      const auto est = mc::simulate(sig, law, cfg);
      sum.resize(est.rate.size());
      var.resize(est.rate.size());
      for (std::size_t j = 0; j < est.rate.size(); ++j) {
        sum[j] += est.rate[j];
        var[j] += est.rate_se[j] * est.rate_se[j];
      }
    }
    // Chain rate on [0, 0.35] at 1e-4 spacing; nu = 5 Hz before the switch.
    auto nu = [&](double t) {
      if (t < 0.0) return 5.0;
      const double x = t / g.dt();
      const auto i = std::min(static_cast<std::size_t>(x), g.size() - 2);
      const double w = x - static_cast<double>(i);
      return (1 - w) * chain.trace.rate[i] + w * chain.trace.rate[i + 1];
    };
    std::size_t outside = 0;
    double worst = 0.0;
    for (std::size_t j = 0; j < sum.size(); ++j) {
      const double lo = -0.05 + 5e-3 * static_cast<double>(j);
      // Piecewise-linear chain rate averaged exactly by the trapezoid rule on its own nodes.
      double avg = 0.0;
      const int sub = 50;
      for (int s = 0; s < sub; ++s) avg += 0.5 * (nu(lo + s * 1e-4) + nu(lo + (s + 1) * 1e-4));
      avg /= sub;
      const double z = std::abs(sum[j] / trials - avg) / (std::sqrt(var[j]) / trials);
      worst = std::max(worst, z);
      if (z > 4.0) ++outside;
    }
    ok = ok && err <= 1e-6 && outside == 0;
    detail += fmt("n=%d: chain vs distributed DDE %.1e, MC bins outside 4 SE %zu/%zu (max %.2f SE); ", n, err, outside,
                  sum.size(), worst);
  }
  detail.resize(detail.size() - 2);
  return {ok, detail};
}

Outcome hazard_reduction() {
  const double d = 0.08;
  const auto law = DeadTimeLaw::fixed(d);
  double worst = 0.0;
  for (const auto& sig : {InputSignal::step(8.0, 50.0, 0.0), InputSignal::cosine(50.0, 45.0, 6.25),
                          InputSignal::constant(12.0)}) {
    for (int i = 0; i <= 60; ++i) {
      const double t = -0.1 + 0.01 * i;
      for (int j = 0; j <= 300; ++j) {
        const double tau = 0.001 * j;
        const double ref = tau >= d ? sig(t) : 0.0;
        worst = std::max(worst, std::abs(mc::hazard_pprd(sig, law, t, tau) - ref));
      }
    }
  }
  return {worst <= 1e-12, fmt("61 x 301 (t, tau) grid, 3 inputs: max |h - lambda theta(tau - d)| = %.1e (limit 1e-12)", worst)};
}

Outcome representability() {
  const double beta = 25.0;
  const auto gspec = renewal::gamma_interval(3, beta);
  const auto grep = renewal::dead_time_from_interval(gspec, beta);
  double gerr = 0.0;
  for (std::size_t i = 0; i < grep.x.size(); ++i) {
    const double x = grep.x[i];
    gerr = std::max(gerr, std::abs(grep.rho[i] - beta * beta * beta * x * x * std::exp(-beta * x) / 2.0));
  }
  const auto gcon = renewal::construct_gamma(3, beta);
  const bool gamma_law = gcon.lambda == beta && std::holds_alternative<law::Gamma>(gcon.law.variant()) &&
                         std::get<law::Gamma>(gcon.law.variant()).n == 2;

  double bound_err = 0.0;
  for (auto [mu, sigma, delta] : {std::tuple{0.0, 0.5, 0.1}, std::tuple{0.3, 0.8, 0.05}, std::tuple{-0.5, 0.3, 1.0}}) {
    const double closed_form = std::exp(-1.0 - mu + sigma * sigma) / (delta * sigma * sigma);
    const double lm = renewal::minimal_lambda(renewal::lognormal_interval(mu, sigma, delta));
    bound_err = std::max(bound_err, std::abs(lm / closed_form - 1.0));
  }
  const auto lspec = renewal::lognormal_interval(0.0, 0.5, 0.1);
  const auto lrep = renewal::construct_lognormal(0.0, 0.5, 0.1);
  const double conv = std::max({renewal::convolution_residual(gspec, grep), renewal::convolution_residual(gspec, gcon),
                                renewal::convolution_residual(lspec, lrep)});
  return {gerr <= 1e-10 && gamma_law && bound_err <= 1e-6 && conv <= 1e-6,
          fmt("gamma r=3: max |rho - kappa_2| = %.1e (limit 1e-10), law kappa_2 with lambda = beta: %s; log-normal "
              "minimal lambda relative error %.1e (limit 1e-6); max convolution residual %.1e (limit 1e-6)",
              gerr, gamma_law ? "yes" : "no", bound_err, conv)};
}

Outcome inverse_round_trip() {
  double worst = 0.0, cond = 0.0;
  for (double f : kFreqs) {
    const auto sys = cosine_system(f);
    const auto beta = spectral::output_spectrum(sys, spectral::solve_active_spectrum(sys));
    const auto inf = spectral::infer_input_spectrum(beta, sys.law());
    cond = std::max(cond, inf.condition);
    for (int k = -inf.lambda.order(); k <= inf.lambda.order(); ++k) {
      worst = std::max(worst, std::abs(inf.lambda[k] - sys.input()[k]));
    }
  }
  return {worst <= 1e-8, fmt("max |Lambda_hat - Lambda| = %.1e (limit 1e-8), max condition %.1f", worst, cond)};
}

Outcome determinism() {
  const auto law = DeadTimeLaw::gamma(5, 120.0);
  bool ok = true;
  std::size_t bytes = 0;
  for (auto method : {mc::Method::generative, mc::Method::rejection}) {
    // Both runs span several 4096-component chunks.
    const auto sig = method == mc::Method::generative ? InputSignal::cosine(30.0, 25.0, 6.0)
                                                      : InputSignal::step(30.0, 55.0, 0.2);
    auto cfg = sim_config(method == mc::Method::generative ? 50000 : 20000, 31, 0.0, 0.5, 5e-3, 55.0);
    cfg.method = method;
    cfg.keep_events = true;
    std::vector<std::string> out;
    for (int threads : {1, 4, 3, 4}) {
      omp_set_num_threads(threads);
      const auto est = mc::simulate(sig, law, cfg);
      std::ostringstream os;
      io::write_estimate(os, est);
      io::write_events(os, est.events);
      out.push_back(os.str());
    }
    std::ostringstream os;
    const auto ser = mc::simulate_serial(sig, law, cfg);
    io::write_estimate(os, ser);
    io::write_events(os, ser.events);
    out.push_back(os.str());
    for (const auto& s : out) ok = ok && s == out.front();
    bytes += out.front().size();
  }
  return {ok, fmt("generative and rejection runs with 1, 4, 3, 4 threads and serial: CSV byte-identical (%zu bytes): %s",
                  bytes, ok ? "yes" : "no")};
}

struct Criterion {
  int id;
  double budget_s;
  Outcome (*run)();
};

const std::vector<Criterion> kCriteria{
    {1, 30, equilibrium_identity}, {2, 5, step_exactness},        {3, 120, step_vs_mc},
    {4, 30, spectral_vs_dde},      {5, 5, continued_fraction},     {6, 30, frequency_doubling},
    {7, 60, mean_rate_resonance},  {8, 60, gamma_chain_checks},    {9, 300, pprd_cross_validation},
    {10, 30, hazard_reduction},    {11, 60, representability},     {12, 30, inverse_round_trip},
    {13, 60, determinism},
};

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  if (argc > 1) only = std::atoi(argv[1]);
  bool all_ok = true;
  for (const auto& c : kCriteria) {
    if (only && c.id != only) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool pass = o.pass && secs <= c.budget_s;
    all_ok = all_ok && pass;
    std::printf("criterion %d: %s  %s [%.1f s, budget %.0f s]\n", c.id, pass ? "PASS" : "FAIL", o.detail.c_str(), secs,
                c.budget_s);
    std::fflush(stdout);
  }
  return all_ok ? 0 : 1;
}
