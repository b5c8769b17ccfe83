#include "refrac/spectral.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include "numeric.hpp"
#include "refrac/errors.hpp"

namespace refrac::spectral {

namespace {

constexpr cplx kI{0.0, 1.0};

// log(1+z)/z for |z| < 0.5.
cplx log1p_over(cplx z) {
  cplx sum{};
  cplx zj{1.0};
  for (int j = 0; j < 60; ++j) {
    sum += zj / static_cast<double>(j + 1);
    zj *= -z;
    if (std::abs(zj) < 1e-18) break;
  }
  return sum;
}

cplx qk_gamma(const law::Gamma& g, double kappa) {
  const double s = g.n + 1.0;
  const cplx z = kI * kappa / g.beta;
  if (std::abs(z) < 0.5) {
    // 1 - (1+z)^{-s} = -expm1(w), w = -s log1p(z).
    const cplx l = log1p_over(z);
    const cplx w = -s * z * l;
    return s / g.beta * l * detail::phi1(w);
  }
  return (1.0 - std::pow(1.0 + z, -s)) / (kI * kappa);
}

cplx qk_tabulated(const law::Tabulated& t, double kappa) {
  if (kappa * t.x.back() < 1.0) {
    // E[X phi1(-i kappa X)], free of the 1 - transform cancellation.
    using Rule = boost::math::quadrature::gauss<double, 20>;
    cplx sum{};
    for (std::size_t j = 0; j + 1 < t.x.size(); ++j) {
      const double xa = t.x[j];
      const double slope = (t.density[j + 1] - t.density[j]) / (t.x[j + 1] - xa);
      auto re = [&](double x) {
        return ((t.density[j] + slope * (x - xa)) * x * detail::phi1(cplx{0.0, -kappa * x})).real();
      };
      auto im = [&](double x) {
        return ((t.density[j] + slope * (x - xa)) * x * detail::phi1(cplx{0.0, -kappa * x})).imag();
      };
      sum += cplx{Rule::integrate(re, xa, t.x[j + 1]), Rule::integrate(im, xa, t.x[j + 1])};
    }
    return sum;
  }
  cplx phi = t.atom0;
  for (std::size_t j = 0; j + 1 < t.x.size(); ++j) {
    const double xa = t.x[j];
    const double slope = (t.density[j + 1] - t.density[j]) / (t.x[j + 1] - xa);
    phi += detail::linear_exp_segment(xa, t.x[j + 1], t.density[j], slope, cplx{0.0, -kappa});
  }
  return (1.0 - phi) / (kI * kappa);
}

int input_order(const Spectrum& s) {
  int k_in = 0;
  for (int k = 1; k <= s.order(); ++k) {
    if (s[k] != cplx{} || s[-k] != cplx{}) k_in = k;
  }
  return k_in;
}

Spectrum solve_at(const HarmonicSystem& sys, int K) {
  const Spectrum& lam = sys.input();
  const int k_in = input_order(lam);
  const int n = 2 * K + 1;
  Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(n, n);
  Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(n);
  rhs(K) = 1.0;
  for (int k = -K; k <= K; ++k) {
    const int row = k + K;
    const cplx qk = sys.q(k);
    M(row, row) += 1.0;
    for (int l = -k_in; l <= k_in; ++l) {
      const int col = k - l;
      if (col < -K || col > K) continue;
      M(row, col + K) += qk * lam[l];
    }
  }
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(M);
  const double rc = lu.rcond();
  if (!(rc > 1e-14)) {
    throw NumericalError("truncated harmonic system is singular (condition estimate " +
                         std::to_string(rc > 0.0 ? 1.0 / rc : INFINITY) + ")");
  }
  const Eigen::VectorXcd a = lu.solve(rhs);
  std::vector<cplx> c(a.data(), a.data() + n);
  Spectrum out(sys.omega(), std::move(c));
  out.symmetrize();
  return out;
}

}  // namespace

cplx qk_fixed(double d, double omega, int k) {
  if (k == 0) return d;
  const double kappa = k * omega;
  const double th = kappa * d;
  const double s = std::sin(0.5 * th);
  return cplx{2.0 * s * s, std::sin(th)} / (kI * kappa);
}

cplx qk_law(const DeadTimeLaw& law, double omega, int k) {
  if (const auto* f = std::get_if<law::Fixed>(&law.variant())) return qk_fixed(f->d, omega, k);
  if (k == 0) return law.mean();
  if (k < 0) return std::conj(qk_law(law, omega, -k));
  const double kappa = k * omega;
  if (const auto* g = std::get_if<law::Gamma>(&law.variant())) return qk_gamma(*g, kappa);
  return qk_tabulated(std::get<law::Tabulated>(law.variant()), kappa);
}

HarmonicSystem::HarmonicSystem(DeadTimeLaw law, Spectrum input, int order)
    : law_(std::move(law)), input_(std::move(input)), order_(order) {
  if (order < 0) throw ArgumentError("harmonic truncation must be >= 0");
  q_.resize(2 * static_cast<std::size_t>(order) + 1);
  for (int k = 0; k <= 2 * order; ++k) q_[static_cast<std::size_t>(k)] = qk_law(law_, omega(), k);
}

cplx HarmonicSystem::q(int k) const {
  const auto a = static_cast<std::size_t>(std::abs(k));
  const cplx v = a < q_.size() ? q_[a] : qk_law(law_, omega(), std::abs(k));
  return k < 0 ? std::conj(v) : v;
}

Spectrum solve_active_spectrum(const HarmonicSystem& sys) {
  const int k_in = input_order(sys.input());
  if (sys.order() < 4 * k_in) {
    throw ArgumentError("harmonic truncation must be at least 4x the input bandwidth");
  }
  constexpr int kMaxOrder = 1024;
  for (int K = std::max({sys.order(), 4 * k_in, 1});; K *= 2) {
    const HarmonicSystem s = K == sys.order() ? sys : sys.with_order(K);
    Spectrum alpha = solve_at(s, K);
    double tail = 0.0;
    for (int k = K / 2 + 1; k <= K; ++k) tail = std::max(tail, std::abs(alpha[k]));
    if (tail < 1e-12) return alpha;
    if (2 * K > kMaxOrder) {
      throw NumericalError("active spectrum did not decay within " + std::to_string(K) + " harmonics");
    }
  }
}

Spectrum output_spectrum(const HarmonicSystem& sys, const Spectrum& alpha) {
  const Spectrum& lam = sys.input();
  const int K = alpha.order();
  Spectrum beta(alpha.omega(), K);
  for (int k = -K; k <= K; ++k) {
    cplx sum{};
    for (int l = -lam.order(); l <= lam.order(); ++l) sum += alpha[k - l] * lam[l];
    beta.set(k, sum);
  }
  beta.symmetrize();
  return beta;
}

double output_consistency(const HarmonicSystem& sys, const Spectrum& alpha, const Spectrum& beta) {
  double worst = 0.0;
  for (int k = -beta.order(); k <= beta.order(); ++k) {
    const cplx qk = sys.q(k);
    if (std::abs(qk) <= 1e-12) continue;
    const cplx alt = ((k == 0 ? 1.0 : 0.0) - alpha[k]) / qk;
    worst = std::max(worst, std::abs(beta[k] - alt));
  }
  return worst;
}

InputInference infer_input_spectrum(const Spectrum& beta, const DeadTimeLaw& law) {
  const int K = beta.order();
  const int n = 2 * K + 1;
  std::vector<cplx> q(2 * static_cast<std::size_t>(K) + 1);
  for (int k = 0; k <= 2 * K; ++k) q[static_cast<std::size_t>(k)] = qk_law(law, beta.omega(), k);
  auto qk = [&](int k) { return k < 0 ? std::conj(q[static_cast<std::size_t>(-k)]) : q[static_cast<std::size_t>(k)]; };

  Eigen::MatrixXcd M(n, n);
  Eigen::VectorXcd rhs(n);
  for (int k = -K; k <= K; ++k) {
    rhs(k + K) = beta[k];
    for (int m = -K; m <= K; ++m) {
      M(k + K, m + K) = (k == m ? 1.0 : 0.0) - qk(k - m) * beta[k - m];
    }
  }
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(M);
  const double rc = lu.rcond();
  const double cond = rc > 0.0 ? 1.0 / rc : INFINITY;
  if (!(cond <= 1e12)) {
    throw NumericalError("input inference is ill-conditioned (condition estimate " + std::to_string(cond) + ")");
  }
  const Eigen::VectorXcd x = lu.solve(rhs);
  Spectrum lam(beta.omega(), std::vector<cplx>(x.data(), x.data() + n));
  lam.symmetrize();
  return {lam, cond};
}

Spectrum cosine_continued_fraction(double lambda0, double eps, const DeadTimeLaw& law, double omega, double tol,
                                   int min_order) {
  if (!(eps >= 0.0) || !(lambda0 >= eps)) throw ArgumentError("cosine drive needs lambda0 >= eps >= 0");
  const cplx q0 = qk_law(law, omega, 0);
  if (eps == 0.0) {
    Spectrum out(omega, min_order);
    out.set(0, 1.0 / (1.0 + lambda0 * q0.real()));
    return out;
  }
  const double half = 0.5 * eps;
  std::vector<cplx> q{q0};
  auto backward = [&](int N, std::vector<cplx>* ratios) {
    while (static_cast<int>(q.size()) <= N) q.push_back(qk_law(law, omega, static_cast<int>(q.size())));
    cplx r{};
    if (ratios) ratios->assign(static_cast<std::size_t>(N), cplx{});
    for (int n = N; n >= 1; --n) {
      // -1/(x_n + r_n) multiplied through by q_n eps/2; finite when q_n = 0.
      const cplx qn = q[static_cast<std::size_t>(n)];
      r = -half * qn / (1.0 + qn * (lambda0 + half * r));
      if (ratios) (*ratios)[static_cast<std::size_t>(n - 1)] = r;
    }
    return r;
  };

  constexpr int kMaxN = 1 << 20;
  int N = 16;
  cplx r0 = backward(N, nullptr);
  for (;;) {
    if (2 * N > kMaxN) throw NumericalError("continued fraction did not converge by N = 2^20");
    N *= 2;
    const cplx r_new = backward(N, nullptr);
    const double scale = std::abs(r_new);
    const bool done = scale == 0.0 ? std::abs(r_new - r0) == 0.0 : std::abs(r_new - r0) / scale < tol;
    r0 = r_new;
    if (done) break;
  }
  std::vector<cplx> r;
  backward(N, &r);

  const cplx a0 = 1.0 / (1.0 + q0.real() * (lambda0 + eps * r0.real()));
  std::vector<cplx> alpha{a0};
  for (int k = 0; k < N; ++k) {
    const cplx next = alpha.back() * r[static_cast<std::size_t>(k)];
    if (std::abs(next) < 1e-18 * std::abs(a0)) break;
    alpha.push_back(next);
  }
  const int K = std::max(min_order, static_cast<int>(alpha.size()) - 1);
  Spectrum out(omega, K);
  out.set(0, {a0.real(), 0.0});
  for (int k = 1; k < static_cast<int>(alpha.size()); ++k) {
    out.set(k, alpha[static_cast<std::size_t>(k)]);
    out.set(-k, std::conj(alpha[static_cast<std::size_t>(k)]));
  }
  return out;
}

Trace periodic_rate(const Spectrum& alpha, const Spectrum& beta, const TimeGrid& grid) {
  Trace out{grid, std::vector<double>(grid.size()), std::vector<double>(grid.size())};
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const cplx a = alpha.evaluate(grid[i]);
    const cplx v = beta.evaluate(grid[i]);
    if (std::abs(a.imag()) > 1e-8 || std::abs(v.imag()) > 1e-8 * std::max(1.0, std::abs(v))) {
      throw NumericalError("spectrum reconstruction has an imaginary residue; Hermitian symmetry is broken");
    }
    out.active[i] = a.real();
    out.rate[i] = v.real();
  }
  return out;
}

namespace {

SweepPoint sweep_point(const DeadTimeLaw& law, double lambda0, double depth, double f, int harmonics) {
  const double omega = angular_frequency(f);
  const double eps = depth * lambda0;
  const Spectrum alpha_full = cosine_continued_fraction(lambda0, eps, law, omega, 1e-13, harmonics + 1);
  Spectrum input(omega, 1);
  input.set(0, lambda0);
  input.set(1, 0.5 * eps);
  input.set(-1, 0.5 * eps);
  const HarmonicSystem sys(law, input, 0);
  const Spectrum beta_full = output_spectrum(sys, alpha_full);
  double max_rate = 0.0;
  const double period = 1.0 / f;
  for (int j = 0; j < 512; ++j) max_rate = std::max(max_rate, beta_full.evaluate(period * j / 512.0).real());
  return {f, alpha_full.resized(harmonics), beta_full.resized(harmonics), max_rate};
}

void check_sweep(double lambda0, double depth, const std::vector<double>& freqs, int harmonics) {
  if (!(lambda0 > 0.0) || !(depth >= 0.0 && depth <= 1.0)) {
    throw ArgumentError("sweep needs lambda0 > 0 and modulation depth in [0, 1]");
  }
  if (harmonics < 0) throw ArgumentError("harmonic count must be >= 0");
  for (double f : freqs) {
    if (!(f > 0.0) || !std::isfinite(f)) throw ArgumentError("sweep frequencies must be > 0");
  }
}

}  // namespace

std::vector<SweepPoint> sweep_serial(const DeadTimeLaw& law, double lambda0, double depth,
                                     const std::vector<double>& freqs, int harmonics) {
  check_sweep(lambda0, depth, freqs, harmonics);
  std::vector<SweepPoint> out;
  out.reserve(freqs.size());
  for (double f : freqs) out.push_back(sweep_point(law, lambda0, depth, f, harmonics));
  return out;
}

std::vector<SweepPoint> sweep(const DeadTimeLaw& law, double lambda0, double depth, const std::vector<double>& freqs,
                              int harmonics) {
  check_sweep(lambda0, depth, freqs, harmonics);
  const auto n = static_cast<std::ptrdiff_t>(freqs.size());
  std::vector<std::optional<SweepPoint>> slots(freqs.size());
  std::vector<std::string> errors(freqs.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto u = static_cast<std::size_t>(i);
    try {
      slots[u] = sweep_point(law, lambda0, depth, freqs[u], harmonics);
    } catch (const std::exception& e) {
      errors[u] = e.what();
    }
  }
  std::vector<SweepPoint> out;
  out.reserve(freqs.size());
  for (std::size_t i = 0; i < freqs.size(); ++i) {
    if (!slots[i]) throw NumericalError("sweep failed at f = " + std::to_string(freqs[i]) + ": " + errors[i]);
    out.push_back(std::move(*slots[i]));
  }
  return out;
}

}  // namespace refrac::spectral
