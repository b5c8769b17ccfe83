#include "refrac/dde.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <variant>

#include "numeric.hpp"
#include "refrac/errors.hpp"

namespace refrac::dde {

HistoryBuffer::HistoryBuffer(std::size_t window)
    : cap_(window + 2), left_(cap_, 0.0), right_(cap_, 0.0), mid_(cap_, 0.0) {}

void HistoryBuffer::set_node(std::ptrdiff_t j, double left, double right) {
  left_[slot(j)] = left;
  right_[slot(j)] = right;
}

void HistoryBuffer::set_mid(std::ptrdiff_t j, double value) { mid_[slot(j)] = value; }

namespace {

// Number of grid steps in `length`, required to be integral.
std::size_t exact_steps(double length, double h, const char* what) {
  const double m = length / h;
  const double mr = std::round(m);
  if (std::abs(m - mr) > 1e-9 * std::max(1.0, m)) {
    throw ArgumentError(std::string(what) + " is not an integer multiple of the time step");
  }
  return static_cast<std::size_t>(mr);
}

void check_stiffness(const InputSignal& sig, const TimeGrid& grid) {
  const double lam_max = sig.sup(grid.t0(), grid.back());
  if (lam_max * grid.dt() > 2.0) {
    throw ArgumentError("time step too large for explicit integration: lambda_max * h = " +
                        std::to_string(lam_max * grid.dt()) + " > 2");
  }
}

// integral_0^W nu_hist(t0 - x) F(x) dx + A_hist(t0) must equal 1.
void check_history(const History& hist, const DeadTimeLaw& law, double window, double t0, double tol) {
  double mass = hist.active(t0);
  if (window > 0.0) {
    const bool fixed = std::holds_alternative<law::Fixed>(law.variant());
    auto f = [&](double x) { return hist.rate(t0 - x) * (fixed ? 1.0 : law.survivor(x)); };
    mass += detail::gauss_composite(f, 0.0, window, 128);
  }
  if (std::abs(mass - 1.0) > tol) {
    throw ValidationError("initial history violates normalization: A(t0) + memory = " + std::to_string(mass));
  }
}

Trace make_trace(const TimeGrid& grid) {
  return Trace{grid, std::vector<double>(grid.size()), std::vector<double>(grid.size())};
}

// Fill nodes/mids j in [-window, -1] and node 0 from the history.
void seed_buffer(HistoryBuffer& buf, const History& hist, const InputSignal& sig, double t0, double h,
                 std::size_t window, double a0) {
  try {
    for (auto j = -static_cast<std::ptrdiff_t>(window); j < 0; ++j) {
      const double tj = t0 + static_cast<double>(j) * h;
      const double v = hist.rate(tj);
      buf.set_node(j, v, v);
      buf.set_mid(j, hist.rate(tj + 0.5 * h));
    }
    buf.set_node(0, hist.rate(t0), sig(t0) * a0);
  } catch (const RangeError& e) {
    throw ArgumentError(std::string("history does not cover the kernel window: ") + e.what());
  }
}

}  // namespace

Trace integrate_ppd(const InputSignal& sig, double d, const TimeGrid& grid, const std::optional<History>& history) {
  if (!(d >= 0.0) || !std::isfinite(d)) throw ArgumentError("dead-time must be finite and >= 0");
  Trace out = make_trace(grid);
  if (d == 0.0) {
    for (std::size_t i = 0; i < grid.size(); ++i) {
      out.active[i] = 1.0;
      out.rate[i] = sig(grid[i]);
    }
    return out;
  }
  const double h = grid.dt();
  const std::size_t m = exact_steps(d, h, "dead-time");
  if (m < 64) throw ArgumentError("fixed-delay integration needs at least 64 steps per dead-time");
  check_stiffness(sig, grid);

  const double t0 = grid.t0();
  const History hist = history ? *history : equilibrium_history(sig.left_limit(t0), DeadTimeLaw::fixed(d));
  check_history(hist, DeadTimeLaw::fixed(d), d, t0, 1e-9);

  double y = hist.active(t0);
  HistoryBuffer buf(m);
  seed_buffer(buf, hist, sig, t0, h, m, y);
  out.active[0] = y;
  out.rate[0] = sig(t0) * y;

  const auto lag = static_cast<std::ptrdiff_t>(m);
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    const auto ii = static_cast<std::ptrdiff_t>(i);
    const double t = grid[i];
    const double t_next = grid[i + 1];
    const double f_s = buf.right(ii - lag);
    const double f_m = buf.mid(ii - lag);
    const double f_e = buf.left(ii - lag + 1);
    const double l_s = sig(t);
    const double l_m = sig(t + 0.5 * h);
    const double l_e = sig.left_limit(t_next);

    const double k1 = f_s - l_s * y;
    const double k2 = f_m - l_m * (y + 0.5 * h * k1);
    const double k3 = f_m - l_m * (y + 0.5 * h * k2);
    const double k4 = f_e - l_e * (y + h * k3);
    const double y_next = y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

    // Cubic Hermite midpoint from one-sided end slopes.
    const double slope_end = f_e - l_e * y_next;
    const double a_mid = 0.5 * (y + y_next) + h * (k1 - slope_end) / 8.0;
    buf.set_mid(ii, l_m * a_mid);
    buf.set_node(ii + 1, l_e * y_next, sig(t_next) * y_next);

    y = y_next;
    out.active[i + 1] = y;
    out.rate[i + 1] = sig(t_next) * y;
  }
  return out;
}

Trace integrate_pprd(const InputSignal& sig, const DeadTimeLaw& law, const TimeGrid& grid,
                     const std::optional<History>& history) {
  const double h = grid.dt();
  const double t0 = grid.t0();

  // Kernel: point masses at lag indices plus trapezoid weights on lags j*h.
  struct Atom {
    std::ptrdiff_t lag;
    double mass;
  };
  std::vector<Atom> atoms;
  std::vector<double> weights;  // weights[j] for lag j*h, j = 0..L
  double window = 0.0;

  if (const auto* f = std::get_if<law::Fixed>(&law.variant())) {
    window = f->d;
    if (f->d == 0.0) {
      atoms.push_back({0, 1.0});
    } else {
      const std::size_t m = exact_steps(f->d, h, "dead-time");
      if (m < 256) throw ArgumentError("time step too coarse for the kernel window (need h <= W/256)");
      atoms.push_back({static_cast<std::ptrdiff_t>(m), 1.0});
    }
    weights.assign(static_cast<std::size_t>(std::llround(window / h)) + 1, 0.0);
  } else {
    const double atom0 = law.atom_at_zero();
    if (atom0 > 0.0) atoms.push_back({0, atom0});
    if (atom0 < 1.0) {
      window = law.quantile_tail(1e-12);
      if (h > window / 256.0) throw ArgumentError("time step too coarse for the kernel window (need h <= W/256)");
      const auto L = static_cast<std::size_t>(std::ceil(window / h));
      weights.resize(L + 1);
      double sum = 0.0;
      for (std::size_t j = 0; j <= L; ++j) {
        const double w = (j == 0 || j == L ? 0.5 : 1.0) * h * law.density(static_cast<double>(j) * h);
        weights[j] = w;
        sum += w;
      }
      // Truncated tail and quadrature residual go to the last node so the
      // discrete kernel carries exactly the continuous mass.
      weights[L] += (1.0 - atom0) - sum;
      window = static_cast<double>(L) * h;
    } else {
      weights.assign(1, 0.0);
    }
  }
  const std::size_t L = weights.size() - 1;
  check_stiffness(sig, grid);

  const History hist = history ? *history : equilibrium_history(sig.left_limit(t0), law);
  check_history(hist, law, window, t0, 1e-9);

  double c0 = weights[0];
  std::vector<Atom> delayed;
  for (const auto& a : atoms) (a.lag == 0 ? c0 += a.mass : (delayed.push_back(a), c0));

  Trace out = make_trace(grid);
  double y = hist.active(t0);
  HistoryBuffer buf(std::max<std::size_t>(L, 1));
  seed_buffer(buf, hist, sig, t0, h, L, y);
  out.active[0] = y;
  out.rate[0] = sig(t0) * y;

  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    const auto ii = static_cast<std::ptrdiff_t>(i);
    const double t = grid[i];
    const double t_next = grid[i + 1];

    double past_s = 0.0, past_m = 0.0, past_e = 0.0;
    for (std::size_t j = 1; j <= L; ++j) {
      const auto jj = static_cast<std::ptrdiff_t>(j);
      past_s += weights[j] * buf.average(ii - jj);
      past_m += weights[j] * buf.mid(ii - jj);
      past_e += weights[j] * buf.average(ii + 1 - jj);
    }
    for (const auto& a : delayed) {
      past_s += a.mass * buf.right(ii - a.lag);
      past_m += a.mass * buf.mid(ii - a.lag);
      past_e += a.mass * buf.left(ii + 1 - a.lag);
    }

    const double l_s = sig(t);
    const double l_s_left = sig.left_limit(t);
    const double l_m = sig(t + 0.5 * h);
    const double l_e = sig.left_limit(t_next);
    auto rhs_s = [&](double a) { return past_s - l_s * a + c0 * l_s_left * a; };
    auto rhs_m = [&](double a) { return past_m - l_m * a + c0 * l_m * a; };
    auto rhs_e = [&](double a) { return past_e - l_e * a + c0 * l_e * a; };

    const double k1 = rhs_s(y);
    const double k2 = rhs_m(y + 0.5 * h * k1);
    const double k3 = rhs_m(y + 0.5 * h * k2);
    const double k4 = rhs_e(y + h * k3);
    const double y_next = y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

    const double a_mid = 0.5 * (y + y_next) + h * (k1 - rhs_e(y_next)) / 8.0;
    buf.set_mid(ii, l_m * a_mid);
    buf.set_node(ii + 1, l_e * y_next, sig(t_next) * y_next);

    y = y_next;
    out.active[i + 1] = y;
    out.rate[i + 1] = sig(t_next) * y;
  }
  return out;
}

ResidualReport normalization_residual(const Trace& trace, const InputSignal& sig, const DeadTimeLaw& law) {
  const TimeGrid& g = trace.grid;
  const double t0 = g.t0();
  const double h = g.dt();
  const bool fixed = std::holds_alternative<law::Fixed>(law.variant());
  const double window = fixed ? law.mean() : law.quantile_tail(1e-15);
  const double lam0 = sig.left_limit(t0);
  const double nu_eq = lam0 / (1.0 + lam0 * law.mean());
  auto surv = [&](double x) { return fixed ? 1.0 : law.survivor(std::max(x, 0.0)); };

  ResidualReport rep;
  rep.residual.resize(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double ti = g[i];
    const double lower = std::max(ti - window, t0);
    double memory = 0.0;
    if (ti > lower) {
      // First node at or above `lower`, partial panel below it.
      const double u = (lower - t0) / h;
      auto jl = static_cast<std::size_t>(std::ceil(u - 1e-9));
      jl = std::min(jl, i);
      for (std::size_t j = jl; j < i; ++j) {
        memory += 0.5 * h * (trace.rate[j] * surv(ti - g[j]) + trace.rate[j + 1] * surv(ti - g[j + 1]));
      }
      const double gap = g[jl] - lower;
      if (gap > 1e-12 * h && jl > 0) {
        const double w = 1.0 - gap / h;
        const double nu_lower = trace.rate[jl - 1] + w * (trace.rate[jl] - trace.rate[jl - 1]);
        memory += 0.5 * gap * (nu_lower * surv(ti - lower) + trace.rate[jl] * surv(ti - g[jl]));
      }
    }
    memory += nu_eq * law.integrated_survivor(ti - t0);
    rep.residual[i] = trace.active[i] + memory - 1.0;
    rep.max_abs = std::max(rep.max_abs, std::abs(rep.residual[i]));
  }
  return rep;
}

}  // namespace refrac::dde
