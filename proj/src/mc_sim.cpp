#include "refrac/mc_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "numeric.hpp"
#include "refrac/errors.hpp"
#include "refrac/philox.hpp"

namespace refrac::mc {

namespace {

constexpr std::size_t kChunk = 4096;

// integral over [x1, x2] of e^{a (x - x2)} dP(x), a >= 0, for laws without
// an atom away from zero.
double decayed_mass(const DeadTimeLaw& law, double a, double x1, double x2) {
  if (x2 <= x1 && !(x1 <= 0.0 && x2 >= 0.0)) return 0.0;
  if (a * x2 <= 650.0) return std::exp(-a * x2) * law.exp_integral(a, x1, x2);
  const double lo = std::max(x1, x2 - 700.0 / a);
  auto f = [&](double x) { return law.density(x) * std::exp(a * (x - x2)); };
  double sum = detail::gauss_composite(f, lo, x2, 64);
  if (x1 <= 0.0) sum += law.atom_at_zero() * std::exp(-a * x2);
  return sum;
}

class LawSampler {
 public:
  explicit LawSampler(const DeadTimeLaw& law) : law_(law) {
    if (const auto* t = std::get_if<law::Tabulated>(&law.variant())) {
      biased_.assign(t->x.size(), 0.0);
      for (std::size_t i = 0; i + 1 < t->x.size(); ++i) biased_[i + 1] = biased_[i] + biased_piece(*t, i, t->x[i + 1] - t->x[i]);
    }
  }

  double draw(rng::Stream& s) const {
    const auto& v = law_.variant();
    if (const auto* f = std::get_if<law::Fixed>(&v)) return f->d;
    if (const auto* g = std::get_if<law::Gamma>(&v)) return s.gamma(g->n + 1.0, g->beta);
    const auto& t = std::get<law::Tabulated>(v);
    const double u = s.uniform();
    if (u < t.atom0) return 0.0;
    const double target = std::min(u - t.atom0, t.cumulative.back());
    auto it = std::upper_bound(t.cumulative.begin(), t.cumulative.end(), target);
    std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(it - t.cumulative.begin()), t.x.size() - 1) - 1;
    const double w = t.x[i + 1] - t.x[i];
    const double p0 = t.density[i];
    const double slope = (t.density[i + 1] - p0) / w;
    const double r = target - t.cumulative[i];
    // p0 y + slope y^2/2 = r, stable root.
    const double disc = std::max(p0 * p0 + 2.0 * slope * r, 0.0);
    const double den = p0 + std::sqrt(disc);
    const double y = den > 0.0 ? 2.0 * r / den : 0.0;
    return t.x[i] + std::clamp(y, 0.0, w);
  }

  // Density x rho(x)/E[x].
  double draw_length_biased(rng::Stream& s) const {
    const auto& v = law_.variant();
    if (const auto* f = std::get_if<law::Fixed>(&v)) return f->d;
    if (const auto* g = std::get_if<law::Gamma>(&v)) return s.gamma(g->n + 2.0, g->beta);
    const auto& t = std::get<law::Tabulated>(v);
    const double target = s.uniform() * biased_.back();
    auto it = std::upper_bound(biased_.begin(), biased_.end(), target);
    std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(it - biased_.begin()), t.x.size() - 1) - 1;
    const double r = target - biased_[i];
    double lo = 0.0, hi = t.x[i + 1] - t.x[i];
    for (int k = 0; k < 60; ++k) {
      const double mid = 0.5 * (lo + hi);
      (biased_piece(t, i, mid) < r ? lo : hi) = mid;
    }
    return t.x[i] + 0.5 * (lo + hi);
  }

 private:
  // integral_0^y (xa + u)(p0 + slope u) du on piece i.
  static double biased_piece(const law::Tabulated& t, std::size_t i, double y) {
    const double xa = t.x[i];
    const double p0 = t.density[i];
    const double slope = (t.density[i + 1] - p0) / (t.x[i + 1] - xa);
    return xa * p0 * y + 0.5 * (xa * slope + p0) * y * y + slope * y * y * y / 3.0;
  }

  const DeadTimeLaw& law_;
  std::vector<double> biased_;
};

// Per-bin sums over a block of components.
struct Accumulator {
  explicit Accumulator(std::size_t bins) : count(bins), count_sq(bins), act(bins), act_sq(bins) {}

  void add_events(const std::vector<double>& ev, const TimeGrid& bins) {
    std::size_t run_bin = 0;
    std::uint64_t run = 0;
    for (double t : ev) {
      const std::size_t j = bin_of(t, bins);
      if (j == kNone) continue;
      if (run > 0 && j != run_bin) flush(run_bin, run);
      run_bin = j;
      ++run;
    }
    if (run > 0) flush(run_bin, run);
  }

  void add_refractory(const std::vector<Interval>& iv, const TimeGrid& bins) {
    std::vector<char> refr(bins.size(), 0);
    const double t0 = bins.t0(), w = bins.dt();
    const auto nb = static_cast<std::ptrdiff_t>(bins.size());
    for (const auto& [a, b] : iv) {
      // Bins whose centre c_j = t0 + (j + 1/2) w lies in [a, b).
      const auto lo = static_cast<std::ptrdiff_t>(std::max(-1.0, std::ceil((a - t0) / w - 0.5)));
      const auto hi = static_cast<std::ptrdiff_t>(std::min(static_cast<double>(nb), std::ceil((b - t0) / w - 0.5)));
      for (auto j = std::max<std::ptrdiff_t>(lo, 0); j < std::min(hi, nb); ++j) refr[static_cast<std::size_t>(j)] = 1;
    }
    for (std::size_t j = 0; j < bins.size(); ++j) {
      const double v = refr[j] ? 0.0 : 1.0;
      act[j] += v;
      act_sq[j] += v;
    }
  }

  void add_activity(const std::vector<double>& q) {
    for (std::size_t j = 0; j < q.size(); ++j) {
      act[j] += q[j];
      act_sq[j] += q[j] * q[j];
    }
  }

  void merge(const Accumulator& o) {
    for (std::size_t j = 0; j < count.size(); ++j) {
      count[j] += o.count[j];
      count_sq[j] += o.count_sq[j];
      act[j] += o.act[j];
      act_sq[j] += o.act_sq[j];
    }
  }

  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  static std::size_t bin_of(double t, const TimeGrid& bins) {
    const double u = (t - bins.t0()) / bins.dt();
    if (!(u >= 0.0)) return kNone;
    const auto j = static_cast<std::size_t>(u);
    return j < bins.size() ? j : kNone;
  }

  std::vector<std::uint64_t> count, count_sq;
  std::vector<double> act, act_sq;

 private:
  void flush(std::size_t j, std::uint64_t& run) {
    count[j] += run;
    count_sq[j] += run * run;
    run = 0;
  }
};

EnsembleEstimate finish(const Accumulator& acc, const TimeGrid& bins, std::size_t m, bool with_active) {
  const std::size_t nb = bins.size();
  const double w = bins.dt();
  const auto md = static_cast<double>(m);
  const double dof = m > 1 ? md - 1.0 : 1.0;
  EnsembleEstimate out{TimeGrid(bins.t0() + 0.5 * w, w, nb),
                       m,
                       std::vector<double>(nb),
                       std::vector<double>(nb),
                       std::vector<double>(nb, std::numeric_limits<double>::quiet_NaN()),
                       std::vector<double>(nb, std::numeric_limits<double>::quiet_NaN()),
                       acc.count,
                       {}};
  for (std::size_t j = 0; j < nb; ++j) {
    const double mean = static_cast<double>(acc.count[j]) / md;
    const double var = std::max(0.0, (static_cast<double>(acc.count_sq[j]) / md - mean * mean) * md / dof);
    out.rate[j] = mean / w;
    out.rate_se[j] = std::sqrt(var / md) / w;
    if (with_active) {
      const double a = acc.act[j] / md;
      const double va = std::max(0.0, (acc.act_sq[j] / md - a * a) * md / dof);
      out.active[j] = std::clamp(a, 0.0, 1.0);
      out.active_se[j] = std::sqrt(va / md);
    }
  }
  return out;
}

struct Setup {
  TimeGrid bins;
  double t_stop;
  double a_eq;
  double lambda0;
};

Setup prepare(const InputSignal& sig, const DeadTimeLaw& law, const SimConfig& cfg) {
  if (cfg.components < 1) throw ArgumentError("ensemble needs at least one component");
  if (!(cfg.bin_width > 0.0)) throw ArgumentError("bin width must be > 0");
  if (!(cfg.t_end > cfg.t_begin)) throw ArgumentError("simulation span must have t_end > t_begin");
  const auto nb = static_cast<std::size_t>(std::ceil((cfg.t_end - cfg.t_begin) / cfg.bin_width - 1e-9));
  const TimeGrid bins(cfg.t_begin, cfg.bin_width, std::max<std::size_t>(nb, 1));
  const double t_stop = cfg.t_begin + static_cast<double>(bins.size()) * cfg.bin_width;
  const double sup = sig.sup(cfg.t_begin, t_stop);
  if (!(cfg.lambda_max >= sup * (1.0 - 1e-12))) {
    throw ArgumentError("lambda_max = " + std::to_string(cfg.lambda_max) + " is below sup lambda = " +
                        std::to_string(sup));
  }
  const double lam0 = sig.left_limit(cfg.t_begin);
  return {bins, t_stop, 1.0 / (1.0 + lam0 * law.mean()), lam0};
}

struct ComponentRun {
  std::vector<double> events;
  std::vector<Interval> refractory;
  std::vector<double> activity;
};

void run_generative(const InputSignal& sig, const LawSampler& sampler, const SimConfig& cfg, const Setup& su,
                    rng::Stream& s, ComponentRun& out) {
  double active_at = cfg.t_begin;
  if (s.uniform() >= su.a_eq) {
    const double x = sampler.draw_length_biased(s);
    active_at = cfg.t_begin + x * (1.0 - s.uniform());
    out.refractory.emplace_back(cfg.t_begin, active_at);
  }
  const double lmax = cfg.lambda_max;
  while (active_at < su.t_stop) {
    double t = active_at;
    bool fired = false;
    for (;;) {
      t += s.exponential(lmax);
      if (!(t < su.t_stop)) break;
      const double lt = sig(t);
      if (lt >= lmax || s.uniform() * lmax < lt) {
        fired = true;
        break;
      }
    }
    if (!fired) break;
    out.events.push_back(t);
    active_at = t + sampler.draw(s);
    out.refractory.emplace_back(t, active_at);
  }
}

void run_rejection(const InputSignal& sig, const DeadTimeLaw& law, const LawSampler& sampler, const SimConfig& cfg,
                   const Setup& su, rng::Stream& s, ComponentRun& out) {
  double age;
  if (s.uniform() < su.a_eq) {
    age = sampler.draw(s) + s.exponential(su.lambda0);
  } else {
    age = sampler.draw_length_biased(s) * s.uniform();
  }
  double last = cfg.t_begin - age;
  const double lmax = cfg.lambda_max;
  double t = cfg.t_begin;
  for (;;) {
    t += s.exponential(lmax);
    if (!(t < su.t_stop)) break;
    const double h = hazard_pprd(sig, law, t, t - last);
    if (h > lmax * (1.0 + 1e-12)) throw NumericalError("thinning acceptance probability exceeds 1");
    if (s.uniform() * lmax < h) {
      out.events.push_back(t);
      last = t;
    }
  }
  if (cfg.estimate_active) {
    const TimeGrid& b = su.bins;
    out.activity.resize(b.size());
    double prev = cfg.t_begin - age;
    std::size_t e = 0;
    for (std::size_t j = 0; j < b.size(); ++j) {
      const double c = b[j] + 0.5 * b.dt();
      while (e < out.events.size() && out.events[e] <= c) prev = out.events[e++];
      out.activity[j] = activity_probability(sig, law, c, c - prev);
    }
  }
}

EnsembleEstimate run(const InputSignal& sig, const DeadTimeLaw& law, const SimConfig& cfg, bool parallel) {
  const Setup su = prepare(sig, law, cfg);
  const LawSampler sampler(law);
  const std::size_t m = cfg.components;
  const std::size_t chunks = (m + kChunk - 1) / kChunk;
  std::vector<Accumulator> partial(chunks, Accumulator(su.bins.size()));
  std::vector<std::vector<double>> events(cfg.keep_events ? m : 0);
  std::vector<std::string> errors(chunks);

#pragma omp parallel for schedule(dynamic, 1) if (parallel)
  for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(chunks); ++c) {
    const auto cu = static_cast<std::size_t>(c);
    try {
      ComponentRun cr;
      for (std::size_t i = cu * kChunk; i < std::min(m, (cu + 1) * kChunk); ++i) {
        cr.events.clear();
        cr.refractory.clear();
        cr.activity.clear();
        rng::Stream s(cfg.seed, i);
        if (cfg.method == Method::generative) {
          run_generative(sig, sampler, cfg, su, s, cr);
        } else {
          run_rejection(sig, law, sampler, cfg, su, s, cr);
        }
        partial[cu].add_events(cr.events, su.bins);
        if (cfg.estimate_active) {
          if (cfg.method == Method::generative) {
            partial[cu].add_refractory(cr.refractory, su.bins);
          } else {
            partial[cu].add_activity(cr.activity);
          }
        }
        if (cfg.keep_events) events[i] = cr.events;
      }
    } catch (const std::exception& e) {
      errors[cu] = e.what();
    }
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw NumericalError("simulation failed: " + e);
  }
  Accumulator total(su.bins.size());
  for (const auto& p : partial) total.merge(p);
  EnsembleEstimate out = finish(total, su.bins, m, cfg.estimate_active);
  out.events = std::move(events);
  return out;
}

}  // namespace

double activity_probability(const InputSignal& sig, const DeadTimeLaw& law, double t, double tau) {
  if (!(tau >= 0.0)) throw DomainError("hazard needs age tau >= 0");
  if (const auto* f = std::get_if<law::Fixed>(&law.variant())) return tau >= f->d ? 1.0 : 0.0;
  if (std::isinf(tau)) return 1.0;
  const double surv = law.survivor(tau);
  if (surv == 0.0) return 1.0;
  const double s = t - tau;
  double mass;
  if (const auto* c = std::get_if<signal::Constant>(&sig.variant())) {
    mass = decayed_mass(law, c->rate, 0.0, tau);
  } else if (const auto* st = std::get_if<signal::Step>(&sig.variant())) {
    if (t < st->t_switch) {
      mass = decayed_mass(law, st->before, 0.0, tau);
    } else if (s >= st->t_switch) {
      mass = decayed_mass(law, st->after, 0.0, tau);
    } else {
      // Dead-time ending before the switch sees both rates.
      const double xs = st->t_switch - s;
      mass = std::exp(-st->after * (t - st->t_switch)) * decayed_mass(law, st->before, 0.0, xs) +
             (xs < tau ? decayed_mass(law, st->after, xs, tau) : 0.0);
    }
  } else {
    auto f = [&](double x) { return law.density(x) * std::exp(-sig.integral(s + x, t)); };
    mass = detail::gauss_composite(f, 0.0, tau, 32) + law.atom_at_zero() * std::exp(-sig.integral(s, t));
  }
  return std::clamp(1.0 - surv / (surv + mass), 0.0, 1.0);
}

double hazard_pprd(const InputSignal& sig, const DeadTimeLaw& law, double t, double tau) {
  return sig(t) * activity_probability(sig, law, t, tau);
}

EnsembleEstimate simulate(const InputSignal& sig, const DeadTimeLaw& law, const SimConfig& cfg) {
  return run(sig, law, cfg, true);
}

EnsembleEstimate simulate_serial(const InputSignal& sig, const DeadTimeLaw& law, const SimConfig& cfg) {
  return run(sig, law, cfg, false);
}

EnsembleEstimate simulate_generative(const InputSignal& sig, const DeadTimeLaw& law, SimConfig cfg) {
  cfg.method = Method::generative;
  return simulate(sig, law, cfg);
}

EnsembleEstimate simulate_rejection(const InputSignal& sig, const DeadTimeLaw& law, SimConfig cfg) {
  cfg.method = Method::rejection;
  return simulate(sig, law, cfg);
}

EnsembleEstimate estimate_from_events(const std::vector<std::vector<double>>& events, const TimeGrid& bins,
                                      const std::vector<std::vector<Interval>>* refractory) {
  if (events.empty()) throw ArgumentError("event set needs at least one component");
  if (refractory && refractory->size() != events.size()) {
    throw ArgumentError("refractory bookkeeping must cover every component");
  }
  Accumulator acc(bins.size());
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (!std::is_sorted(events[i].begin(), events[i].end())) {
      throw ArgumentError("event times of component " + std::to_string(i) + " are not sorted");
    }
    acc.add_events(events[i], bins);
    if (refractory) acc.add_refractory((*refractory)[i], bins);
  }
  return finish(acc, bins, events.size(), refractory != nullptr);
}

}  // namespace refrac::mc
