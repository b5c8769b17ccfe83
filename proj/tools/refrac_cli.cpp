// refrac: command-line front end. Every subcommand writes its primary CSV to
// stdout, or to PREFIX.<kind>.csv with --out PREFIX together with any
// secondary tables.
//
// Exit codes: 0 ok, 1 file failed validation, 2 usage, 3 not representable,
// 4 numerical failure.

#include <omp.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "refrac/analytic_ppd.hpp"
#include "refrac/csv.hpp"
#include "refrac/dde.hpp"
#include "refrac/errors.hpp"
#include "refrac/gamma_chain.hpp"
#include "refrac/mc_sim.hpp"
#include "refrac/renewal_map.hpp"
#include "refrac/spectral.hpp"

using namespace refrac;

namespace {

enum Exit { kOk = 0, kInvalid = 1, kUsage = 2, kNotRepresentable = 3, kNumerical = 4 };

// ---------------------------------------------------------------------------
// Output plumbing

class Output {
 public:
  explicit Output(std::string prefix) : prefix_(std::move(prefix)) {}

  // The primary table goes to stdout unless a prefix is set.
  void primary(const std::string& kind, const std::function<void(std::ostream&)>& write) const {
    if (prefix_.empty()) {
      write(std::cout);
    } else {
      secondary(kind, write);
    }
  }

  void secondary(const std::string& kind, const std::function<void(std::ostream&)>& write,
                 const std::string& ext = ".csv") const {
    if (prefix_.empty()) throw ArgumentError("writing the " + kind + " table needs --out PREFIX");
    const std::string path = prefix_ + "." + kind + ext;
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ArgumentError("cannot open " + path + " for writing");
    write(os);
    std::cerr << "wrote " << path << '\n';
  }

  bool has_prefix() const { return !prefix_.empty(); }

 private:
  std::string prefix_;
};

std::vector<double> split_numbers(const std::string& s, char sep, std::size_t expected, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos == 0 || pos != item.size()) throw ArgumentError("malformed number '" + item + "' in " + what);
    out.push_back(v);
  }
  if (out.size() != expected) {
    throw ArgumentError(what + " needs " + std::to_string(expected) + " values, got '" + s + "'");
  }
  return out;
}

std::pair<std::string, std::string> split_kind(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) throw ArgumentError("expected KIND:PARAMS, got '" + spec + "'");
  return {spec.substr(0, colon), spec.substr(colon + 1)};
}

int as_int(double v, const std::string& what) {
  if (v != std::round(v) || v < 0) throw ArgumentError(what + " must be a non-negative integer");
  return static_cast<int>(v);
}

io::Table read_table_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ArgumentError("cannot open " + path);
  return io::read_table(is);
}

// fixed:d | gamma:n,beta | gamma-mean:n,mean | table:file (density CSV)
DeadTimeLaw parse_law(const std::string& spec) {
  const auto [kind, args] = split_kind(spec);
  if (kind == "fixed") return DeadTimeLaw::fixed(split_numbers(args, ',', 1, "fixed law")[0]);
  if (kind == "gamma") {
    const auto v = split_numbers(args, ',', 2, "gamma law");
    return DeadTimeLaw::gamma(as_int(v[0], "gamma shape"), v[1]);
  }
  if (kind == "gamma-mean") {
    const auto v = split_numbers(args, ',', 2, "gamma law");
    return DeadTimeLaw::gamma_with_mean(as_int(v[0], "gamma shape"), v[1]);
  }
  if (kind == "table") {
    const auto t = read_table_file(args);
    if (t.header != std::vector<std::string>{"x", "rho"}) throw ArgumentError("dead-time table needs header x,rho");
    std::vector<double> x, rho;
    for (const auto& r : t.rows) {
      x.push_back(r[0]);
      rho.push_back(r[1]);
    }
    return DeadTimeLaw::tabulated(std::move(x), std::move(rho), t.atom0);
  }
  throw ArgumentError("unknown law kind '" + kind + "'");
}

DeadTimeLaw law_from(const std::optional<double>& d, const std::string& law) {
  if (d && !law.empty()) throw ArgumentError("give either --d or --law, not both");
  if (d) return DeadTimeLaw::fixed(*d);
  if (!law.empty()) return parse_law(law);
  throw ArgumentError("a dead-time is required: --d or --law");
}

// Input rate producing the equilibrium output rate nu for dead-time mean m.
double input_rate(double nu, double mean, const std::string& flag) {
  if (!(nu > 0.0) || !(1.0 / nu > mean)) {
    throw ArgumentError(flag + " must lie in (0, 1/E[x]) = (0, " + io::format_number(1.0 / mean) + ")");
  }
  return 1.0 / (1.0 / nu - mean);
}

double resolve_rate(const std::optional<double>& lambda, const std::optional<double>& nu, double mean,
                    const std::string& name) {
  if (lambda) return *lambda;
  if (nu) return input_rate(*nu, mean, "--nu" + name);
  throw ArgumentError("give --nu" + name + " or --lambda" + name);
}

// Grid [t_min, t_max] at dt; t_max is included when it is a multiple of dt.
TimeGrid span_grid(double t_min, double t_max, double dt) {
  if (!(dt > 0.0) || !(t_max > t_min)) throw ArgumentError("need dt > 0 and t-max > t-min");
  return TimeGrid::covering(t_min, t_max, dt);
}

// Prepends the pre-switch equilibrium to a trace computed on t >= 0.
Trace with_prefix(const TimeGrid& full, double active0, double rate0, const std::function<Trace(const TimeGrid&)>& solve) {
  std::size_t first = 0;
  while (first < full.size() && full[first] < 0.0) ++first;
  Trace out{full, std::vector<double>(full.size(), active0), std::vector<double>(full.size(), rate0)};
  if (first == full.size()) return out;
  const Trace tail = solve(TimeGrid(full[first], full.dt(), full.size() - first));
  std::copy(tail.active.begin(), tail.active.end(), out.active.begin() + static_cast<std::ptrdiff_t>(first));
  std::copy(tail.rate.begin(), tail.rate.end(), out.rate.begin() + static_cast<std::ptrdiff_t>(first));
  return out;
}

mc::Method parse_method(const std::string& m) {
  if (m == "generative") return mc::Method::generative;
  if (m == "rejection") return mc::Method::rejection;
  throw ArgumentError("unknown --method '" + m + "'");
}

struct McFlags {
  std::size_t components = 0;
  std::uint64_t seed = 1;
  double bin = 1e-3;
  std::string method = "generative";
  bool events = false;
  int trials = 1;
};

void add_mc_flags(CLI::App* c, McFlags& f) {
  c->add_option("--mc", f.components, "Monte Carlo ensemble size (0 = no simulation)");
  c->add_option("--seed", f.seed, "Monte Carlo seed");
  c->add_option("--bin", f.bin, "Monte Carlo bin width [s]");
  c->add_option("--method", f.method, "generative | rejection");
  c->add_flag("--events", f.events, "also dump raw event times");
}

// ---------------------------------------------------------------------------
// step

struct StepFlags {
  std::optional<double> d, nu0, nu1, lambda0, lambda1;
  double t_min = 0.0, t_max = 0.5, dt = 1e-3;
  std::string solver = "analytic";
  McFlags mc;
};

void run_step(const StepFlags& f, const Output& out) {
  if (!f.d) throw ArgumentError("--d is required");
  const double d = *f.d;
  const double l0 = resolve_rate(f.lambda0, f.nu0, d, "0");
  const double l1 = resolve_rate(f.lambda1, f.nu1, d, "1");
  const TimeGrid grid = span_grid(f.t_min, f.t_max, f.dt);
  const double a0 = analytic::equilibrium_active_fraction(l0, d);
  Trace tr = with_prefix(grid, a0, l0 * a0, [&](const TimeGrid& g) {
    if (f.solver == "analytic") return analytic::step_response(l0, l1, d, g);
    if (f.solver == "dde") return dde::integrate_ppd(InputSignal::step(l0, l1, 0.0), d, g);
    throw ArgumentError("unknown --solver '" + f.solver + "' (analytic | dde)");
  });
  out.primary("trace", [&](std::ostream& os) { io::write_trace(os, tr); });
  if (f.mc.components > 0) {
    mc::SimConfig cfg;
    cfg.components = f.mc.components;
    cfg.seed = f.mc.seed;
    cfg.t_begin = f.t_min;
    cfg.t_end = f.t_max;
    cfg.bin_width = f.mc.bin;
    cfg.method = parse_method(f.mc.method);
    cfg.lambda_max = std::max(l0, l1);
    cfg.keep_events = f.mc.events;
    const auto est = mc::simulate(InputSignal::step(l0, l1, 0.0), DeadTimeLaw::fixed(d), cfg);
    out.secondary("mc", [&](std::ostream& os) { io::write_estimate(os, est); });
    if (f.mc.events) out.secondary("events", [&](std::ostream& os) { io::write_events(os, est.events); });
  }
}

// ---------------------------------------------------------------------------
// periodic

struct PeriodicFlags {
  std::optional<double> d, nu0, lambda0, f;
  std::string law, sweep;
  double depth = 0.9;
  int harmonics = 8;
  int samples = 256;
  bool max_rate = false;
  std::string solver = "cf";
};

std::vector<double> sweep_frequencies(const std::string& s) {
  const auto v = split_numbers(s, ':', 3, "--f-sweep lo:hi:steps");
  const int steps = as_int(v[2], "sweep steps");
  if (!(v[0] > 0.0) || !(v[1] >= v[0]) || steps < 1) throw ArgumentError("--f-sweep needs 0 < lo <= hi and steps >= 1");
  std::vector<double> fs;
  for (int i = 0; i <= steps; ++i) fs.push_back(v[0] + (v[1] - v[0]) * i / steps);
  if (v[1] == v[0]) fs.resize(1);
  return fs;
}

void run_periodic(const PeriodicFlags& f, const Output& out) {
  const DeadTimeLaw law = law_from(f.d, f.law);
  const double l0 = resolve_rate(f.lambda0, f.nu0, law.mean(), "0");
  if (f.depth < 0.0 || f.depth > 1.0) throw ArgumentError("--mod-depth must lie in [0, 1]");
  if (f.harmonics < 1) throw ArgumentError("--harmonics must be >= 1");
  if (f.samples < 2) throw ArgumentError("--samples must be >= 2");
  if (f.f.has_value() == !f.sweep.empty()) throw ArgumentError("give exactly one of --f and --f-sweep");
  const std::vector<double> fs = f.f ? std::vector<double>{*f.f} : sweep_frequencies(f.sweep);
  for (double v : fs) {
    if (!(v > 0.0)) throw ArgumentError("frequencies must be > 0");
  }

  auto solve = [&](double freq) {
    const double w = angular_frequency(freq);
    const spectral::HarmonicSystem sys(law, spectrum_of_signal(InputSignal::cosine(l0, f.depth * l0, freq), w, 1),
                                       std::max(16, 2 * f.harmonics));
    Spectrum alpha = f.solver == "dense" ? spectral::solve_active_spectrum(sys)
                     : f.solver == "cf"  ? spectral::cosine_continued_fraction(l0, f.depth * l0, law, w)
                                         : throw ArgumentError("unknown --solver '" + f.solver + "' (cf | dense)");
    const Spectrum beta = spectral::output_spectrum(sys, alpha);
    const TimeGrid g(0.0, 1.0 / (freq * f.samples), static_cast<std::size_t>(f.samples) + 1);
    return std::pair{spectral::periodic_rate(alpha, beta, g), beta};
  };

  std::vector<spectral::SweepPoint> points;
  std::vector<Trace> traces;
  for (std::size_t i = 0; i < fs.size(); ++i) {
    auto [tr, beta] = solve(fs[i]);
    double mx = 0.0;
    for (std::size_t j = 0; j + 1 < tr.grid.size(); ++j) mx = std::max(mx, tr.rate[j]);
    points.push_back({fs[i], Spectrum(beta.omega(), 0), beta.resized(f.harmonics), mx});
    traces.push_back(std::move(tr));
  }

  if (fs.size() == 1) {
    out.primary("trace", [&](std::ostream& os) { io::write_trace(os, traces[0]); });
    if (out.has_prefix()) {
      out.secondary("spectrum", [&](std::ostream& os) { io::write_spectrum(os, points[0].beta); });
      out.secondary("sweep", [&](std::ostream& os) { io::write_sweep(os, points, f.max_rate); });
    }
    return;
  }
  out.primary("sweep", [&](std::ostream& os) { io::write_sweep(os, points, f.max_rate); });
  if (out.has_prefix()) {
    for (std::size_t i = 0; i < fs.size(); ++i) {
      const std::string tag = "f" + std::to_string(i);
      out.secondary(tag + ".trace", [&](std::ostream& os) { io::write_trace(os, traces[i]); });
      out.secondary(tag + ".spectrum", [&](std::ostream& os) { io::write_spectrum(os, points[i].beta); });
    }
  }
}

// ---------------------------------------------------------------------------
// pprd-step

struct PprdFlags {
  std::optional<double> mean, nu0, nu1, lambda0, lambda1;
  int shape = 10;
  double t_min = -0.05, t_max = 0.35, dt = 1e-4;
  std::string solver = "chain";
  McFlags mc;
};

void run_pprd_step(const PprdFlags& f, const Output& out) {
  if (!f.mean || !(*f.mean > 0.0)) throw ArgumentError("--mean > 0 is required");
  if (f.shape < 0) throw ArgumentError("--shape must be >= 0");
  const double mean = *f.mean, beta = (f.shape + 1) / mean;
  const auto law = DeadTimeLaw::gamma(f.shape, beta);
  const double l0 = resolve_rate(f.lambda0, f.nu0, mean, "0");
  const double l1 = resolve_rate(f.lambda1, f.nu1, mean, "1");
  const TimeGrid grid = span_grid(f.t_min, f.t_max, f.dt);
  const double a0 = 1.0 / (1.0 + l0 * mean);
  const Trace tr = with_prefix(grid, a0, l0 * a0, [&](const TimeGrid& g) {
    if (f.solver == "chain") return gamma_chain::step_response(f.shape, beta, l0, l1, g).trace;
    if (f.solver == "dde") return dde::integrate_pprd(InputSignal::step(l0, l1, 0.0), law, g);
    throw ArgumentError("unknown --solver '" + f.solver + "' (chain | dde)");
  });
  out.primary("trace", [&](std::ostream& os) { io::write_trace(os, tr); });
  if (f.mc.components == 0) return;
  if (f.mc.trials < 1) throw ArgumentError("--trials must be >= 1");
  mc::SimConfig cfg;
  cfg.components = f.mc.components;
  cfg.t_begin = f.t_min;
  cfg.t_end = f.t_max;
  cfg.bin_width = f.mc.bin;
  cfg.method = parse_method(f.mc.method);
  cfg.lambda_max = std::max(l0, l1);
  cfg.estimate_active = false;
  cfg.keep_events = f.mc.events;
  std::vector<double> sum, sum2;
  std::optional<TimeGrid> bins;
  std::vector<double> single_se;
  for (int t = 0; t < f.mc.trials; ++t) {
    cfg.seed = f.mc.seed + static_cast<std::uint64_t>(t);
    const auto est = mc::simulate(InputSignal::step(l0, l1, 0.0), law, cfg);
    if (!bins) {
      bins = est.grid;
      sum.assign(est.rate.size(), 0.0);
      sum2.assign(est.rate.size(), 0.0);
      single_se = est.rate_se;
    }
    for (std::size_t j = 0; j < est.rate.size(); ++j) {
      sum[j] += est.rate[j];
      sum2[j] += est.rate[j] * est.rate[j];
    }
    if (t == 0) out.secondary("mc", [&](std::ostream& os) { io::write_estimate(os, est); });
    if (t == 0 && f.mc.events) out.secondary("events", [&](std::ostream& os) { io::write_events(os, est.events); });
  }
  const double n = f.mc.trials;
  std::vector<double> mean_rate(sum.size()), sd(sum.size());
  for (std::size_t j = 0; j < sum.size(); ++j) {
    mean_rate[j] = sum[j] / n;
    sd[j] = n > 1 ? std::sqrt(std::max(0.0, (sum2[j] - n * mean_rate[j] * mean_rate[j]) / (n - 1))) : single_se[j];
  }
  out.secondary("trials", [&](std::ostream& os) { io::write_trials(os, *bins, mean_rate, sd); });
}

// ---------------------------------------------------------------------------
// hazard

struct HazardFlags {
  std::string law;
  std::optional<double> d, lambda0, nu0;
  double tau_max = 0.3;
  int points = 1000;
};

void run_hazard(const HazardFlags& f, const Output& out) {
  const DeadTimeLaw law = law_from(f.d, f.law);
  const double l0 = resolve_rate(f.lambda0, f.nu0, law.mean(), "0");
  if (!(f.tau_max > 0.0) || f.points < 2) throw ArgumentError("need --tau-max > 0 and --points >= 2");
  const auto sig = InputSignal::constant(l0);
  std::vector<double> tau(static_cast<std::size_t>(f.points) + 1), h(tau.size()), rho(tau.size());
  for (std::size_t i = 0; i < tau.size(); ++i) {
    tau[i] = f.tau_max * static_cast<double>(i) / f.points;
    h[i] = mc::hazard_pprd(sig, law, 0.0, tau[i]) / l0;
    rho[i] = law.density(tau[i]);
  }
  if (const auto* fx = std::get_if<law::Fixed>(&law.variant())) {
    // The atom is drawn as a unit spike at the node nearest to d.
    const auto i = static_cast<std::size_t>(std::lround(fx->d / f.tau_max * f.points));
    if (i < rho.size()) rho[i] = 1.0;
  }
  const double mx = *std::max_element(rho.begin(), rho.end());
  if (mx > 0.0) {
    for (double& r : rho) r /= mx;
  }
  out.primary("hazard", [&](std::ostream& os) { io::write_hazard(os, tau, h, rho); });
}

// ---------------------------------------------------------------------------
// represent

struct RepresentFlags {
  std::string process;
  std::optional<double> lambda;
};

int run_represent(const RepresentFlags& f, const Output& out) {
  const auto [kind, args] = split_kind(f.process);
  renewal::RenewalSpec spec;
  double default_lambda = 0.0;
  bool has_hazard = true;
  if (kind == "gamma") {
    const auto v = split_numbers(args, ',', 2, "gamma process");
    spec = renewal::gamma_interval(as_int(v[0], "gamma index"), v[1]);
    default_lambda = v[1];
  } else if (kind == "lognormal") {
    const auto v = split_numbers(args, ',', 3, "log-normal process");
    spec = renewal::lognormal_interval(v[0], v[1], v[2]);
    default_lambda = renewal::lognormal_lambda_bound(v[0], v[1], v[2]);
  } else if (kind == "table") {
    const auto t = read_table_file(args);
    if (t.header != std::vector<std::string>{"x", "iota"}) throw ArgumentError("interval table needs header x,iota");
    std::vector<double> x, p;
    for (const auto& r : t.rows) {
      x.push_back(r[0]);
      p.push_back(r[1]);
    }
    spec = renewal::sampled_interval(std::move(x), std::move(p));
    has_hazard = false;
  } else {
    throw ArgumentError("unknown process kind '" + kind + "' (gamma | lognormal | table)");
  }
  const double lmin = has_hazard ? renewal::minimal_lambda(spec) : std::nan("");
  if (!has_hazard) default_lambda = 0.0;
  const double lambda = f.lambda ? *f.lambda : default_lambda;
  if (!(lambda > 0.0)) throw ArgumentError("this process needs an explicit --lambda > 0");

  std::ostringstream report;
  report << "lambda=" << io::format_number(lambda) << '\n';
  if (has_hazard) {
    const auto v = renewal::check_hazard_condition(spec, lambda);
    report << "minimal_lambda=" << io::format_number(lmin) << '\n';
    report << "sup_s=" << io::format_number(v.sup) << " at x=" << io::format_number(v.sup_at) << '\n';
    report << "admissible=" << (v.admissible ? "yes" : "no") << '\n';
    if (!v.admissible) {
      report << "violation_x=" << io::format_number(v.violation) << '\n';
      std::cerr << report.str() << "not representable: rho < 0 at x=" << io::format_number(v.violation) << '\n';
      return kNotRepresentable;
    }
  }
  std::optional<renewal::PprdRepresentation> found;
  try {
    found = renewal::dead_time_from_interval(spec, lambda);
  } catch (const NotRepresentableError& e) {
    std::cerr << report.str() << "not representable: " << e.what() << " (x=" << io::format_number(e.where()) << ")\n";
    return kNotRepresentable;
  }
  const auto& rep = *found;
  const double residual = renewal::convolution_residual(spec, rep);
  report << "atom0=" << io::format_number(rep.law.atom_at_zero()) << '\n';
  report << "convolution_residual=" << io::format_number(residual) << '\n';
  std::vector<double> rho(rep.x.size());
  for (std::size_t i = 0; i < rep.x.size(); ++i) rho[i] = rep.law.density(rep.x[i]);
  out.primary("law", [&](std::ostream& os) { io::write_density(os, rep.x, rho, rep.law.atom_at_zero()); });
  std::cerr << report.str();
  if (out.has_prefix()) {
    out.secondary("report", [&](std::ostream& os) { os << report.str(); }, ".txt");
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// infer-input

struct InferFlags {
  std::string beta_csv, law;
  std::optional<double> d, f;
};

void run_infer(const InferFlags& f, const Output& out) {
  const DeadTimeLaw law = law_from(f.d, f.law);
  if (!f.f || !(*f.f > 0.0)) throw ArgumentError("--f > 0 is required");
  std::ifstream is(f.beta_csv);
  if (!is) throw ArgumentError("cannot open " + f.beta_csv);
  const Spectrum beta = io::read_spectrum(is, angular_frequency(*f.f));
  const auto inf = spectral::infer_input_spectrum(beta, law);
  out.primary("spectrum", [&](std::ostream& os) { io::write_spectrum(os, inf.lambda); });
  std::cerr << "condition=" << io::format_number(inf.condition) << '\n';
}

// ---------------------------------------------------------------------------
// validate

int run_validate(const std::vector<std::string>& files) {
  int rc = kOk;
  for (const auto& path : files) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
      std::cout << path << ": cannot open\n";
      rc = kInvalid;
      continue;
    }
    const auto rep = io::validate(is);
    std::cout << path << ": " << (rep.ok ? "valid " + rep.schema + " (" + rep.message + ")" : "INVALID " + rep.message)
              << '\n';
    if (!rep.ok) rc = kInvalid;
  }
  return rc;
}

// ---------------------------------------------------------------------------
// Scenario files: "key = value" lines become "--key value" (booleans become
// bare flags), inserted before the command-line flags so that flags win.

std::vector<std::string> expand_scenario(std::vector<std::string> args, const std::set<std::string>& commands) {
  std::string path;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" || args[i] == "--scenario") {
      if (i + 1 >= args.size()) throw ArgumentError(args[i] + " needs a file");
      path = args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
      break;
    }
  }
  if (path.empty()) return args;
  std::ifstream is(path);
  if (!is) throw ArgumentError("cannot open scenario file " + path);
  std::vector<std::string> extra;
  std::string line, command;
  while (std::getline(is, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    if (trim(line).empty()) continue;
    if (eq == std::string::npos) throw ArgumentError("scenario line without '=': " + line);
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (key == "command") {
      command = value;
      continue;
    }
    if (value == "true") {
      extra.push_back("--" + key);
    } else if (value != "false") {
      extra.push_back("--" + key);
      extra.push_back(value);
    }
  }
  auto it = std::find_if(args.begin() + 1, args.end(), [&](const std::string& a) { return commands.count(a) > 0; });
  if (it == args.end()) {
    if (command.empty()) throw ArgumentError("no subcommand given on the command line or in the scenario file");
    args.push_back(command);
    it = args.end() - 1;
  }
  args.insert(it + 1, extra.begin(), extra.end());
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ensembles of point processes with refractoriness: analytic solutions, solvers and simulation"};
  app.name("refrac");
  app.footer(
      "Scenario files: --config FILE with 'key = value' lines naming long flags (and optionally 'command = NAME');\n"
      "flags given on the command line take precedence.\n"
      "Exit codes: 0 ok, 1 invalid file (validate), 2 usage, 3 not representable, 4 numerical failure.");
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  std::string prefix;
  int threads = 0;
  app.add_option("--out", prefix, "write tables to PREFIX.<kind>.csv instead of stdout");
  app.add_option("--threads", threads, "worker threads (default: REFRAC_NUM_THREADS or all cores)");

  StepFlags step;
  auto* c_step = app.add_subcommand("step", "step response of the fixed dead-time ensemble");
  c_step->add_option("--d", step.d, "dead-time [s]");
  c_step->add_option("--nu0", step.nu0, "equilibrium output rate before the step [Hz]");
  c_step->add_option("--nu1", step.nu1, "equilibrium output rate after the step [Hz]");
  c_step->add_option("--lambda0", step.lambda0, "input rate before the step [Hz] (overrides --nu0)");
  c_step->add_option("--lambda1", step.lambda1, "input rate after the step [Hz] (overrides --nu1)");
  c_step->add_option("--t-min", step.t_min, "trace start [s]");
  c_step->add_option("--t-max", step.t_max, "trace end [s]");
  c_step->add_option("--dt", step.dt, "trace spacing [s]");
  c_step->add_option("--solver", step.solver, "analytic | dde");
  add_mc_flags(c_step, step.mc);

  PeriodicFlags per;
  auto* c_per = app.add_subcommand("periodic", "periodic steady state under cosine input");
  c_per->add_option("--d", per.d, "fixed dead-time [s]");
  c_per->add_option("--law", per.law, "fixed:d | gamma:n,beta | gamma-mean:n,mean | table:file");
  c_per->add_option("--nu0", per.nu0, "equilibrium output rate at the mean input [Hz]");
  c_per->add_option("--lambda0", per.lambda0, "mean input rate [Hz] (overrides --nu0)");
  c_per->add_option("--mod-depth", per.depth, "modulation depth eps/lambda0");
  c_per->add_option("--f", per.f, "drive frequency [Hz]");
  c_per->add_option("--f-sweep", per.sweep, "frequency sweep lo:hi:steps [Hz]");
  c_per->add_option("--harmonics", per.harmonics, "harmonics written per spectrum");
  c_per->add_option("--samples", per.samples, "trace samples per period");
  c_per->add_option("--solver", per.solver, "cf | dense");
  c_per->add_flag("--max-rate", per.max_rate, "add the per-period maximum output rate to the sweep");

  PprdFlags pprd;
  auto* c_pprd = app.add_subcommand("pprd-step", "step response with gamma-distributed dead-times");
  c_pprd->add_option("--mean", pprd.mean, "mean dead-time [s]");
  c_pprd->add_option("--shape", pprd.shape, "gamma shape index n (n + 1 stages)");
  c_pprd->add_option("--nu0", pprd.nu0, "equilibrium output rate before the step [Hz]");
  c_pprd->add_option("--nu1", pprd.nu1, "equilibrium output rate after the step [Hz]");
  c_pprd->add_option("--lambda0", pprd.lambda0, "input rate before the step [Hz]");
  c_pprd->add_option("--lambda1", pprd.lambda1, "input rate after the step [Hz]");
  c_pprd->add_option("--t-min", pprd.t_min, "trace start [s]");
  c_pprd->add_option("--t-max", pprd.t_max, "trace end [s]");
  c_pprd->add_option("--dt", pprd.dt, "trace spacing [s]");
  c_pprd->add_option("--solver", pprd.solver, "chain | dde");
  c_pprd->add_option("--trials", pprd.mc.trials, "independent Monte Carlo trials");
  add_mc_flags(c_pprd, pprd.mc);
  pprd.mc.method = "rejection";
  pprd.mc.bin = 5e-3;

  HazardFlags haz;
  auto* c_haz = app.add_subcommand("hazard", "hazard function and dead-time density under constant input");
  c_haz->add_option("--law", haz.law, "fixed:d | gamma:n,beta | gamma-mean:n,mean | table:file");
  c_haz->add_option("--d", haz.d, "fixed dead-time [s]");
  c_haz->add_option("--lambda0", haz.lambda0, "input rate [Hz]");
  c_haz->add_option("--nu0", haz.nu0, "equilibrium output rate [Hz] (alternative to --lambda0)");
  c_haz->add_option("--tau-max", haz.tau_max, "largest age [s]");
  c_haz->add_option("--points", haz.points, "age intervals");

  RepresentFlags rep;
  auto* c_rep = app.add_subcommand("represent", "dead-time representation of a renewal process");
  c_rep->add_option("--process", rep.process, "gamma:r,beta | lognormal:mu,sigma,delta | table:file")->required();
  c_rep->add_option("--lambda", rep.lambda, "input rate [Hz] (default: minimal admissible)");

  InferFlags inf;
  auto* c_inf = app.add_subcommand("infer-input", "input spectrum from an output spectrum");
  c_inf->add_option("--beta-csv", inf.beta_csv, "output spectrum CSV (k,re,im)")->required();
  c_inf->add_option("--law", inf.law, "fixed:d | gamma:n,beta | gamma-mean:n,mean | table:file");
  c_inf->add_option("--d", inf.d, "fixed dead-time [s]");
  c_inf->add_option("--f", inf.f, "base frequency [Hz]");

  std::vector<std::string> files;
  auto* c_val = app.add_subcommand("validate", "check CSV files against the output schemas");
  c_val->add_option("files", files, "CSV files")->required();

  const std::set<std::string> commands{"step", "periodic", "pprd-step", "hazard", "represent", "infer-input", "validate"};
  try {
    std::vector<std::string> args(argv, argv + argc);
    args = expand_scenario(std::move(args), commands);
    args.erase(args.begin());
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }

  if (threads <= 0) {
    if (const char* env = std::getenv("REFRAC_NUM_THREADS")) threads = std::atoi(env);
  }
  if (threads > 0) omp_set_num_threads(threads);

  const Output out(prefix);
  try {
    if (*c_step) run_step(step, out);
    if (*c_per) run_periodic(per, out);
    if (*c_pprd) run_pprd_step(pprd, out);
    if (*c_haz) run_hazard(haz, out);
    if (*c_rep) return run_represent(rep, out);
    if (*c_inf) run_infer(inf, out);
    if (*c_val) return run_validate(files);
  } catch (const NotRepresentableError& e) {
    std::cerr << "not representable: " << e.what() << " (x=" << io::format_number(e.where()) << ")\n";
    return kNotRepresentable;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const ArgumentError& e) {
    std::cerr << "usage: " << e.what() << '\n';
    return kUsage;
  } catch (const DomainError& e) {
    std::cerr << "usage: " << e.what() << '\n';
    return kUsage;
  } catch (const RangeError& e) {
    std::cerr << "usage: " << e.what() << '\n';
    return kUsage;
  } catch (const ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  }
  return kOk;
}
