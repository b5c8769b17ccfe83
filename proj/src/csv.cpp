#include "refrac/csv.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "refrac/errors.hpp"

namespace refrac::io {

namespace {

std::string format_int(long long v) { return std::to_string(v); }

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, ',')) out.push_back(cur);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool parse_double(const std::string& s, double& v) {
  const char* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  return ec == std::errc() && p == end;
}

bool parse_int(const std::string& s, long long& v) {
  const char* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  return ec == std::errc() && p == end;
}

struct Schema {
  std::string name;
  std::vector<std::string> columns;
  std::set<std::size_t> integer_columns;
  bool atom_line = false;
};

const std::vector<Schema>& schemas() {
  static const std::vector<Schema> s{
      {"trace", {"t", "A", "nu"}, {}},
      {"spectrum", {"k", "re", "im"}, {0}},
      {"density", {"x", "rho"}, {}, true},
      {"sweep", {"f", "k", "abs", "phase"}, {1}},
      {"sweep", {"f", "k", "abs", "phase", "nu_max"}, {1}},
      {"estimate", {"t", "nu_hat", "nu_se", "A_hat", "A_se", "count"}, {5}},
      {"events", {"component", "event_time"}, {0}},
      {"trials", {"t", "nu_mean", "nu_sd"}, {}},
      {"hazard", {"tau", "h", "rho"}, {}},
      {"interval", {"x", "iota"}, {}},
  };
  return s;
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + v[i];
  return out;
}

}  // namespace

std::string format_number(double v) {
  std::array<char, 64> buf{};
  auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) throw NumericalError("number formatting failed");
  return std::string(buf.data(), p);
}

void write_trace(std::ostream& os, const Trace& trace) {
  os << "t,A,nu\n";
  for (std::size_t i = 0; i < trace.grid.size(); ++i) {
    os << format_number(trace.grid[i]) << ',' << format_number(trace.active[i]) << ','
       << format_number(trace.rate[i]) << '\n';
  }
}

void write_spectrum(std::ostream& os, const Spectrum& s) {
  os << "k,re,im\n";
  for (int k = -s.order(); k <= s.order(); ++k) {
    os << format_int(k) << ',' << format_number(s[k].real()) << ',' << format_number(s[k].imag()) << '\n';
  }
}

void write_density(std::ostream& os, const std::vector<double>& x, const std::vector<double>& rho, double atom0) {
  os << "# atom0=" << format_number(atom0) << "\nx,rho\n";
  for (std::size_t i = 0; i < x.size(); ++i) os << format_number(x[i]) << ',' << format_number(rho[i]) << '\n';
}

void write_sweep(std::ostream& os, const std::vector<spectral::SweepPoint>& points, bool with_max) {
  os << (with_max ? "f,k,abs,phase,nu_max\n" : "f,k,abs,phase\n");
  for (const auto& p : points) {
    for (int k = 0; k <= p.beta.order(); ++k) {
      const cplx b = p.beta[k];
      os << format_number(p.f) << ',' << format_int(k) << ',' << format_number(std::abs(b)) << ','
         << format_number(std::arg(b));
      if (with_max) os << ',' << format_number(p.max_rate);
      os << '\n';
    }
  }
}

void write_estimate(std::ostream& os, const mc::EnsembleEstimate& est) {
  os << "t,nu_hat,nu_se,A_hat,A_se,count\n";
  for (std::size_t i = 0; i < est.grid.size(); ++i) {
    os << format_number(est.grid[i]) << ',' << format_number(est.rate[i]) << ',' << format_number(est.rate_se[i])
       << ',' << format_number(est.active[i]) << ',' << format_number(est.active_se[i]) << ','
       << std::to_string(est.count[i]) << '\n';
  }
}

void write_events(std::ostream& os, const std::vector<std::vector<double>>& events) {
  os << "component,event_time\n";
  for (std::size_t c = 0; c < events.size(); ++c) {
    for (double t : events[c]) os << std::to_string(c) << ',' << format_number(t) << '\n';
  }
}

void write_trials(std::ostream& os, const TimeGrid& grid, const std::vector<double>& mean,
                  const std::vector<double>& sd) {
  os << "t,nu_mean,nu_sd\n";
  for (std::size_t i = 0; i < grid.size(); ++i) {
    os << format_number(grid[i]) << ',' << format_number(mean[i]) << ',' << format_number(sd[i]) << '\n';
  }
}

void write_hazard(std::ostream& os, const std::vector<double>& tau, const std::vector<double>& h,
                  const std::vector<double>& rho) {
  os << "tau,h,rho\n";
  for (std::size_t i = 0; i < tau.size(); ++i) {
    os << format_number(tau[i]) << ',' << format_number(h[i]) << ',' << format_number(rho[i]) << '\n';
  }
}

Table read_table(std::istream& is) {
  Table t;
  std::string line;
  bool have_header = false;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const std::string key = "# atom0=";
      if (line.rfind(key, 0) == 0 && !parse_double(line.substr(key.size()), t.atom0)) {
        throw ValidationError("malformed atom0 line");
      }
      continue;
    }
    const auto fields = split(line);
    if (!have_header) {
      t.header = fields;
      have_header = true;
      continue;
    }
    if (fields.size() != t.header.size()) {
      throw ValidationError("line " + std::to_string(lineno) + ": expected " + std::to_string(t.header.size()) +
                            " fields");
    }
    std::vector<double> row(fields.size());
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (!parse_double(fields[i], row[i])) {
        throw ValidationError("line " + std::to_string(lineno) + ": '" + fields[i] + "' is not a number");
      }
    }
    t.rows.push_back(std::move(row));
  }
  if (!have_header) throw ValidationError("CSV has no header line");
  return t;
}

Spectrum read_spectrum(std::istream& is, double omega) {
  const Table t = read_table(is);
  if (t.header != std::vector<std::string>{"k", "re", "im"}) throw ValidationError("spectrum CSV needs header k,re,im");
  int order = 0;
  for (const auto& r : t.rows) {
    if (r[0] != std::round(r[0])) throw ValidationError("spectrum harmonic index must be an integer");
    order = std::max(order, static_cast<int>(std::abs(r[0])));
  }
  Spectrum s(omega, order);
  for (const auto& r : t.rows) s.set(static_cast<int>(r[0]), {r[1], r[2]});
  return s;
}

ValidationReport validate(std::istream& is) {
  std::string line;
  std::size_t lineno = 0;
  bool atom_seen = false;
  const Schema* schema = nullptr;
  while (std::getline(is, line)) {
    ++lineno;
    if (!schema) {
      if (line.rfind("# atom0=", 0) == 0 && !atom_seen) {
        double v;
        const std::string val = line.substr(8);
        if (!parse_double(val, v) || format_number(v) != val) {
          return {false, "", "line " + std::to_string(lineno) + ": malformed atom0 value"};
        }
        atom_seen = true;
        continue;
      }
      const auto fields = split(line);
      for (const auto& s : schemas()) {
        if (s.columns == fields && s.atom_line == atom_seen) schema = &s;
      }
      if (!schema) return {false, "", "line " + std::to_string(lineno) + ": unknown header '" + line + "'"};
      continue;
    }
    const auto fields = split(line);
    if (fields.size() != schema->columns.size()) {
      return {false, schema->name, "line " + std::to_string(lineno) + ": expected " +
                                       std::to_string(schema->columns.size()) + " fields"};
    }
    for (std::size_t i = 0; i < fields.size(); ++i) {
      bool ok;
      if (schema->integer_columns.count(i)) {
        long long v;
        ok = parse_int(fields[i], v) && format_int(v) == fields[i];
      } else {
        double v;
        ok = parse_double(fields[i], v) && format_number(v) == fields[i];
      }
      if (!ok) {
        return {false, schema->name, "line " + std::to_string(lineno) + ", column " + schema->columns[i] +
                                         ": '" + fields[i] + "' is not in canonical form"};
      }
    }
  }
  if (!schema) return {false, "", "file has no header line"};
  return {true, schema->name, "ok: " + std::to_string(lineno - 1 - (atom_seen ? 1 : 0)) + " rows, columns " +
                                  join(schema->columns)};
}

}  // namespace refrac::io
