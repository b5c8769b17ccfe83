#pragma once

// CSV schemas shared by the command-line tools. Numbers are written in the
// shortest form that reads back to the same double.
//
//   trace     t,A,nu
//   spectrum  k,re,im
//   density   "# atom0=<v>" line, then x,rho
//   sweep     f,k,abs,phase            (optionally ,nu_max)
//   estimate  t,nu_hat,nu_se,A_hat,A_se,count
//   events    component,event_time
//   trials    t,nu_mean,nu_sd
//   hazard    tau,h,rho                (h/lambda0 and rho/max rho)
//   interval  x,iota                   (input only)

#include <iosfwd>
#include <string>
#include <vector>

#include "refrac/core.hpp"
#include "refrac/mc_sim.hpp"
#include "refrac/spectral.hpp"

namespace refrac::io {

std::string format_number(double v);

void write_trace(std::ostream& os, const Trace& trace);
void write_spectrum(std::ostream& os, const Spectrum& s);
void write_density(std::ostream& os, const std::vector<double>& x, const std::vector<double>& rho, double atom0);
void write_sweep(std::ostream& os, const std::vector<spectral::SweepPoint>& points, bool with_max);
void write_estimate(std::ostream& os, const mc::EnsembleEstimate& est);
void write_events(std::ostream& os, const std::vector<std::vector<double>>& events);
void write_trials(std::ostream& os, const TimeGrid& grid, const std::vector<double>& mean, const std::vector<double>& sd);
void write_hazard(std::ostream& os, const std::vector<double>& tau, const std::vector<double>& h,
                  const std::vector<double>& rho);

// Reads k,re,im rows into a spectrum with base frequency omega; missing
// harmonics are zero.
Spectrum read_spectrum(std::istream& is, double omega);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  double atom0 = 0.0;  // density files only
};

// Numeric CSV with a header line (and an optional "# atom0=" line).
Table read_table(std::istream& is);

struct ValidationReport {
  bool ok;
  std::string schema;  // matched schema name, empty if none
  std::string message;
};

// Header must match a schema exactly, every row must have the right number of
// fields, and every field must be the canonical shortest form of its value.
ValidationReport validate(std::istream& is);

}  // namespace refrac::io
