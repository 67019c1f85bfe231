#pragma once
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "pcmg/assets.hpp"
#include "pcmg/network.hpp"

namespace pcmg {

// Scheduled operating point for one dispatchable or stochastic generator at
// the planning hour. For stochastic units p_kw is the forecast availability.
struct ScheduleEntry {
  double p_kw = 0.0;
  double r_kw = 0.0;
  bool committed = false;
};

// Snapshot of the microgrid at the planning hour: unit schedules, storage
// state of charge, metered load now and forecast load for the next hour.
// Vectors are parallel to the portfolio's dg / storage / load vectors.
struct SystemState {
  std::vector<ScheduleEntry> dg;
  std::vector<double> soc;
  std::vector<double> load_now_kw;
  std::vector<double> load_forecast_kw;
  int hour = 12;  // hour of day, 0..23
};

// Forecast-deviation envelopes and tail statistics per source class.
// Fractions are of the respective forecast quantity; sigmas are RMS forecast
// errors (fractions). Deviations worth reacting to lie beyond two sigmas.
struct DeviationModel {
  double load_up = 0.15;
  double load_down = 0.0727273;  // magnitude of the downward envelope
  double wind_up = 0.15;
  double wind_down = 0.15;
  double pv_down = 0.35;
  double wind_extreme = 0.40;  // full-loss style events, disabled by default
  double pv_extreme = 0.50;
  bool use_extremes = false;
  double sigma_load = 0.033;
  double sigma_pv = 0.035;
  double sigma_wind = 0.057;
  int annual_events_per_source = 402;
  int combined_instances = 700;  // expected post-merge event count (reporting target)
  double deadband_fraction = 0.033;
};

// Storage-sizing study grid plus the synthetic-year calibration knobs.
struct PlannerOptions {
  std::vector<double> capacities_kwh;
  std::vector<double> preferred_socs;
  std::vector<double> deficit_bins_kw;  // ascending, positive
  std::vector<double> excess_bins_kw;   // ascending, positive magnitudes
  double profile_peak_kw = 1945.0;      // peak of the synthetic annual load profile
  double pv_event_floor_kw = 258.0;     // fleet output below which PV deviation events are not drawn
};

struct Scenario {
  std::string name;
  double nominal_total_load_kw = 0.0;
  NetworkModel network;
  AssetPortfolio portfolio;
  SystemState state;
  DeviationModel deviations;
  PlannerOptions planner;
};

// Parse and validate a scenario document. Throws std::runtime_error with the
// offending field's path on any structural or semantic problem.
Scenario load_scenario(const std::string& path);
Scenario parse_scenario(const std::string& json_text);

// Canonical serialization: stable field order, shortest round-trip numbers.
// parse_scenario(canonical_text(s)) reproduces the identical canonical text.
std::string canonical_text(const Scenario& s);

// FNV-1a 64 digest of the canonical text, and its 16-char hex form.
std::uint64_t scenario_digest(const Scenario& s);
std::string scenario_digest_hex(const Scenario& s);

// Complex per-bus injections (kW + j kvar, generation positive) for a
// dispatch against this scenario's network. Loads draw reactive power at
// their group power factor; generators and storage operate at unity.
std::vector<std::complex<double>> bus_injections(const Scenario& s,
                                                 const Dispatch& d);

// Sum of forecast loads / currently metered loads.
double total_forecast_load_kw(const Scenario& s);
double total_present_load_kw(const Scenario& s);

}  // namespace pcmg
