#pragma once
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pcmg/lsgen.hpp"
#include "pcmg/scenario.hpp"

namespace pcmg {

// ---------------------------------------------------------------------------
// Synthetic study year: hourly community demand, aggregate PV fleet output
// and aggregate wind output, 8760 entries each. Deterministic function of the
// scenario (no randomness): shape constants live in the implementation, the
// peak comes from the scenario's planner block, the PV/wind fleet sizes from
// the portfolio ratings.
// ---------------------------------------------------------------------------
struct SyntheticYear {
  std::vector<double> load_kw;
  std::vector<double> pv_kw;
  std::vector<double> wind_kw;
};

SyntheticYear synthesize_year(const Scenario& s);

// ---------------------------------------------------------------------------
// Annual forecast-deviation events.
//
// Per source (load, PV, wind) the model draws `annual_events_per_source`
// event hours uniformly without replacement, then a tail magnitude for each:
// normal deviates conditioned outside the two-sigma band of the source's RMS
// forecast error, clamped at the envelope. Load and PV magnitudes scale with
// the hour's demand/insolation; wind output is flat so its magnitudes are
// too. PV events are generation shortfalls only and are drawn over the hours
// whose fleet output reaches the configured floor (a loss of nothing is not
// an event). Coincident events at one hour sum; sums inside the deadband are
// dropped. Signs: positive = missing power (deficit), negative = surplus.
// ---------------------------------------------------------------------------
enum class EventSource { Load = 0, Pv = 1, Wind = 2 };

struct RawEvent {
  int hour = 0;  // 0..8759
  EventSource source = EventSource::Load;
  double signed_kw = 0.0;
};

struct CombinedEvent {
  int hour = 0;
  unsigned source_mask = 0;  // bit 0 = load, bit 1 = PV, bit 2 = wind
  double signed_kw = 0.0;
};

struct AnnualEvents {
  std::vector<RawEvent> raw;  // 3 * annual_events_per_source, by source then hour
  std::vector<CombinedEvent> combined;  // merged, deadband-filtered, by hour
  int dropped_in_deadband = 0;
  std::uint64_t seed = 0;
};

AnnualEvents generate_annual_events(const Scenario& s, const SyntheticYear& year,
                                    std::uint64_t seed);

// ---------------------------------------------------------------------------
// Requirement bins. Deficit edges are the scenario's ascending positive
// deficit_bins_kw, excess edges the negated excess_bins_kw. An event maps to
// the smallest edge covering its magnitude; deadband-internal events map to
// nothing; beyond the outermost edge the event clamps onto it (flagged).
// ---------------------------------------------------------------------------
struct BinnedEvent {
  double edge_kw = 0.0;  // signed: positive deficit, negative excess
  bool clamped = false;
};

std::optional<BinnedEvent> bin_requirement(const Scenario& s, double signed_kw);

struct BinCount {
  double edge_kw = 0.0;
  int count = 0;
  int clamped = 0;
};

// One entry per configured bin (zero-count bins included), deficit edges
// ascending then excess edges descending (i.e. -100 before -150).
std::vector<BinCount> bin_events(const Scenario& s, const AnnualEvents& ev);

// ---------------------------------------------------------------------------
// Storage sizing study.
// ---------------------------------------------------------------------------
struct StorageOption {
  double capacity_kwh = 0.0;
  double preferred_soc = 0.9;
};

// Scenario variant with every bank's capacity rescaled so the fleet totals
// `capacity_kwh` (converter ratings untouched) and all SOCs set to the
// option's preferred SOC.
Scenario storage_option_scenario(const Scenario& s, const StorageOption& opt);

// Deterministic least-cost response to a requirement: fills the magnitude
// over the same actor capabilities the Monte Carlo sampler uses, cheapest
// first (deficit: committed dispatchable headroom by marginal cost, offline
// commitment, storage discharge; excess: storage charging, then de-loadable
// units by de-loading cost). Returns the response as a sample-style
// attribute vector, or nullopt when total capability falls short.
std::optional<std::vector<double>> merit_response(const Scenario& s,
                                                  const BalancingRequirement& req);

struct BinAppraisal {
  double edge_kw = 0.0;
  int events = 0;
  bool coverable = false;
  int kept_samples = 0;
  int feasible_samples = 0;
  double cost_per_event = 0.0;  // £
  double annual_cost = 0.0;     // £ = cost_per_event * events
  std::string note;             // non-empty when something fell back or failed
};

struct OptionAppraisal {
  StorageOption option;
  bool suitable = true;
  double deficit_cost = 0.0;  // £/yr over coverable deficit bins
  double excess_cost = 0.0;   // £/yr over coverable excess bins
  double total_cost = 0.0;    // deficit_cost + excess_cost
  double baseline_profit = 0.0;
  std::vector<BinAppraisal> bins;
};

struct PlanningTable {
  std::vector<OptionAppraisal> options;
  std::vector<BinCount> bin_counts;
  int combined_instances = 0;
  int clamped_events = 0;
  int dropped_in_deadband = 0;
  std::uint64_t scenario_digest = 0;
  std::uint64_t seed = 0;
  int samples_per_bin = 0;
  // Worst slack-bus power-balance residual (kW) over every converged network
  // solution performed during the appraisal, Monte Carlo draws included.
  double max_mismatch_kw = 0.0;
};

// Appraises every (capacity, preferred SOC) option against the event set:
// per populated bin a learning set of `samples_per_bin` draws establishes
// whether the requirement has feasible responses (none in a deficit bin, or
// an uncoverable bin in either direction, marks the option "not suitable"),
// and the event is priced at the Eq.-style profit delta of the least-cost
// realizable response versus the undisturbed schedule, floored at zero.
// Appraisal poses the system at the forecast point (load now = forecast).
PlanningTable appraise(const Scenario& s, const std::vector<StorageOption>& options,
                       const AnnualEvents& events, int samples_per_bin,
                       std::uint64_t seed);

// Full study: synthetic year -> annual events -> appraisal of the scenario's
// configured capacity x preferred-SOC grid.
PlanningTable plan_storage(const Scenario& s, std::uint64_t seed,
                           int samples_per_bin = 1000);

std::string format_storage_plan(const PlanningTable& t);
std::string storage_plan_json(const PlanningTable& t);

}  // namespace pcmg
