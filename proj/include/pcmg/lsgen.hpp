#pragma once
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pcmg/dtree.hpp"
#include "pcmg/scenario.hpp"

namespace pcmg {

enum class Direction : std::uint8_t { Deficit = 0, Excess = 1 };
enum class Origin : std::uint8_t {
  LoadDeviation = 0,
  DGDeviation = 1,
  Islanding = 2
};

const char* direction_name(Direction d);
const char* origin_name(Origin o);

// The hour-ahead balancing need a learning set is generated for. For
// Islanding the magnitude field is ignored: each Monte Carlo draw balances
// its own sampled net exchange down to zero.
struct BalancingRequirement {
  Direction direction = Direction::Deficit;
  double magnitude_kw = 0.0;
  Origin origin = Origin::LoadDeviation;
};

// Counter RNG stream ids (see docs/determinism.md): 0 deficit, 1 excess,
// 2 islanding, 3 planner events.
std::uint32_t stream_for(const BalancingRequirement& req);

struct GenerationDiagnostics {
  int attempted = 0;
  int kept = 0;
  int skipped_allocation = 0;
  int pf_not_converged = 0;
  int constraint_infeasible = 0;
  double max_mismatch_kw = 0.0;
};

struct LearningSet {
  std::vector<std::string> attr_names;
  std::vector<LabeledSample> samples;  // ascending sample_index
  GenerationDiagnostics diag;
  std::uint64_t seed = 0;
  std::uint32_t stream = 0;
  BalancingRequirement req;
  std::uint64_t scenario_digest = 0;
  bool labeled = false;
  double top_pct = 0.0;
  double threshold = 0.0;
};

// Attribute schema: one column per generator setpoint, per storage-bank
// power, and per served load group, in portfolio order.
std::vector<std::string> attr_schema(const Scenario& s);

// Baseline (undisturbed) dispatch straight from the hourly schedule, serving
// the forecast loads, storage idle.
Dispatch schedule_dispatch(const Scenario& s);
double schedule_profit(const Scenario& s);

// Rebuild the full dispatch a sample's attribute vector stands for. Profit
// and feasibility are pure functions of (attrs, scenario, requirement), so
// labels can be re-derived independently of generation.
Dispatch dispatch_from_attrs(const Scenario& s, const BalancingRequirement& req,
                             const std::vector<double>& attrs);

// One Monte Carlo draw; nullopt when the allocation sampler cannot place the
// full requirement (the draw is skipped, never resampled).
std::optional<LabeledSample> draw_sample(const Scenario& s,
                                         const BalancingRequirement& req,
                                         std::uint32_t sample_index,
                                         std::uint64_t seed,
                                         GenerationDiagnostics& diag);

// Draws for sample indices [begin, end); kept samples keep their index.
std::vector<LabeledSample> draw_range(const Scenario& s,
                                      const BalancingRequirement& req,
                                      std::uint32_t begin, std::uint32_t end,
                                      std::uint64_t seed,
                                      GenerationDiagnostics& diag);

// Attempts exactly n draws (indices 0..n-1). Throws if more than 90% of the
// attempts are skipped by the allocation sampler. The result is unlabeled.
LearningSet generate_ls(const Scenario& s, const BalancingRequirement& req,
                        int n, std::uint64_t seed);

// Profit cutoff separating the most profitable top_pct fraction: the lower
// order statistic at rank ceil(n*(1-top_pct)), i.e. labels are profit > cutoff.
// top_pct >= 1 returns -infinity (everything labeled True).
double cost_threshold(std::vector<double> profits, double top_pct);

// Label in place: True = feasible and profit strictly above the cutoff.
void label_ls(LearningSet& ls, double top_pct);

// Canonical little-endian binary format (see docs/formats.md).
std::vector<unsigned char> serialize_ls(const LearningSet& ls);
LearningSet parse_ls(const unsigned char* data, std::size_t len);
void save_ls(const LearningSet& ls, const std::string& path);
LearningSet load_ls(const std::string& path);

}  // namespace pcmg
