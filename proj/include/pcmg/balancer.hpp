#pragma once
#include <optional>
#include <string>
#include <vector>

#include "pcmg/lsgen.hpp"

namespace pcmg {

struct LevelPlan {
  double top_pct = 0.0;
  double threshold = 0.0;
  std::vector<Rule> rules;   // merit order (descending mean True profit)
  MrReport mr{};             // on the held-out third of the learning set
  std::string empty_reason;  // set when rules is empty
};

struct BalancingPlan {
  BalancingRequirement req;
  std::vector<std::string> attr_names;
  std::vector<LevelPlan> levels;  // in the order requested
  GenerationDiagnostics diag;
  std::uint64_t scenario_digest = 0;
  std::uint64_t seed = 0;
  int samples = 0;
  double baseline_profit = 0.0;  // undisturbed schedule, for cost deltas
};

struct HourPlans {
  BalancingPlan deficit;
  BalancingPlan excess;
};

// Largest balancing requirements worth planning for: the deficit is bounded
// by the worst of (largest single-bus generator trip including its reserve,
// upward load-envelope on the total forecast); the excess by the worst of
// (downward load envelope, per-technology upward deviation of stochastic
// generation).
double max_deficit(const Scenario& s);
double max_excess(const Scenario& s);

// Deviations inside the deadband are deliberately ignored.
bool within_deadband(const Scenario& s, double deviation_kw);

std::vector<double> default_levels();  // {0.35, 0.30, 0.25, 0.20, 0.15, 0.10}

// One learning set, relabeled and retrained per profitability level.
BalancingPlan plan_requirement(const Scenario& s,
                               const BalancingRequirement& req,
                               const std::vector<double>& levels, int n,
                               std::uint64_t seed);

// Hour-ahead plans for both directions at the envelope magnitudes.
HourPlans plan_hour(const Scenario& s, const std::vector<double>& levels,
                    int n, std::uint64_t seed);

// Islanding plan: every draw balances its own net exchange down to zero.
BalancingPlan plan_islanding(const Scenario& s,
                             const std::vector<double>& levels, int n,
                             std::uint64_t seed);

// Upper bound each >=-predicate is checked against when selecting a rule:
// dispatchable units can reach rated power, stochastic units their forecast,
// storage its discharge capability, loads their present metered demand.
std::vector<double> realized_availability(const Scenario& s);

struct RuleChoice {
  int level_index = -1;
  int rule_index = -1;
};

// Tightest level first, merit order within a level; a rule applies when every
// >=-predicate's attribute is within realized availability (<-predicates
// always apply).
std::optional<RuleChoice> select_rule(const BalancingPlan& plan,
                                      const std::vector<double>& realized);

// Expected profit given up by using a looser level than the tightest one
// that produced rules.
double forecast_error_cost(const BalancingPlan& plan, int used_level_index);

std::string format_plan(const BalancingPlan& plan);
std::string plan_json(const BalancingPlan& plan);

}  // namespace pcmg
