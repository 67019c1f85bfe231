#include "pcmg/balancer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>

#include "nlohmann/json.hpp"
#include "pcmg/util.hpp"

namespace pcmg {

double max_deficit(const Scenario& s) {
  // worst single-bus generation trip, including the reserve carried there
  std::map<int, double> per_bus;
  for (std::size_t i = 0; i < s.portfolio.dg.size(); ++i) {
    const ScheduleEntry& e = s.state.dg[i];
    if (!e.committed) continue;
    per_bus[s.portfolio.dg[i].bus] += e.p_kw + e.r_kw;
  }
  double trip = 0.0;
  for (const auto& [bus, kw] : per_bus) trip = std::max(trip, kw);
  const double load_spike =
      s.deviations.load_up * total_forecast_load_kw(s);
  return std::max(trip, load_spike);
}

double max_excess(const Scenario& s) {
  const double load_drop =
      s.deviations.load_down * total_forecast_load_kw(s);
  // upward production surprise, per stochastic technology
  std::map<DGKind, double> per_kind;
  for (std::size_t i = 0; i < s.portfolio.dg.size(); ++i) {
    const DGUnit& u = s.portfolio.dg[i];
    if (!is_stochastic(u.kind) || !s.state.dg[i].committed) continue;
    double up = 0.0;
    if (u.kind == DGKind::WG) up = s.deviations.wind_up;
    // PV and BIPV envelopes are downward only
    per_kind[u.kind] += up * s.state.dg[i].p_kw;
  }
  double surge = 0.0;
  for (const auto& [kind, kw] : per_kind) surge = std::max(surge, kw);
  return std::max(load_drop, surge);
}

bool within_deadband(const Scenario& s, double deviation_kw) {
  return std::fabs(deviation_kw) <=
         s.deviations.deadband_fraction * s.nominal_total_load_kw;
}

std::vector<double> default_levels() {
  return {0.35, 0.30, 0.25, 0.20, 0.15, 0.10};
}

BalancingPlan plan_requirement(const Scenario& s,
                               const BalancingRequirement& req,
                               const std::vector<double>& levels, int n,
                               std::uint64_t seed) {
  if (levels.empty())
    throw std::invalid_argument("plan_requirement: no profitability levels");
  for (double t : levels)
    if (!(t > 0.0 && t <= 1.0))
      throw std::invalid_argument(
          "plan_requirement: levels must be fractions in (0, 1]");

  BalancingPlan plan;
  plan.req = req;
  plan.seed = seed;
  plan.samples = n;
  plan.scenario_digest = scenario_digest(s);
  plan.baseline_profit = schedule_profit(s);

  LearningSet ls = generate_ls(s, req, n, seed);
  plan.attr_names = ls.attr_names;
  plan.diag = ls.diag;

  for (double top : levels) {
    LevelPlan lv;
    lv.top_pct = top;
    if (ls.samples.empty()) {
      lv.empty_reason = "no Monte Carlo draws survived generation";
      plan.levels.push_back(std::move(lv));
      continue;
    }
    label_ls(ls, top);
    lv.threshold = ls.threshold;
    auto [train_set, test_set] = split_train_test(ls.samples);
    if (train_set.empty()) {
      lv.empty_reason = "training split is empty";
      plan.levels.push_back(std::move(lv));
      continue;
    }
    int true_count = 0;
    for (const auto& sm : train_set) true_count += sm.label ? 1 : 0;
    if (true_count == 0) {
      lv.empty_reason =
          "profit cutoff excludes every feasible training sample";
      plan.levels.push_back(std::move(lv));
      continue;
    }
    DecisionTree tree = train(train_set, ls.attr_names);
    lv.rules = extract_rules(tree, train_set);
    if (!test_set.empty()) lv.mr = evaluate_mr(tree, test_set);
    if (lv.rules.empty())
      lv.empty_reason = "no high-purity profitable region was found";
    plan.levels.push_back(std::move(lv));
  }
  return plan;
}

HourPlans plan_hour(const Scenario& s, const std::vector<double>& levels,
                    int n, std::uint64_t seed) {
  HourPlans plans;
  BalancingRequirement deficit{Direction::Deficit, max_deficit(s),
                               Origin::LoadDeviation};
  BalancingRequirement excess{Direction::Excess, max_excess(s),
                              Origin::LoadDeviation};
  plans.deficit = plan_requirement(s, deficit, levels, n, seed);
  plans.excess = plan_requirement(s, excess, levels, n, seed);
  return plans;
}

BalancingPlan plan_islanding(const Scenario& s,
                             const std::vector<double>& levels, int n,
                             std::uint64_t seed) {
  // direction recorded from the scheduled net exchange; each draw balances
  // its own sampled exchange regardless
  double gen = 0.0;
  for (const auto& e : s.state.dg) gen += e.p_kw;
  BalancingRequirement req;
  req.origin = Origin::Islanding;
  const double net = total_forecast_load_kw(s) - gen;
  req.direction = net >= 0.0 ? Direction::Deficit : Direction::Excess;
  req.magnitude_kw = std::fabs(net);
  return plan_requirement(s, req, levels, n, seed);
}

std::vector<double> realized_availability(const Scenario& s) {
  std::vector<double> r;
  for (std::size_t i = 0; i < s.portfolio.dg.size(); ++i) {
    const DGUnit& u = s.portfolio.dg[i];
    r.push_back(is_stochastic(u.kind) ? s.state.dg[i].p_kw : u.rated_kw);
  }
  for (std::size_t i = 0; i < s.portfolio.storage.size(); ++i)
    r.push_back(storage_up_reserve(s.portfolio.storage[i], s.state.soc[i]));
  for (double now : s.state.load_now_kw) r.push_back(now);
  return r;
}

std::optional<RuleChoice> select_rule(const BalancingPlan& plan,
                                      const std::vector<double>& realized) {
  if (realized.size() != plan.attr_names.size())
    throw std::invalid_argument("select_rule: availability vector width mismatch");
  std::vector<int> order(plan.levels.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return plan.levels[a].top_pct < plan.levels[b].top_pct;
  });
  for (int li : order) {
    const LevelPlan& lv = plan.levels[li];
    for (std::size_t ri = 0; ri < lv.rules.size(); ++ri) {
      bool ok = true;
      for (const auto& pred : lv.rules[ri].predicates) {
        if (pred.geq && realized[pred.attr] < pred.threshold) {
          ok = false;
          break;
        }
      }
      if (ok) return RuleChoice{li, static_cast<int>(ri)};
    }
  }
  return std::nullopt;
}

double forecast_error_cost(const BalancingPlan& plan, int used_level_index) {
  if (used_level_index < 0 ||
      used_level_index >= static_cast<int>(plan.levels.size()))
    throw std::invalid_argument("forecast_error_cost: bad level index");
  const LevelPlan* tightest = nullptr;
  for (const auto& lv : plan.levels) {
    if (lv.rules.empty()) continue;
    if (!tightest || lv.top_pct < tightest->top_pct) tightest = &lv;
  }
  if (!tightest) return 0.0;
  return std::max(0.0,
                  tightest->threshold - plan.levels[used_level_index].threshold);
}

namespace {
std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}
}  // namespace

std::string format_plan(const BalancingPlan& plan) {
  std::ostringstream out;
  out << "balancing plan: " << direction_name(plan.req.direction) << " "
      << fmt("%.2f", plan.req.magnitude_kw) << " kW ("
      << origin_name(plan.req.origin) << ")\n";
  out << "scenario digest " << hex64(plan.scenario_digest) << " seed "
      << plan.seed << " samples " << plan.samples << " kept " << plan.diag.kept
      << " skipped " << plan.diag.skipped_allocation << "\n";
  out << "baseline schedule profit " << fmt("%.2f", plan.baseline_profit)
      << "\n";
  for (const auto& lv : plan.levels) {
    out << "level top " << fmt("%.0f", lv.top_pct * 100.0) << "%  threshold "
        << fmt("%.2f", lv.threshold) << "  rules " << lv.rules.size()
        << "  mr " << fmt("%.2f", lv.mr.mr * 100.0) << "%  mrr "
        << fmt("%.2f", lv.mr.mrr * 100.0) << "%\n";
    if (!lv.empty_reason.empty()) out << "  (" << lv.empty_reason << ")\n";
    int n = 0;
    for (const auto& r : lv.rules) {
      out << "  R" << ++n << " merit " << fmt("%.2f", r.mean_true_profit)
          << ": " << rule_text(r, plan.attr_names) << "\n";
    }
  }
  return out.str();
}

std::string plan_json(const BalancingPlan& plan) {
  nlohmann::json root;
  root["direction"] = direction_name(plan.req.direction);
  root["origin"] = origin_name(plan.req.origin);
  root["magnitude_kw"] = plan.req.magnitude_kw;
  root["scenario_digest"] = hex64(plan.scenario_digest);
  root["seed"] = plan.seed;
  root["samples"] = plan.samples;
  root["baseline_profit"] = plan.baseline_profit;
  root["diagnostics"] = {
      {"attempted", plan.diag.attempted},
      {"kept", plan.diag.kept},
      {"skipped_allocation", plan.diag.skipped_allocation},
      {"pf_not_converged", plan.diag.pf_not_converged},
      {"constraint_infeasible", plan.diag.constraint_infeasible},
      {"max_mismatch_kw", plan.diag.max_mismatch_kw}};
  nlohmann::json levels = nlohmann::json::array();
  for (const auto& lv : plan.levels) {
    nlohmann::json jl;
    jl["top_pct"] = lv.top_pct;
    jl["threshold"] = lv.threshold;
    jl["mr"] = lv.mr.mr;
    jl["mrr"] = lv.mr.mrr;
    if (!lv.empty_reason.empty()) jl["empty_reason"] = lv.empty_reason;
    nlohmann::json rules = nlohmann::json::array();
    for (const auto& r : lv.rules) {
      nlohmann::json jr;
      nlohmann::json preds = nlohmann::json::array();
      for (const auto& p : r.predicates)
        preds.push_back({{"attr", plan.attr_names[p.attr]},
                         {"op", p.geq ? ">=" : "<"},
                         {"value", p.threshold}});
      jr["predicates"] = preds;
      jr["purity"] = r.purity;
      jr["promoted"] = r.promoted;
      jr["true_count"] = r.true_count;
      jr["merit_mean_profit"] = r.mean_true_profit;
      jr["min_true_profit"] = r.min_true_profit;
      nlohmann::json implied;
      for (std::size_t a = 0; a < r.mean_true_attrs.size(); ++a)
        implied[plan.attr_names[a]] = r.mean_true_attrs[a];
      jr["implied_dispatch"] = implied;
      rules.push_back(std::move(jr));
    }
    jl["rules"] = rules;
    levels.push_back(std::move(jl));
  }
  root["levels"] = levels;
  return root.dump(2) + "\n";
}

}  // namespace pcmg
