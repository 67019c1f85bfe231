// Python bindings: thin wrappers over the toolkit's main operations -
// scenario inspection, the learning-set math, and the two planners.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <utility>
#include <vector>

#include "pcmg/balancer.hpp"
#include "pcmg/dtree.hpp"
#include "pcmg/lsgen.hpp"
#include "pcmg/planner.hpp"
#include "pcmg/scenario.hpp"
#include "pcmg/util.hpp"

namespace py = pybind11;
using namespace pcmg;

namespace {

py::dict plan_summary(const BalancingPlan& plan) {
  py::dict d;
  d["direction"] = direction_name(plan.req.direction);
  d["origin"] = origin_name(plan.req.origin);
  d["magnitude_kw"] = plan.req.magnitude_kw;
  d["scenario_digest"] = hex64(plan.scenario_digest);
  d["seed"] = plan.seed;
  d["samples"] = plan.samples;
  d["baseline_profit"] = plan.baseline_profit;
  d["kept"] = plan.diag.kept;
  py::list levels;
  for (const LevelPlan& lvl : plan.levels) {
    py::dict L;
    L["top_pct"] = lvl.top_pct;
    L["threshold"] = lvl.threshold;
    L["mr"] = lvl.mr.mr;
    L["mrr"] = lvl.mr.mrr;
    py::list rules;
    for (const Rule& r : lvl.rules) rules.append(rule_text(r, plan.attr_names));
    L["rules"] = rules;
    if (!lvl.empty_reason.empty()) L["empty_reason"] = lvl.empty_reason;
    levels.append(std::move(L));
  }
  d["levels"] = levels;
  return d;
}

py::dict table_summary(const PlanningTable& t) {
  py::dict d;
  d["scenario_digest"] = hex64(t.scenario_digest);
  d["seed"] = t.seed;
  d["samples_per_bin"] = t.samples_per_bin;
  d["combined_instances"] = t.combined_instances;
  py::list options;
  for (const OptionAppraisal& oa : t.options) {
    py::dict o;
    o["capacity_kwh"] = oa.option.capacity_kwh;
    o["preferred_soc"] = oa.option.preferred_soc;
    o["suitable"] = oa.suitable;
    o["deficit_cost"] = oa.deficit_cost;
    o["excess_cost"] = oa.excess_cost;
    o["total_cost"] = oa.total_cost;
    options.append(std::move(o));
  }
  d["options"] = options;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Battery-storage sizing and hour-ahead/islanding balancing rules "
            "for a planned-community microgrid";

  m.def("entropy", &entropy, py::arg("n_true"), py::arg("n_total"),
        "Shannon entropy of a boolean class split, bits.");
  m.def("info_gain", &info_gain, py::arg("parent_true"), py::arg("parent_total"),
        py::arg("left_true"), py::arg("left_total"), py::arg("right_true"),
        py::arg("right_total"),
        "Normalized average mutual information gain of a candidate split.");
  m.def("chi2_critical", &chi2_critical, py::arg("alpha"),
        "Chi-square critical value at 1 degree of freedom.");
  m.def(
      "cost_threshold",
      [](std::vector<double> profits, double top_pct) {
        return cost_threshold(std::move(profits), top_pct);
      },
      py::arg("profits"), py::arg("top_pct"),
      "Profit cutoff separating the most profitable top_pct fraction.");

  m.def(
      "scenario_digest",
      [](const std::string& path) {
        return scenario_digest_hex(load_scenario(path));
      },
      py::arg("path"), "16-hex-char digest of the scenario's canonical text.");
  m.def(
      "scenario_summary",
      [](const std::string& path) {
        const Scenario s = load_scenario(path);
        py::dict d;
        d["name"] = s.name;
        d["digest"] = scenario_digest_hex(s);
        d["buses"] = s.network.buses.size();
        d["branches"] = s.network.branches.size();
        d["generators"] = s.portfolio.dg.size();
        d["storage_banks"] = s.portfolio.storage.size();
        d["load_groups"] = s.portfolio.loads.size();
        d["nominal_total_load_kw"] = s.nominal_total_load_kw;
        d["forecast_load_kw"] = total_forecast_load_kw(s);
        d["max_deficit_kw"] = max_deficit(s);
        d["max_excess_kw"] = max_excess(s);
        d["schedule_profit"] = schedule_profit(s);
        return d;
      },
      py::arg("path"), "Key figures of a scenario file.");

  m.def(
      "plan_islanding",
      [](const std::string& path, const std::vector<double>& levels, int n,
         std::uint64_t seed) {
        return plan_summary(plan_islanding(load_scenario(path), levels, n, seed));
      },
      py::arg("path"), py::arg("levels"), py::arg("samples"), py::arg("seed"),
      "Dispatch-rule plan for an islanding transition; levels are fractions "
      "(e.g. [0.35, 0.10]), loosest first.");

  m.def(
      "plan_storage",
      [](const std::string& path, std::uint64_t seed, int samples_per_bin) {
        return table_summary(plan_storage(load_scenario(path), seed,
                                          samples_per_bin));
      },
      py::arg("path"), py::arg("seed"), py::arg("samples_per_bin") = 1000,
      "Appraise the scenario's storage capacity/SOC grid against a synthetic "
      "year of deviation events.");
}
