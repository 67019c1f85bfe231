#include "pcmg/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "nlohmann/json.hpp"
#include "pcmg/util.hpp"

namespace pcmg {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw std::runtime_error("scenario: " + path + ": " + what);
}

const json& member(const json& o, const char* key, const std::string& path) {
  if (!o.is_object()) fail(path, "expected an object");
  auto it = o.find(key);
  if (it == o.end()) fail(path + "." + key, "missing required field");
  return *it;
}

double get_num(const json& o, const char* key, const std::string& path) {
  const json& v = member(o, key, path);
  if (!v.is_number()) fail(path + "." + key, "expected a number");
  return v.get<double>();
}

double opt_num(const json& o, const char* key, const std::string& path,
               double dflt) {
  auto it = o.find(key);
  if (it == o.end()) return dflt;
  if (!it->is_number()) fail(path + "." + key, "expected a number");
  return it->get<double>();
}

int get_int(const json& o, const char* key, const std::string& path) {
  const json& v = member(o, key, path);
  if (!v.is_number_integer()) fail(path + "." + key, "expected an integer");
  return v.get<int>();
}

int opt_int(const json& o, const char* key, const std::string& path, int dflt) {
  auto it = o.find(key);
  if (it == o.end()) return dflt;
  if (!it->is_number_integer()) fail(path + "." + key, "expected an integer");
  return it->get<int>();
}

bool opt_bool(const json& o, const char* key, const std::string& path,
              bool dflt) {
  auto it = o.find(key);
  if (it == o.end()) return dflt;
  if (!it->is_boolean()) fail(path + "." + key, "expected a boolean");
  return it->get<bool>();
}

std::string get_str(const json& o, const char* key, const std::string& path) {
  const json& v = member(o, key, path);
  if (!v.is_string()) fail(path + "." + key, "expected a string");
  return v.get<std::string>();
}

const json& get_arr(const json& o, const char* key, const std::string& path) {
  const json& v = member(o, key, path);
  if (!v.is_array()) fail(path + "." + key, "expected an array");
  return v;
}

const json& get_obj(const json& o, const char* key, const std::string& path) {
  const json& v = member(o, key, path);
  if (!v.is_object()) fail(path + "." + key, "expected an object");
  return v;
}

void check_keys(const json& o, const std::set<std::string>& allowed,
                const std::string& path) {
  for (auto it = o.begin(); it != o.end(); ++it) {
    if (!allowed.count(it.key())) fail(path + "." + it.key(), "unknown field");
  }
}

std::vector<double> num_list(const json& a, const std::string& path) {
  std::vector<double> out;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a[i].is_number())
      fail(path + "[" + std::to_string(i) + "]", "expected a number");
    out.push_back(a[i].get<double>());
  }
  return out;
}

void require_ascending_positive(const std::vector<double>& v,
                                const std::string& path) {
  if (v.empty()) fail(path, "must not be empty");
  double prev = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] <= prev)
      fail(path + "[" + std::to_string(i) + "]",
           "entries must be positive and strictly ascending");
    prev = v[i];
  }
}

Scenario from_json(const json& root) {
  Scenario s;
  if (!root.is_object()) fail("$", "document must be a JSON object");
  check_keys(root,
             {"meta", "network", "costs", "dg_units", "storage", "load_groups",
              "deviations", "planner"},
             "$");

  // --- meta ---
  const json& meta = get_obj(root, "meta", "$");
  check_keys(meta, {"name", "nominal_total_load_kw", "hour"}, "$.meta");
  s.name = get_str(meta, "name", "$.meta");
  if (s.name.empty()) fail("$.meta.name", "must not be empty");
  s.nominal_total_load_kw = get_num(meta, "nominal_total_load_kw", "$.meta");
  if (s.nominal_total_load_kw <= 0.0)
    fail("$.meta.nominal_total_load_kw", "must be positive");
  s.state.hour = get_int(meta, "hour", "$.meta");
  if (s.state.hour < 0 || s.state.hour > 23)
    fail("$.meta.hour", "must be in 0..23");

  // --- network ---
  const json& net = get_obj(root, "network", "$");
  check_keys(net,
             {"buses", "branches", "slack_bus", "s_base_kva", "v_lower_pu",
              "v_upper_pu"},
             "$.network");
  const json& buses = get_arr(net, "buses", "$.network");
  for (std::size_t i = 0; i < buses.size(); ++i) {
    const std::string p = "$.network.buses[" + std::to_string(i) + "]";
    check_keys(buses[i], {"id", "nominal_kv"}, p);
    Bus b;
    b.id = get_int(buses[i], "id", p);
    b.nominal_kv = get_num(buses[i], "nominal_kv", p);
    if (b.nominal_kv <= 0.0) fail(p + ".nominal_kv", "must be positive");
    s.network.buses.push_back(b);
  }
  const json& branches = get_arr(net, "branches", "$.network");
  for (std::size_t i = 0; i < branches.size(); ++i) {
    const std::string p = "$.network.branches[" + std::to_string(i) + "]";
    check_keys(branches[i],
               {"from", "to", "r_ohm", "x_ohm", "rating_kva", "overload_factor",
                "overload_hours"},
               p);
    Branch br;
    br.from = get_int(branches[i], "from", p);
    br.to = get_int(branches[i], "to", p);
    br.r_ohm = get_num(branches[i], "r_ohm", p);
    br.x_ohm = get_num(branches[i], "x_ohm", p);
    br.rating_kva = get_num(branches[i], "rating_kva", p);
    if (br.rating_kva <= 0.0) fail(p + ".rating_kva", "must be positive");
    br.overload_factor = opt_num(branches[i], "overload_factor", p, 1.0);
    if (br.overload_factor < 1.0)
      fail(p + ".overload_factor", "must be >= 1");
    br.overload_hours = opt_num(branches[i], "overload_hours", p, 0.0);
    if (br.overload_hours < 0.0) fail(p + ".overload_hours", "must be >= 0");
    s.network.branches.push_back(br);
  }
  s.network.slack_bus = get_int(net, "slack_bus", "$.network");
  s.network.s_base_kva = opt_num(net, "s_base_kva", "$.network", 1000.0);
  if (s.network.s_base_kva <= 0.0)
    fail("$.network.s_base_kva", "must be positive");
  s.network.v_lower_pu = opt_num(net, "v_lower_pu", "$.network", 0.90);
  s.network.v_upper_pu = opt_num(net, "v_upper_pu", "$.network", 1.10);
  if (s.network.v_lower_pu <= 0.0 ||
      s.network.v_lower_pu >= s.network.v_upper_pu)
    fail("$.network.v_lower_pu", "voltage band is empty or inverted");
  try {
    build_admittance(s.network);  // validates topology
  } catch (const std::exception& e) {
    fail("$.network", e.what());
  }
  auto bus_exists = [&](int id) {
    for (const auto& b : s.network.buses)
      if (b.id == id) return true;
    return false;
  };

  // --- costs ---
  const json& costs = get_obj(root, "costs", "$");
  check_keys(costs, {"energy_price", "reserve_price"}, "$.costs");
  s.portfolio.costs.energy_price = get_num(costs, "energy_price", "$.costs");
  s.portfolio.costs.reserve_price = get_num(costs, "reserve_price", "$.costs");
  if (s.portfolio.costs.energy_price < 0.0)
    fail("$.costs.energy_price", "must be >= 0");
  if (s.portfolio.costs.reserve_price < 0.0)
    fail("$.costs.reserve_price", "must be >= 0");

  // --- dg_units (with their hourly schedule) ---
  const json& dgs = get_arr(root, "dg_units", "$");
  std::set<std::string> dg_ids;
  for (std::size_t i = 0; i < dgs.size(); ++i) {
    const std::string p = "$.dg_units[" + std::to_string(i) + "]";
    check_keys(dgs[i],
               {"id", "bus", "kind", "rated_kw", "min_kw", "cost_a", "cost_b",
                "cost_c", "startup_cost", "reserve_cap_kw", "deloadable",
                "p_kw", "r_kw", "committed"},
               p);
    DGUnit u;
    u.id = get_str(dgs[i], "id", p);
    if (!dg_ids.insert(u.id).second) fail(p + ".id", "duplicate unit id");
    u.bus = get_int(dgs[i], "bus", p);
    if (!bus_exists(u.bus)) fail(p + ".bus", "references an unknown bus");
    const std::string kind = get_str(dgs[i], "kind", p);
    try {
      u.kind = dg_kind_from(kind);
    } catch (const std::exception& e) {
      fail(p + ".kind", e.what());
    }
    u.rated_kw = get_num(dgs[i], "rated_kw", p);
    if (u.rated_kw <= 0.0) fail(p + ".rated_kw", "must be positive");
    u.min_kw = opt_num(dgs[i], "min_kw", p, 0.0);
    if (u.min_kw < 0.0 || u.min_kw > u.rated_kw)
      fail(p + ".min_kw", "must be in [0, rated_kw]");
    u.cost_a = get_num(dgs[i], "cost_a", p);
    u.cost_b = get_num(dgs[i], "cost_b", p);  // may be negative (subsidy)
    u.cost_c = get_num(dgs[i], "cost_c", p);
    u.startup_cost = opt_num(dgs[i], "startup_cost", p, 0.0);
    u.reserve_cap_kw = opt_num(dgs[i], "reserve_cap_kw", p, 0.0);
    if (u.reserve_cap_kw < 0.0) fail(p + ".reserve_cap_kw", "must be >= 0");
    u.deloadable = opt_bool(dgs[i], "deloadable", p, is_stochastic(u.kind));
    ScheduleEntry e;
    e.p_kw = get_num(dgs[i], "p_kw", p);
    e.r_kw = opt_num(dgs[i], "r_kw", p, 0.0);
    e.committed = opt_bool(dgs[i], "committed", p, e.p_kw > 0.0);
    if (e.p_kw < 0.0 || e.p_kw > u.rated_kw)
      fail(p + ".p_kw", "must be in [0, rated_kw]");
    if (e.r_kw < 0.0 || e.p_kw + e.r_kw > u.rated_kw + 1e-9)
      fail(p + ".r_kw", "p_kw + r_kw must not exceed rated_kw");
    if (!is_stochastic(u.kind) && e.committed && e.p_kw < u.min_kw)
      fail(p + ".p_kw", "committed unit scheduled below its technical minimum");
    s.portfolio.dg.push_back(u);
    s.state.dg.push_back(e);
  }

  // --- storage ---
  const json& banks = get_arr(root, "storage", "$");
  std::set<std::string> bank_ids;
  for (std::size_t i = 0; i < banks.size(); ++i) {
    const std::string p = "$.storage[" + std::to_string(i) + "]";
    check_keys(banks[i],
               {"id", "bus", "capacity_kwh", "converter_kw", "min_soc",
                "preferred_soc", "charge_cost", "discharge_cost",
                "overload_factor", "efficiency", "soc"},
               p);
    BatteryBank b;
    b.id = get_str(banks[i], "id", p);
    if (!bank_ids.insert(b.id).second) fail(p + ".id", "duplicate bank id");
    b.bus = get_int(banks[i], "bus", p);
    if (!bus_exists(b.bus)) fail(p + ".bus", "references an unknown bus");
    b.capacity_kwh = get_num(banks[i], "capacity_kwh", p);
    if (b.capacity_kwh <= 0.0) fail(p + ".capacity_kwh", "must be positive");
    b.converter_kw = get_num(banks[i], "converter_kw", p);
    if (b.converter_kw <= 0.0) fail(p + ".converter_kw", "must be positive");
    b.min_soc = opt_num(banks[i], "min_soc", p, 0.2);
    b.preferred_soc = opt_num(banks[i], "preferred_soc", p, 0.9);
    if (b.min_soc < 0.0 || b.min_soc >= 1.0)
      fail(p + ".min_soc", "must be in [0, 1)");
    if (b.preferred_soc <= b.min_soc || b.preferred_soc > 1.0)
      fail(p + ".preferred_soc", "must be in (min_soc, 1]");
    b.charge_cost = get_num(banks[i], "charge_cost", p);
    b.discharge_cost = get_num(banks[i], "discharge_cost", p);
    if (b.charge_cost < 0.0 || b.discharge_cost < 0.0)
      fail(p + ".charge_cost", "storage usage costs must be >= 0");
    b.overload_factor = opt_num(banks[i], "overload_factor", p, 1.2);
    if (b.overload_factor < 1.0) fail(p + ".overload_factor", "must be >= 1");
    b.efficiency = opt_num(banks[i], "efficiency", p, 1.0);
    if (b.efficiency <= 0.0 || b.efficiency > 1.0)
      fail(p + ".efficiency", "must be in (0, 1]");
    const double soc = get_num(banks[i], "soc", p);
    if (soc < b.min_soc - 1e-12 || soc > 1.0)
      fail(p + ".soc", "must be in [min_soc, 1]");
    s.portfolio.storage.push_back(b);
    s.state.soc.push_back(soc);
  }

  // --- load groups ---
  const json& groups = get_arr(root, "load_groups", "$");
  if (groups.empty()) fail("$.load_groups", "must not be empty");
  std::set<std::string> group_ids;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const std::string p = "$.load_groups[" + std::to_string(i) + "]";
    check_keys(groups[i],
               {"id", "bus", "class", "rated_kva", "price", "curtailable",
                "curtailment_cost", "power_factor", "load_now_kw",
                "load_forecast_kw"},
               p);
    LoadGroup g;
    g.id = get_str(groups[i], "id", p);
    if (!group_ids.insert(g.id).second) fail(p + ".id", "duplicate group id");
    g.bus = get_int(groups[i], "bus", p);
    if (!bus_exists(g.bus)) fail(p + ".bus", "references an unknown bus");
    g.klass = get_str(groups[i], "class", p);
    static const std::set<std::string> classes = {"domestic", "landlord",
                                                  "chiller", "ev", "community"};
    if (!classes.count(g.klass))
      fail(p + ".class",
           "must be one of domestic, landlord, chiller, ev, community");
    g.rated_kva = get_num(groups[i], "rated_kva", p);
    if (g.rated_kva <= 0.0) fail(p + ".rated_kva", "must be positive");
    g.price = get_num(groups[i], "price", p);
    if (g.price < 0.0) fail(p + ".price", "must be >= 0");
    g.curtailable = opt_bool(groups[i], "curtailable", p, true);
    g.curtailment_cost = get_num(groups[i], "curtailment_cost", p);
    if (g.curtailment_cost < 0.0)
      fail(p + ".curtailment_cost", "must be >= 0");
    g.power_factor = opt_num(groups[i], "power_factor", p, 0.95);
    if (g.power_factor <= 0.0 || g.power_factor > 1.0)
      fail(p + ".power_factor", "must be in (0, 1]");
    const double now = get_num(groups[i], "load_now_kw", p);
    const double fc = get_num(groups[i], "load_forecast_kw", p);
    if (now < 0.0) fail(p + ".load_now_kw", "must be >= 0");
    if (fc < 0.0) fail(p + ".load_forecast_kw", "must be >= 0");
    if (now > g.rated_kva || fc > g.rated_kva)
      fail(p + ".rated_kva", "load exceeds the group's rated apparent power");
    s.portfolio.loads.push_back(g);
    s.state.load_now_kw.push_back(now);
    s.state.load_forecast_kw.push_back(fc);
  }

  // learning-set attribute names reuse asset ids, so ids must be unique
  // across generators, storage banks and load groups
  std::set<std::string> all_ids(dg_ids.begin(), dg_ids.end());
  for (const auto& b : s.portfolio.storage)
    if (!all_ids.insert(b.id).second)
      fail("$.storage", "id '" + b.id + "' collides with another asset id");
  for (const auto& g : s.portfolio.loads)
    if (!all_ids.insert(g.id).second)
      fail("$.load_groups", "id '" + g.id + "' collides with another asset id");

  // --- deviations ---
  if (root.contains("deviations")) {
    const json& d = root["deviations"];
    const std::string p = "$.deviations";
    check_keys(d,
               {"load_up", "load_down", "wind_up", "wind_down", "pv_down",
                "wind_extreme", "pv_extreme", "use_extremes", "sigma_load",
                "sigma_pv", "sigma_wind", "annual_events_per_source",
                "combined_instances", "deadband_fraction"},
               p);
    DeviationModel& m = s.deviations;
    m.load_up = opt_num(d, "load_up", p, m.load_up);
    m.load_down = opt_num(d, "load_down", p, m.load_down);
    m.wind_up = opt_num(d, "wind_up", p, m.wind_up);
    m.wind_down = opt_num(d, "wind_down", p, m.wind_down);
    m.pv_down = opt_num(d, "pv_down", p, m.pv_down);
    m.wind_extreme = opt_num(d, "wind_extreme", p, m.wind_extreme);
    m.pv_extreme = opt_num(d, "pv_extreme", p, m.pv_extreme);
    m.use_extremes = opt_bool(d, "use_extremes", p, m.use_extremes);
    m.sigma_load = opt_num(d, "sigma_load", p, m.sigma_load);
    m.sigma_pv = opt_num(d, "sigma_pv", p, m.sigma_pv);
    m.sigma_wind = opt_num(d, "sigma_wind", p, m.sigma_wind);
    m.annual_events_per_source =
        opt_int(d, "annual_events_per_source", p, m.annual_events_per_source);
    m.combined_instances =
        opt_int(d, "combined_instances", p, m.combined_instances);
    m.deadband_fraction = opt_num(d, "deadband_fraction", p, m.deadband_fraction);
    for (double f : {m.load_up, m.load_down, m.wind_up, m.wind_down, m.pv_down})
      if (f <= 0.0 || f >= 1.0) fail(p, "envelope fractions must be in (0, 1)");
    for (double f : {m.sigma_load, m.sigma_pv, m.sigma_wind})
      if (f <= 0.0) fail(p, "sigmas must be positive");
    if (2.0 * m.sigma_load >= std::min(m.load_up, m.load_down))
      fail(p + ".sigma_load",
           "load envelope leaves no band beyond two sigmas");
    if (2.0 * m.sigma_wind >= std::min(m.wind_up, m.wind_down))
      fail(p + ".sigma_wind",
           "wind envelope leaves no band beyond two sigmas");
    if (2.0 * m.sigma_pv >= m.pv_down)
      fail(p + ".sigma_pv", "PV envelope leaves no band beyond two sigmas");
    if (m.annual_events_per_source <= 0)
      fail(p + ".annual_events_per_source", "must be positive");
    if (m.combined_instances <= 0)
      fail(p + ".combined_instances", "must be positive");
    if (m.deadband_fraction <= 0.0 || m.deadband_fraction >= 1.0)
      fail(p + ".deadband_fraction", "must be in (0, 1)");
  }

  // --- planner ---
  const json& pl = get_obj(root, "planner", "$");
  check_keys(pl,
             {"capacities_kwh", "preferred_socs", "deficit_bins_kw",
              "excess_bins_kw", "profile_peak_kw", "pv_event_floor_kw"},
             "$.planner");
  s.planner.capacities_kwh =
      num_list(get_arr(pl, "capacities_kwh", "$.planner"),
               "$.planner.capacities_kwh");
  require_ascending_positive(s.planner.capacities_kwh,
                             "$.planner.capacities_kwh");
  s.planner.preferred_socs = num_list(
      get_arr(pl, "preferred_socs", "$.planner"), "$.planner.preferred_socs");
  if (s.planner.preferred_socs.empty())
    fail("$.planner.preferred_socs", "must not be empty");
  for (std::size_t i = 0; i < s.planner.preferred_socs.size(); ++i)
    if (s.planner.preferred_socs[i] <= 0.0 || s.planner.preferred_socs[i] > 1.0)
      fail("$.planner.preferred_socs[" + std::to_string(i) + "]",
           "must be in (0, 1]");
  s.planner.deficit_bins_kw =
      num_list(get_arr(pl, "deficit_bins_kw", "$.planner"),
               "$.planner.deficit_bins_kw");
  require_ascending_positive(s.planner.deficit_bins_kw,
                             "$.planner.deficit_bins_kw");
  s.planner.excess_bins_kw = num_list(get_arr(pl, "excess_bins_kw", "$.planner"),
                                      "$.planner.excess_bins_kw");
  require_ascending_positive(s.planner.excess_bins_kw,
                             "$.planner.excess_bins_kw");
  s.planner.profile_peak_kw =
      opt_num(pl, "profile_peak_kw", "$.planner", s.planner.profile_peak_kw);
  if (s.planner.profile_peak_kw <= 0.0)
    fail("$.planner.profile_peak_kw", "must be positive");
  s.planner.pv_event_floor_kw = opt_num(pl, "pv_event_floor_kw", "$.planner",
                                        s.planner.pv_event_floor_kw);
  if (s.planner.pv_event_floor_kw <= 0.0)
    fail("$.planner.pv_event_floor_kw", "must be positive");

  if (s.portfolio.dg.empty()) fail("$.dg_units", "must not be empty");
  return s;
}

json to_json(const Scenario& s) {
  json root;
  root["meta"] = {{"name", s.name},
                  {"nominal_total_load_kw", s.nominal_total_load_kw},
                  {"hour", s.state.hour}};

  json buses = json::array();
  for (const auto& b : s.network.buses)
    buses.push_back({{"id", b.id}, {"nominal_kv", b.nominal_kv}});
  json branches = json::array();
  for (const auto& br : s.network.branches)
    branches.push_back({{"from", br.from},
                        {"to", br.to},
                        {"r_ohm", br.r_ohm},
                        {"x_ohm", br.x_ohm},
                        {"rating_kva", br.rating_kva},
                        {"overload_factor", br.overload_factor},
                        {"overload_hours", br.overload_hours}});
  root["network"] = {{"buses", buses},
                     {"branches", branches},
                     {"slack_bus", s.network.slack_bus},
                     {"s_base_kva", s.network.s_base_kva},
                     {"v_lower_pu", s.network.v_lower_pu},
                     {"v_upper_pu", s.network.v_upper_pu}};

  root["costs"] = {{"energy_price", s.portfolio.costs.energy_price},
                   {"reserve_price", s.portfolio.costs.reserve_price}};

  json dgs = json::array();
  for (std::size_t i = 0; i < s.portfolio.dg.size(); ++i) {
    const DGUnit& u = s.portfolio.dg[i];
    const ScheduleEntry& e = s.state.dg[i];
    dgs.push_back({{"id", u.id},
                   {"bus", u.bus},
                   {"kind", dg_kind_name(u.kind)},
                   {"rated_kw", u.rated_kw},
                   {"min_kw", u.min_kw},
                   {"cost_a", u.cost_a},
                   {"cost_b", u.cost_b},
                   {"cost_c", u.cost_c},
                   {"startup_cost", u.startup_cost},
                   {"reserve_cap_kw", u.reserve_cap_kw},
                   {"deloadable", u.deloadable},
                   {"p_kw", e.p_kw},
                   {"r_kw", e.r_kw},
                   {"committed", e.committed}});
  }
  root["dg_units"] = dgs;

  json banks = json::array();
  for (std::size_t i = 0; i < s.portfolio.storage.size(); ++i) {
    const BatteryBank& b = s.portfolio.storage[i];
    banks.push_back({{"id", b.id},
                     {"bus", b.bus},
                     {"capacity_kwh", b.capacity_kwh},
                     {"converter_kw", b.converter_kw},
                     {"min_soc", b.min_soc},
                     {"preferred_soc", b.preferred_soc},
                     {"charge_cost", b.charge_cost},
                     {"discharge_cost", b.discharge_cost},
                     {"overload_factor", b.overload_factor},
                     {"efficiency", b.efficiency},
                     {"soc", s.state.soc[i]}});
  }
  root["storage"] = banks;

  json groups = json::array();
  for (std::size_t i = 0; i < s.portfolio.loads.size(); ++i) {
    const LoadGroup& g = s.portfolio.loads[i];
    groups.push_back({{"id", g.id},
                      {"bus", g.bus},
                      {"class", g.klass},
                      {"rated_kva", g.rated_kva},
                      {"price", g.price},
                      {"curtailable", g.curtailable},
                      {"curtailment_cost", g.curtailment_cost},
                      {"power_factor", g.power_factor},
                      {"load_now_kw", s.state.load_now_kw[i]},
                      {"load_forecast_kw", s.state.load_forecast_kw[i]}});
  }
  root["load_groups"] = groups;

  const DeviationModel& m = s.deviations;
  root["deviations"] = {{"load_up", m.load_up},
                        {"load_down", m.load_down},
                        {"wind_up", m.wind_up},
                        {"wind_down", m.wind_down},
                        {"pv_down", m.pv_down},
                        {"wind_extreme", m.wind_extreme},
                        {"pv_extreme", m.pv_extreme},
                        {"use_extremes", m.use_extremes},
                        {"sigma_load", m.sigma_load},
                        {"sigma_pv", m.sigma_pv},
                        {"sigma_wind", m.sigma_wind},
                        {"annual_events_per_source", m.annual_events_per_source},
                        {"combined_instances", m.combined_instances},
                        {"deadband_fraction", m.deadband_fraction}};

  root["planner"] = {{"capacities_kwh", s.planner.capacities_kwh},
                     {"preferred_socs", s.planner.preferred_socs},
                     {"deficit_bins_kw", s.planner.deficit_bins_kw},
                     {"excess_bins_kw", s.planner.excess_bins_kw},
                     {"profile_peak_kw", s.planner.profile_peak_kw},
                     {"pv_event_floor_kw", s.planner.pv_event_floor_kw}};
  return root;
}

}  // namespace

Scenario parse_scenario(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(std::string("scenario: invalid JSON: ") + e.what());
  }
  return from_json(root);
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("scenario: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

std::string canonical_text(const Scenario& s) {
  // nlohmann objects keep keys sorted, so dump() is canonical by construction;
  // numbers serialize as shortest round-trip decimals.
  return to_json(s).dump(2) + "\n";
}

std::uint64_t scenario_digest(const Scenario& s) {
  return fnv1a64(canonical_text(s));
}

std::string scenario_digest_hex(const Scenario& s) {
  return hex64(scenario_digest(s));
}

std::vector<std::complex<double>> bus_injections(const Scenario& s,
                                                 const Dispatch& d) {
  const auto& pf = s.portfolio;
  if (d.dg.size() != pf.dg.size() || d.storage_kw.size() != pf.storage.size() ||
      d.served_kw.size() != pf.loads.size())
    throw std::invalid_argument("bus_injections: dispatch does not match portfolio");
  std::vector<std::complex<double>> inj(s.network.buses.size(), {0.0, 0.0});
  for (std::size_t i = 0; i < pf.dg.size(); ++i)
    inj[s.network.index_of(pf.dg[i].bus)] += std::complex<double>(d.dg[i].p_kw, 0.0);
  for (std::size_t i = 0; i < pf.storage.size(); ++i)
    inj[s.network.index_of(pf.storage[i].bus)] +=
        std::complex<double>(d.storage_kw[i], 0.0);
  for (std::size_t i = 0; i < pf.loads.size(); ++i) {
    const double p = d.served_kw[i];
    const double phi = std::acos(pf.loads[i].power_factor);
    inj[s.network.index_of(pf.loads[i].bus)] -=
        std::complex<double>(p, p * std::tan(phi));
  }
  return inj;
}

double total_forecast_load_kw(const Scenario& s) {
  double t = 0.0;
  for (double v : s.state.load_forecast_kw) t += v;
  return t;
}

double total_present_load_kw(const Scenario& s) {
  double t = 0.0;
  for (double v : s.state.load_now_kw) t += v;
  return t;
}

}  // namespace pcmg
