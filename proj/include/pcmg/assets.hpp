#pragma once
#include <string>
#include <vector>

namespace pcmg {

enum class DGKind { CHP, PV, BIPV, WG };

inline bool is_stochastic(DGKind k) { return k != DGKind::CHP; }
const char* dg_kind_name(DGKind k);
DGKind dg_kind_from(const std::string& name);

struct DGUnit {
  std::string id;
  int bus = 0;
  DGKind kind = DGKind::CHP;
  double rated_kw = 0.0;
  double min_kw = 0.0;      // technical minimum while committed (dispatchable)
  double cost_a = 0.0;      // running cost a*x^2 + b*x + c [£/h], x = p + r
  double cost_b = 0.0;      // may be negative for subsidised renewables
  double cost_c = 0.0;
  double startup_cost = 0.0;
  double reserve_cap_kw = 0.0;
  bool deloadable = true;   // may be driven below schedule in excess events
};

struct BatteryBank {
  std::string id;
  int bus = 0;
  double capacity_kwh = 0.0;
  double converter_kw = 0.0;
  double min_soc = 0.2;
  double preferred_soc = 0.9;
  double charge_cost = 0.0;     // £/kWh moved
  double discharge_cost = 0.0;
  double overload_factor = 1.2; // converter capability for events <= 1h
  double efficiency = 1.0;      // charge-side
};

struct LoadGroup {
  std::string id;
  int bus = 0;
  std::string klass;  // domestic | chiller | landlord | ev | community
  double rated_kva = 0.0;
  double price = 0.0;              // retail £/kWh
  bool curtailable = false;
  double curtailment_cost = 0.0;   // £/kWh, defined iff curtailable
  double power_factor = 0.95;      // lagging
};

struct CostModel {
  double energy_price = 0.0;   // interconnection £/kWh
  double reserve_price = 0.0;  // £/kW·h of standing reserve
};

struct AssetPortfolio {
  std::vector<DGUnit> dg;
  std::vector<BatteryBank> storage;
  std::vector<LoadGroup> loads;
  CostModel costs;
};

struct DGSetpoint {
  double p_kw = 0.0;
  double r_kw = 0.0;
  bool committed = false;
  bool started = false;  // state changed this hour -> start/stop cost applies
};

// One-hour operating point. Storage positive = discharge. market_kwh is the
// interconnection exchange E (positive = import, negative = export).
struct Dispatch {
  std::vector<DGSetpoint> dg;        // portfolio order
  std::vector<double> storage_kw;
  std::vector<double> served_kw;     // per load group
  std::vector<double> curtailed_kw;  // per load group, deliberate curtailment
  double market_kwh = 0.0;
  double reserve_kw = 0.0;
};

double dg_cost(const DGUnit& u, double output_kw);

// Hourly operating profit [£]:
//   -rho_E*E + rho_R*R + sum_g rho_L(g)*served_g
//   - sum_dg [cost(p+r)*I + SC*J] - sum_g c_int(g)*curtailed_g
//   - sum_b c_str(direction)*|p_b|
// Throws if the dispatch shape does not match the portfolio.
double dispatch_profit(const AssetPortfolio& pf, const Dispatch& d);

// Screens one DG setpoint. Dispatchable units: committed => min <= p and
// p + r <= rated with r >= 0; uncommitted => p = r = 0. Stochastic units:
// p <= realized availability, no reserve offer.
bool dg_marginal_feasible(const DGUnit& u, const DGSetpoint& sp,
                          double availability_kw);

// Converter limit (overload-rated for events <= 1h) plus SOC window after
// duration_h at p_kw.
bool storage_feasible(const BatteryBank& b, double p_kw, double soc,
                      double duration_h);

double soc_after(const BatteryBank& b, double soc, double p_kw,
                 double duration_h);

// Reserve the bank can stand for one hour from the given SOC.
double storage_up_reserve(const BatteryBank& b, double soc);
double storage_down_reserve(const BatteryBank& b, double soc);

// forecast*(1+dev) clamped into [0, rated]
double apply_deviation(double forecast_kw, double deviation_fraction,
                       double rated_kw);

}  // namespace pcmg
