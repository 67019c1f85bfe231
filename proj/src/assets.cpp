#include "pcmg/assets.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pcmg {

const char* dg_kind_name(DGKind k) {
  switch (k) {
    case DGKind::CHP: return "chp";
    case DGKind::PV: return "pv";
    case DGKind::BIPV: return "bipv";
    case DGKind::WG: return "wg";
  }
  return "?";
}

DGKind dg_kind_from(const std::string& name) {
  if (name == "chp") return DGKind::CHP;
  if (name == "pv") return DGKind::PV;
  if (name == "bipv") return DGKind::BIPV;
  if (name == "wg") return DGKind::WG;
  throw std::invalid_argument("unknown DG kind: " + name);
}

double dg_cost(const DGUnit& u, double output_kw) {
  return u.cost_a * output_kw * output_kw + u.cost_b * output_kw + u.cost_c;
}

double dispatch_profit(const AssetPortfolio& pf, const Dispatch& d) {
  if (d.dg.size() != pf.dg.size() || d.storage_kw.size() != pf.storage.size() ||
      d.served_kw.size() != pf.loads.size() ||
      d.curtailed_kw.size() != pf.loads.size())
    throw std::invalid_argument("dispatch shape does not match portfolio");

  double profit = -pf.costs.energy_price * d.market_kwh +
                  pf.costs.reserve_price * d.reserve_kw;
  for (size_t g = 0; g < pf.loads.size(); ++g) {
    profit += pf.loads[g].price * d.served_kw[g];
    if (d.curtailed_kw[g] != 0.0) {
      if (!pf.loads[g].curtailable)
        throw std::invalid_argument("curtailment on non-curtailable group " +
                                    pf.loads[g].id);
      profit -= pf.loads[g].curtailment_cost * d.curtailed_kw[g];
    }
  }
  for (size_t i = 0; i < pf.dg.size(); ++i) {
    const auto& sp = d.dg[i];
    if (sp.committed) profit -= dg_cost(pf.dg[i], sp.p_kw + sp.r_kw);
    if (sp.started) profit -= pf.dg[i].startup_cost;
  }
  for (size_t b = 0; b < pf.storage.size(); ++b) {
    const double p = d.storage_kw[b];
    profit -= (p >= 0.0 ? pf.storage[b].discharge_cost
                        : pf.storage[b].charge_cost) *
              std::fabs(p);
  }
  return profit;
}

bool dg_marginal_feasible(const DGUnit& u, const DGSetpoint& sp,
                          double availability_kw) {
  constexpr double eps = 1e-9;
  if (sp.p_kw < -eps || sp.r_kw < -eps) return false;
  if (is_stochastic(u.kind)) {
    if (sp.r_kw > eps) return false;
    return sp.p_kw <= std::min(availability_kw, u.rated_kw) + eps;
  }
  if (!sp.committed) return sp.p_kw <= eps && sp.r_kw <= eps;
  if (sp.p_kw + eps < u.min_kw) return false;
  return sp.p_kw + sp.r_kw <= u.rated_kw + eps;
}

double soc_after(const BatteryBank& b, double soc, double p_kw,
                 double duration_h) {
  if (b.capacity_kwh <= 0.0) return soc;
  if (p_kw >= 0.0) return soc - p_kw * duration_h / b.capacity_kwh;
  return soc + (-p_kw) * duration_h * b.efficiency / b.capacity_kwh;
}

bool storage_feasible(const BatteryBank& b, double p_kw, double soc,
                      double duration_h) {
  constexpr double eps = 1e-9;
  const double limit =
      b.converter_kw * (duration_h <= 1.0 ? b.overload_factor : 1.0);
  if (std::fabs(p_kw) > limit + eps) return false;
  const double s = soc_after(b, soc, p_kw, duration_h);
  return s >= b.min_soc - eps && s <= 1.0 + eps;
}

double storage_up_reserve(const BatteryBank& b, double soc) {
  const double energy = std::max(0.0, (soc - b.min_soc) * b.capacity_kwh);
  return std::min(b.converter_kw * b.overload_factor, energy);
}

double storage_down_reserve(const BatteryBank& b, double soc) {
  const double room = std::max(0.0, (1.0 - soc) * b.capacity_kwh);
  return std::min(b.converter_kw, room);
}

double apply_deviation(double forecast_kw, double deviation_fraction,
                       double rated_kw) {
  return std::clamp(forecast_kw * (1.0 + deviation_fraction), 0.0, rated_kw);
}

}  // namespace pcmg
