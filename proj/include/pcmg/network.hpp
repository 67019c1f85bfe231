#pragma once
#include <complex>
#include <string>
#include <vector>

namespace pcmg {

using cplx = std::complex<double>;

struct Bus {
  int id = 0;
  double nominal_kv = 11.0;
};

struct Branch {
  int from = 0;
  int to = 0;
  double r_ohm = 0.0;
  double x_ohm = 0.0;
  double rating_kva = 0.0;
  // short-duration capability (e.g. battery converter corridors rated 1.2x
  // for events up to one hour)
  double overload_factor = 1.0;
  double overload_hours = 0.0;
};

struct NetworkModel {
  std::vector<Bus> buses;
  std::vector<Branch> branches;
  int slack_bus = 1;
  double s_base_kva = 1000.0;
  double v_lower_pu = 0.90;
  double v_upper_pu = 1.10;

  int index_of(int bus_id) const;  // throws on unknown id
};

struct PowerFlowResult {
  bool converged = false;
  int iterations = 0;
  std::vector<cplx> v_pu;            // per bus, buses order
  std::vector<double> loading;       // per branch, |S|/rating
  std::vector<cplx> branch_kva;      // sending-end flow
  double slack_kw = 0.0;
  double slack_kvar = 0.0;
  double losses_kw = 0.0;
  // |slack + sum(injections) - losses|, the conservation residual
  double mismatch_kw = 0.0;
};

struct ConstraintReport {
  bool feasible = true;
  double min_v_pu = 1.0;
  double max_v_pu = 1.0;
  double max_loading = 0.0;
  std::vector<std::string> violations;
};

// Dense bus admittance matrix in per-unit, buses order.
// Y[i][j] = -1/z_ij for a branch i-j, diagonal = sum of incident 1/z.
// Throws on zero-impedance branches, unknown bus ids, or a disconnected graph.
std::vector<std::vector<cplx>> build_admittance(const NetworkModel& net);

// Forward-backward sweep for radial feeders. injections_kva is the net complex
// power injected per bus (generation positive, load negative), aligned with
// net.buses; the slack entry is ignored. Tolerance 1e-6 pu on voltage change,
// at most 50 iterations; a non-convergent case returns converged=false instead
// of throwing. Throws if the graph is not a tree rooted at the slack.
PowerFlowResult solve_power_flow(const NetworkModel& net,
                                 const std::vector<cplx>& injections_kva);

// Screens a solved case: voltage band on every bus, branch loading against the
// steady rating, or against rating*overload_factor when the study horizon fits
// inside the branch's declared overload window. A non-converged result is
// infeasible by definition.
ConstraintReport check_constraints(const NetworkModel& net,
                                   const PowerFlowResult& result,
                                   double horizon_hours = 1.0);

}  // namespace pcmg
