#include "pcmg/network.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace pcmg {

int NetworkModel::index_of(int bus_id) const {
  for (size_t i = 0; i < buses.size(); ++i)
    if (buses[i].id == bus_id) return static_cast<int>(i);
  throw std::invalid_argument("unknown bus id " + std::to_string(bus_id));
}

namespace {

struct Topology {
  std::vector<int> parent;        // bus index -> parent bus index (-1 for slack)
  std::vector<int> parent_branch; // bus index -> branch index to parent
  std::vector<int> order;         // bus indices, slack first, parents before children
};

Topology build_tree(const NetworkModel& net) {
  const size_t n = net.buses.size();
  if (n == 0) throw std::invalid_argument("network has no buses");
  {
    std::map<int, int> seen;
    for (const auto& b : net.buses)
      if (++seen[b.id] > 1)
        throw std::invalid_argument("duplicate bus id " + std::to_string(b.id));
  }
  std::vector<std::vector<std::pair<int, int>>> adj(n);  // (neighbor, branch)
  for (size_t k = 0; k < net.branches.size(); ++k) {
    const auto& br = net.branches[k];
    if (br.r_ohm == 0.0 && br.x_ohm == 0.0)
      throw std::invalid_argument("zero-impedance branch " +
                                  std::to_string(br.from) + "-" +
                                  std::to_string(br.to));
    const int a = net.index_of(br.from);
    const int b = net.index_of(br.to);
    adj[a].push_back({b, static_cast<int>(k)});
    adj[b].push_back({a, static_cast<int>(k)});
  }
  Topology t;
  t.parent.assign(n, -2);
  t.parent_branch.assign(n, -1);
  const int root = net.index_of(net.slack_bus);
  t.parent[root] = -1;
  t.order.push_back(root);
  for (size_t head = 0; head < t.order.size(); ++head) {
    const int u = t.order[head];
    for (auto [v, k] : adj[u]) {
      if (t.parent[v] != -2) {
        if (v != t.parent[u])
          throw std::invalid_argument("network graph has a loop; radial feeder required");
        continue;
      }
      t.parent[v] = u;
      t.parent_branch[v] = k;
      t.order.push_back(v);
    }
  }
  if (t.order.size() != n)
    throw std::invalid_argument("network graph is disconnected");
  return t;
}

double z_base_ohm(const NetworkModel& net, int bus_index) {
  const double kv = net.buses[bus_index].nominal_kv;
  return kv * kv * 1000.0 / net.s_base_kva;
}

}  // namespace

std::vector<std::vector<cplx>> build_admittance(const NetworkModel& net) {
  build_tree(net);  // validates ids, impedances, connectivity
  const size_t n = net.buses.size();
  std::vector<std::vector<cplx>> y(n, std::vector<cplx>(n, cplx{0.0, 0.0}));
  for (const auto& br : net.branches) {
    const int a = net.index_of(br.from);
    const int b = net.index_of(br.to);
    const cplx z_pu = cplx{br.r_ohm, br.x_ohm} / z_base_ohm(net, a);
    const cplx yy = cplx{1.0, 0.0} / z_pu;
    y[a][b] -= yy;
    y[b][a] -= yy;
    y[a][a] += yy;
    y[b][b] += yy;
  }
  return y;
}

PowerFlowResult solve_power_flow(const NetworkModel& net,
                                 const std::vector<cplx>& injections_kva) {
  const size_t n = net.buses.size();
  if (injections_kva.size() != n)
    throw std::invalid_argument("injection vector size does not match bus count");
  const Topology t = build_tree(net);
  const int root = net.index_of(net.slack_bus);

  std::vector<cplx> z_pu(net.branches.size());
  for (size_t k = 0; k < net.branches.size(); ++k)
    z_pu[k] = cplx{net.branches[k].r_ohm, net.branches[k].x_ohm} /
              z_base_ohm(net, net.index_of(net.branches[k].from));

  std::vector<cplx> s_pu(n);
  for (size_t i = 0; i < n; ++i) s_pu[i] = injections_kva[i] / net.s_base_kva;

  PowerFlowResult res;
  res.v_pu.assign(n, cplx{1.0, 0.0});
  std::vector<cplx> i_inj(n), i_down(n);  // injected current; current to subtree

  constexpr double tol = 1e-6;
  constexpr int max_iter = 50;
  for (int it = 1; it <= max_iter; ++it) {
    res.iterations = it;
    for (size_t i = 0; i < n; ++i)
      i_inj[i] = (i == static_cast<size_t>(root))
                     ? cplx{0.0, 0.0}
                     : std::conj(s_pu[i] / res.v_pu[i]);
    // backward: accumulate subtree currents leaf-to-root
    for (size_t i = 0; i < n; ++i) i_down[i] = -i_inj[i];
    for (size_t q = t.order.size(); q-- > 1;) {
      const int u = t.order[q];
      i_down[t.parent[u]] += i_down[u];
    }
    // forward: propagate voltages root-to-leaf
    double dv = 0.0;
    for (size_t q = 1; q < t.order.size(); ++q) {
      const int u = t.order[q];
      const cplx v_new = res.v_pu[t.parent[u]] - z_pu[t.parent_branch[u]] * i_down[u];
      dv = std::max(dv, std::abs(v_new - res.v_pu[u]));
      res.v_pu[u] = v_new;
    }
    if (dv < tol) {
      res.converged = true;
      break;
    }
  }

  // flows, losses, slack power at the final voltages
  res.branch_kva.assign(net.branches.size(), cplx{0.0, 0.0});
  res.loading.assign(net.branches.size(), 0.0);
  res.losses_kw = 0.0;
  for (size_t q = 1; q < t.order.size(); ++q) {
    const int u = t.order[q];
    const int k = t.parent_branch[u];
    const cplx i_br = i_down[u];  // parent -> u
    const cplx s_send = res.v_pu[t.parent[u]] * std::conj(i_br) * net.s_base_kva;
    res.branch_kva[k] = s_send;
    if (net.branches[k].rating_kva > 0.0)
      res.loading[k] = std::abs(s_send) / net.branches[k].rating_kva;
    res.losses_kw += std::norm(i_br) * z_pu[k].real() * net.s_base_kva;
  }
  const cplx s_slack = res.v_pu[root] * std::conj(i_down[root]) * net.s_base_kva;
  res.slack_kw = s_slack.real();
  res.slack_kvar = s_slack.imag();
  double inj_sum_kw = 0.0;
  for (size_t i = 0; i < n; ++i)
    if (i != static_cast<size_t>(root)) inj_sum_kw += injections_kva[i].real();
  res.mismatch_kw = std::fabs(res.slack_kw + inj_sum_kw - res.losses_kw);
  return res;
}

ConstraintReport check_constraints(const NetworkModel& net,
                                   const PowerFlowResult& result,
                                   double horizon_hours) {
  ConstraintReport rep;
  if (!result.converged) {
    rep.feasible = false;
    rep.violations.push_back("power flow did not converge");
    return rep;
  }
  rep.min_v_pu = 1e9;
  rep.max_v_pu = -1e9;
  for (size_t i = 0; i < net.buses.size(); ++i) {
    const double vm = std::abs(result.v_pu[i]);
    rep.min_v_pu = std::min(rep.min_v_pu, vm);
    rep.max_v_pu = std::max(rep.max_v_pu, vm);
    if (vm < net.v_lower_pu || vm > net.v_upper_pu) {
      rep.feasible = false;
      rep.violations.push_back("bus " + std::to_string(net.buses[i].id) +
                               " voltage " + std::to_string(vm) + " pu");
    }
  }
  for (size_t k = 0; k < net.branches.size(); ++k) {
    const auto& br = net.branches[k];
    if (br.rating_kva <= 0.0) continue;
    const double limit =
        (horizon_hours <= br.overload_hours) ? br.overload_factor : 1.0;
    rep.max_loading = std::max(rep.max_loading, result.loading[k]);
    if (result.loading[k] > limit) {
      rep.feasible = false;
      rep.violations.push_back("branch " + std::to_string(br.from) + "-" +
                               std::to_string(br.to) + " loading " +
                               std::to_string(result.loading[k]));
    }
  }
  return rep;
}

}  // namespace pcmg
