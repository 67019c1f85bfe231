#include "pcmg/lsgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "pcmg/rng.hpp"
#include "pcmg/util.hpp"

namespace pcmg {

const char* direction_name(Direction d) {
  return d == Direction::Deficit ? "deficit" : "excess";
}

const char* origin_name(Origin o) {
  switch (o) {
    case Origin::LoadDeviation: return "load-deviation";
    case Origin::DGDeviation: return "dg-deviation";
    case Origin::Islanding: return "islanding";
  }
  return "?";
}

std::uint32_t stream_for(const BalancingRequirement& req) {
  if (req.origin == Origin::Islanding) return 2;
  return req.direction == Direction::Deficit ? 0 : 1;
}

std::vector<std::string> attr_schema(const Scenario& s) {
  std::vector<std::string> names;
  for (const auto& u : s.portfolio.dg) names.push_back(u.id);
  for (const auto& b : s.portfolio.storage) names.push_back(b.id);
  for (const auto& g : s.portfolio.loads) names.push_back(g.id);
  return names;
}

Dispatch schedule_dispatch(const Scenario& s) {
  std::vector<double> attrs;
  for (const auto& e : s.state.dg) attrs.push_back(e.p_kw);
  for (std::size_t i = 0; i < s.portfolio.storage.size(); ++i)
    attrs.push_back(0.0);
  for (double fc : s.state.load_forecast_kw) attrs.push_back(fc);
  BalancingRequirement req;  // interconnected accounting
  return dispatch_from_attrs(s, req, attrs);
}

double schedule_profit(const Scenario& s) {
  return dispatch_profit(s.portfolio, schedule_dispatch(s));
}

Dispatch dispatch_from_attrs(const Scenario& s, const BalancingRequirement& req,
                             const std::vector<double>& attrs) {
  const auto& pf = s.portfolio;
  const std::size_t nd = pf.dg.size(), nb = pf.storage.size(),
                    ng = pf.loads.size();
  if (attrs.size() != nd + nb + ng)
    throw std::invalid_argument("dispatch_from_attrs: attribute count mismatch");
  const bool islanded = req.origin == Origin::Islanding;

  Dispatch d;
  d.dg.resize(nd);
  d.storage_kw.assign(attrs.begin() + nd, attrs.begin() + nd + nb);
  d.served_kw.assign(attrs.begin() + nd + nb, attrs.end());
  d.curtailed_kw.resize(ng);

  double gen = 0.0, reserve = 0.0;
  for (std::size_t i = 0; i < nd; ++i) {
    const DGUnit& u = pf.dg[i];
    const ScheduleEntry& e = s.state.dg[i];
    DGSetpoint& sp = d.dg[i];
    sp.p_kw = attrs[i];
    sp.committed = e.committed || sp.p_kw > 1e-9;
    sp.started = sp.committed && !e.committed;
    if (!is_stochastic(u.kind) && sp.committed)
      sp.r_kw = std::max(0.0, std::min(u.rated_kw - sp.p_kw, u.reserve_cap_kw));
    else
      sp.r_kw = 0.0;
    gen += sp.p_kw;
    reserve += sp.r_kw;
  }

  double storage = 0.0;
  for (std::size_t i = 0; i < nb; ++i) {
    storage += d.storage_kw[i];
    const double up = storage_up_reserve(pf.storage[i], s.state.soc[i]);
    reserve += std::max(0.0, up - std::max(0.0, d.storage_kw[i]));
  }

  double served = 0.0;
  for (std::size_t i = 0; i < ng; ++i) {
    served += d.served_kw[i];
    // Interruption compensation applies to operator-initiated shedding,
    // which only the islanding actor set performs; interconnected samples
    // serve whatever the realization delivers.
    d.curtailed_kw[i] =
        (islanded && pf.loads[i].curtailable)
            ? std::max(0.0, s.state.load_forecast_kw[i] - d.served_kw[i])
            : 0.0;
  }

  // The deviation being balanced enters the exchange as an exogenous term:
  // a deficit means the listed setpoints overstate what actually reaches the
  // busbars (lost generation / extra demand) by the requirement magnitude,
  // an excess understates it. Islanded operation exchanges neither energy
  // nor reserve with the grid.
  double exogenous = 0.0;
  if (!islanded && req.magnitude_kw > 0.0)
    exogenous = (req.direction == Direction::Deficit ? 1.0 : -1.0) *
                req.magnitude_kw;
  d.market_kwh = islanded ? 0.0 : served - gen - storage + exogenous;
  d.reserve_kw = islanded ? 0.0 : reserve;
  return d;
}

namespace {

struct Actor {
  enum What { DGUp, DGCommit, DGDown, StorageUp, StorageDown, Shed };
  What what;
  std::size_t index;  // portfolio index within its category
  double headroom;
  double min_block;  // commitment block for offline dispatchable units
};

std::vector<Actor> deficit_actors(const Scenario& s) {
  std::vector<Actor> a;
  for (std::size_t i = 0; i < s.portfolio.dg.size(); ++i) {
    const DGUnit& u = s.portfolio.dg[i];
    if (is_stochastic(u.kind)) continue;  // cannot be dispatched above forecast
    const ScheduleEntry& e = s.state.dg[i];
    if (e.committed) {
      const double head = u.rated_kw - e.p_kw;
      if (head > 1e-9) a.push_back({Actor::DGUp, i, head, 0.0});
    } else {
      a.push_back({Actor::DGCommit, i, u.rated_kw, u.min_kw});
    }
  }
  for (std::size_t i = 0; i < s.portfolio.storage.size(); ++i) {
    const double up = storage_up_reserve(s.portfolio.storage[i], s.state.soc[i]);
    if (up > 1e-9) a.push_back({Actor::StorageUp, i, up, 0.0});
  }
  return a;
}

std::vector<Actor> excess_actors(const Scenario& s) {
  std::vector<Actor> a;
  for (std::size_t i = 0; i < s.portfolio.storage.size(); ++i) {
    const double down =
        storage_down_reserve(s.portfolio.storage[i], s.state.soc[i]);
    if (down > 1e-9) a.push_back({Actor::StorageDown, i, down, 0.0});
  }
  for (std::size_t i = 0; i < s.portfolio.dg.size(); ++i) {
    const DGUnit& u = s.portfolio.dg[i];
    const ScheduleEntry& e = s.state.dg[i];
    if (!u.deloadable || !e.committed) continue;
    const double floor_kw = is_stochastic(u.kind) ? 0.0 : u.min_kw;
    const double down = e.p_kw - floor_kw;
    if (down > 1e-9) a.push_back({Actor::DGDown, i, down, 0.0});
  }
  return a;
}

void shed_actors(const Scenario& s, const std::vector<double>& served,
                 std::vector<Actor>& a) {
  for (std::size_t i = 0; i < s.portfolio.loads.size(); ++i) {
    if (!s.portfolio.loads[i].curtailable) continue;
    if (served[i] > 1e-9) a.push_back({Actor::Shed, i, served[i], 0.0});
  }
}

}  // namespace

std::optional<LabeledSample> draw_sample(const Scenario& s,
                                         const BalancingRequirement& req,
                                         std::uint32_t sample_index,
                                         std::uint64_t seed,
                                         GenerationDiagnostics& diag) {
  const auto& pf = s.portfolio;
  if (req.origin != Origin::Islanding && !(req.magnitude_kw > 0.0))
    throw std::invalid_argument("draw_sample: requirement magnitude must be positive");

  CounterRng rng(seed, sample_index, stream_for(req));
  ++diag.attempted;

  // 1) one served-load draw per group, inside the [now, forecast] interval
  const std::size_t nd = pf.dg.size(), nb = pf.storage.size(),
                    ng = pf.loads.size();
  std::vector<double> p_dg(nd), storage_kw(nb, 0.0), served(ng);
  for (std::size_t i = 0; i < nd; ++i) p_dg[i] = s.state.dg[i].p_kw;
  for (std::size_t i = 0; i < ng; ++i) {
    const double lo =
        std::min(s.state.load_now_kw[i], s.state.load_forecast_kw[i]);
    const double hi =
        std::max(s.state.load_now_kw[i], s.state.load_forecast_kw[i]);
    served[i] = rng.uniform(lo, hi);
  }

  // 2) requirement to place
  bool up_direction = req.direction == Direction::Deficit;
  double remaining = req.magnitude_kw;
  if (req.origin == Origin::Islanding) {
    double gen = 0.0, demand = 0.0;
    for (double p : p_dg) gen += p;
    for (double v : served) demand += v;
    const double net_import = demand - gen;
    up_direction = net_import > 0.0;
    remaining = std::fabs(net_import);
  }

  std::vector<Actor> actors =
      up_direction ? deficit_actors(s) : excess_actors(s);
  if (req.origin == Origin::Islanding && up_direction)
    shed_actors(s, served, actors);

  // 3) allocation sampler
  int guard = 0;
  std::vector<std::size_t> eligible;
  while (remaining > 1e-9) {
    if (++guard > 1000) {
      ++diag.skipped_allocation;
      return std::nullopt;
    }
    eligible.clear();
    for (std::size_t k = 0; k < actors.size(); ++k) {
      const Actor& a = actors[k];
      if (a.headroom <= 1e-9) continue;
      if (a.what == Actor::DGCommit &&
          (remaining < a.min_block || a.headroom < a.min_block))
        continue;
      eligible.push_back(k);
    }
    if (eligible.empty()) {
      ++diag.skipped_allocation;
      return std::nullopt;
    }
    Actor& a = actors[eligible[rng.pick(eligible.size())]];
    double amount;
    if (remaining <= 1.0) {
      amount = std::min(remaining, a.headroom);
    } else {
      amount = std::min(rng.uniform() * remaining, a.headroom);
    }
    if (a.what == Actor::DGCommit)
      amount = std::min(std::max(amount, a.min_block),
                        std::min(remaining, a.headroom));
    if (amount <= 0.0) continue;

    switch (a.what) {
      case Actor::DGUp:
      case Actor::DGCommit:
        p_dg[a.index] += amount;
        if (a.what == Actor::DGCommit) a.what = Actor::DGUp;
        break;
      case Actor::DGDown:
        p_dg[a.index] -= amount;
        break;
      case Actor::StorageUp:
        storage_kw[a.index] += amount;
        break;
      case Actor::StorageDown:
        storage_kw[a.index] -= amount;
        break;
      case Actor::Shed:
        served[a.index] -= amount;
        break;
    }
    a.headroom -= amount;
    remaining -= amount;
  }

  // 4) assemble, price, screen
  std::vector<double> attrs;
  attrs.reserve(nd + nb + ng);
  attrs.insert(attrs.end(), p_dg.begin(), p_dg.end());
  attrs.insert(attrs.end(), storage_kw.begin(), storage_kw.end());
  attrs.insert(attrs.end(), served.begin(), served.end());

  const Dispatch d = dispatch_from_attrs(s, req, attrs);
  const double profit = dispatch_profit(pf, d);

  const auto inj = bus_injections(s, d);
  const PowerFlowResult flow = solve_power_flow(s.network, inj);
  const ConstraintReport rep = check_constraints(s.network, flow, 1.0);
  if (!flow.converged)
    ++diag.pf_not_converged;
  else if (!rep.feasible)
    ++diag.constraint_infeasible;
  if (flow.converged)
    diag.max_mismatch_kw = std::max(diag.max_mismatch_kw, flow.mismatch_kw);

  LabeledSample sample;
  sample.sample_index = sample_index;
  sample.attrs = std::move(attrs);
  sample.profit = profit;
  sample.feasible = rep.feasible;
  sample.label = false;
  ++diag.kept;
  return sample;
}

std::vector<LabeledSample> draw_range(const Scenario& s,
                                      const BalancingRequirement& req,
                                      std::uint32_t begin, std::uint32_t end,
                                      std::uint64_t seed,
                                      GenerationDiagnostics& diag) {
  std::vector<LabeledSample> out;
  out.reserve(end - begin);
  for (std::uint32_t i = begin; i < end; ++i) {
    auto sample = draw_sample(s, req, i, seed, diag);
    if (sample) out.push_back(std::move(*sample));
  }
  return out;
}

LearningSet generate_ls(const Scenario& s, const BalancingRequirement& req,
                        int n, std::uint64_t seed) {
  if (n <= 0) throw std::invalid_argument("generate_ls: n must be positive");
  LearningSet ls;
  ls.attr_names = attr_schema(s);
  ls.seed = seed;
  ls.stream = stream_for(req);
  ls.req = req;
  ls.scenario_digest = scenario_digest(s);
  ls.samples = draw_range(s, req, 0, static_cast<std::uint32_t>(n), seed, ls.diag);
  if (ls.diag.skipped_allocation * 10 > n * 9) {
    std::ostringstream msg;
    msg << "generate_ls: allocation sampler skipped "
        << ls.diag.skipped_allocation << " of " << n
        << " draws; the requirement is outside the portfolio's flexibility";
    throw std::runtime_error(msg.str());
  }
  return ls;
}

double cost_threshold(std::vector<double> profits, double top_pct) {
  if (profits.empty())
    throw std::invalid_argument("cost_threshold: empty profit list");
  if (!(top_pct > 0.0))
    throw std::invalid_argument("cost_threshold: top_pct must be positive");
  if (top_pct >= 1.0) return -std::numeric_limits<double>::infinity();
  std::sort(profits.begin(), profits.end());
  const double n = static_cast<double>(profits.size());
  long k = static_cast<long>(std::ceil(n * (1.0 - top_pct))) - 1;
  if (k < 0) k = 0;
  if (k >= static_cast<long>(profits.size()))
    k = static_cast<long>(profits.size()) - 1;
  return profits[static_cast<std::size_t>(k)];
}

void label_ls(LearningSet& ls, double top_pct) {
  if (ls.samples.empty())
    throw std::runtime_error("label_ls: learning set has no samples");
  std::vector<double> profits;
  profits.reserve(ls.samples.size());
  for (const auto& s : ls.samples) profits.push_back(s.profit);
  ls.threshold = cost_threshold(std::move(profits), top_pct);
  for (auto& s : ls.samples)
    s.label = s.feasible && s.profit > ls.threshold;
  ls.top_pct = top_pct;
  ls.labeled = true;
}

// ---------------------------------------------------------------------------
// binary form

namespace {
constexpr char kMagic[4] = {'P', 'C', 'L', 'S'};
constexpr std::uint8_t kVersion = 1;
}  // namespace

std::vector<unsigned char> serialize_ls(const LearningSet& ls) {
  ByteWriter w;
  w.bytes(kMagic, 4);
  w.u8(kVersion);
  w.u64(ls.seed);
  w.u32(ls.stream);
  w.u8(static_cast<std::uint8_t>(ls.req.direction));
  w.u8(static_cast<std::uint8_t>(ls.req.origin));
  w.f64(ls.req.magnitude_kw);
  w.u64(ls.scenario_digest);
  w.u8(ls.labeled ? 1 : 0);
  w.f64(ls.top_pct);
  w.f64(ls.threshold);
  w.u32(static_cast<std::uint32_t>(ls.diag.attempted));
  w.u32(static_cast<std::uint32_t>(ls.diag.kept));
  w.u32(static_cast<std::uint32_t>(ls.diag.skipped_allocation));
  w.u32(static_cast<std::uint32_t>(ls.diag.pf_not_converged));
  w.u32(static_cast<std::uint32_t>(ls.diag.constraint_infeasible));
  w.f64(ls.diag.max_mismatch_kw);
  w.u32(static_cast<std::uint32_t>(ls.attr_names.size()));
  for (const auto& n : ls.attr_names) w.str(n);
  w.u32(static_cast<std::uint32_t>(ls.samples.size()));
  for (const auto& s : ls.samples) {
    if (s.attrs.size() != ls.attr_names.size())
      throw std::runtime_error("serialize_ls: sample width mismatch");
    w.u32(s.sample_index);
    for (double a : s.attrs) w.f64(a);
    w.f64(s.profit);
    w.u8(s.feasible ? 1 : 0);
    w.u8(s.label ? 1 : 0);
  }
  return std::move(w.data);
}

LearningSet parse_ls(const unsigned char* data, std::size_t len) {
  ByteReader r(data, len);
  char magic[4];
  r.need(4);
  std::memcpy(magic, data, 4);
  r.pos = 4;
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("parse_ls: bad magic");
  if (r.u8() != kVersion) throw std::runtime_error("parse_ls: unknown version");
  LearningSet ls;
  ls.seed = r.u64();
  ls.stream = r.u32();
  ls.req.direction = static_cast<Direction>(r.u8());
  ls.req.origin = static_cast<Origin>(r.u8());
  ls.req.magnitude_kw = r.f64();
  ls.scenario_digest = r.u64();
  ls.labeled = r.u8() != 0;
  ls.top_pct = r.f64();
  ls.threshold = r.f64();
  ls.diag.attempted = static_cast<int>(r.u32());
  ls.diag.kept = static_cast<int>(r.u32());
  ls.diag.skipped_allocation = static_cast<int>(r.u32());
  ls.diag.pf_not_converged = static_cast<int>(r.u32());
  ls.diag.constraint_infeasible = static_cast<int>(r.u32());
  ls.diag.max_mismatch_kw = r.f64();
  const std::uint32_t n_attrs = r.u32();
  for (std::uint32_t i = 0; i < n_attrs; ++i) ls.attr_names.push_back(r.str());
  const std::uint32_t n_samples = r.u32();
  for (std::uint32_t i = 0; i < n_samples; ++i) {
    LabeledSample s;
    s.sample_index = r.u32();
    s.attrs.resize(n_attrs);
    for (std::uint32_t a = 0; a < n_attrs; ++a) s.attrs[a] = r.f64();
    s.profit = r.f64();
    s.feasible = r.u8() != 0;
    s.label = r.u8() != 0;
    ls.samples.push_back(std::move(s));
  }
  if (!r.done()) throw std::runtime_error("parse_ls: trailing bytes");
  if (static_cast<int>(n_samples) != ls.diag.kept)
    throw std::runtime_error("parse_ls: sample count does not match diagnostics");
  return ls;
}

void save_ls(const LearningSet& ls, const std::string& path) {
  const auto bytes = serialize_ls(ls);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("save_ls: cannot open " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("save_ls: write failed for " + path);
}

LearningSet load_ls(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_ls: cannot open " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  return parse_ls(bytes.data(), bytes.size());
}

}  // namespace pcmg
