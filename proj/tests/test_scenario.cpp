#include "doctest.h"
#include "pcmg/scenario.hpp"
#include "pcmg/util.hpp"

#include <nlohmann/json.hpp>

#include <stdexcept>
#include <string>

using namespace pcmg;
using nlohmann::json;

#ifndef PCMG_SCENARIO_DIR
#error "PCMG_SCENARIO_DIR must point at the bundled scenario directory"
#endif

namespace {

const Scenario& bundled() {
  static const Scenario s =
      load_scenario(std::string(PCMG_SCENARIO_DIR) + "/pcmg.scenario");
  return s;
}

// Expect parse_scenario to reject the document with a message carrying the
// given fragment.
void expect_rejected(const json& doc, const std::string& fragment) {
  try {
    (void)parse_scenario(doc.dump());
    FAIL("expected rejection mentioning '", fragment, "'");
  } catch (const std::runtime_error& e) {
    const std::string msg = e.what();
    INFO("message: ", msg);
    CHECK(msg.find(fragment) != std::string::npos);
  }
}

}  // namespace

TEST_CASE("bundled scenario loads with the expected shape") {
  const Scenario& s = bundled();
  CHECK(s.name == "planned-community-21");
  CHECK(s.network.buses.size() == 21);
  CHECK(s.network.branches.size() == 20);
  CHECK(s.network.slack_bus == 1);
  CHECK(s.portfolio.dg.size() == 12);
  CHECK(s.portfolio.storage.size() == 4);
  CHECK(s.portfolio.loads.size() == 12);
  CHECK(s.state.dg.size() == 12);
  CHECK(s.state.soc.size() == 4);
  CHECK(s.state.load_now_kw.size() == 12);
  CHECK(s.state.load_forecast_kw.size() == 12);
  CHECK(s.nominal_total_load_kw == doctest::Approx(2728.0));

  CHECK(total_forecast_load_kw(s) == doctest::Approx(2200.0));
  CHECK(total_present_load_kw(s) == doctest::Approx(2133.0));
}

TEST_CASE("canonical text and digest are reproduced through a round trip") {
  const Scenario& s = bundled();
  const std::string text = canonical_text(s);
  const Scenario again = parse_scenario(text);
  CHECK(canonical_text(again) == text);
  CHECK(scenario_digest(again) == scenario_digest(s));
  // The digest is the FNV-1a of the canonical text.
  CHECK(scenario_digest(s) == fnv1a64(text.data(), text.size()));
  CHECK(scenario_digest_hex(s).size() == 16);
}

TEST_CASE("structural problems are rejected with a field path") {
  const json base = json::parse(canonical_text(bundled()));

  SUBCASE("unknown top-level field") {
    json doc = base;
    doc["bogus"] = 1;
    expect_rejected(doc, "unknown field");
  }
  SUBCASE("unknown nested field") {
    json doc = base;
    doc["deviations"]["typo_knob"] = 0.5;
    expect_rejected(doc, "unknown field");
  }
  SUBCASE("load group on an unknown bus") {
    json doc = base;
    doc["load_groups"][0]["bus"] = 99;
    expect_rejected(doc, "unknown bus");
  }
  SUBCASE("duplicate storage id") {
    json doc = base;
    doc["storage"][1]["id"] = doc["storage"][0]["id"];
    expect_rejected(doc, "duplicate");
  }
  SUBCASE("asset ids collide across categories") {
    json doc = base;
    doc["storage"][0]["id"] = doc["dg_units"][0]["id"];
    expect_rejected(doc, "collides");
  }
  SUBCASE("non-positive reporting target") {
    json doc = base;
    doc["deviations"]["combined_instances"] = 0;
    expect_rejected(doc, "must be positive");
  }
  SUBCASE("invalid JSON") {
    CHECK_THROWS_AS(parse_scenario("{ not json"), std::runtime_error);
  }
  SUBCASE("missing file") {
    try {
      (void)load_scenario("/nonexistent/there.scenario");
      FAIL("expected an open failure");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()).find("cannot open") != std::string::npos);
    }
  }
}

TEST_CASE("bus injections are portfolio-wide and load-signed") {
  const Scenario& s = bundled();

  // Zero dispatch, zero loads served: all injections vanish.
  Dispatch d;
  d.dg.resize(s.portfolio.dg.size());
  d.storage_kw.assign(s.portfolio.storage.size(), 0.0);
  d.served_kw.assign(s.portfolio.loads.size(), 0.0);
  d.curtailed_kw.assign(s.portfolio.loads.size(), 0.0);
  auto inj = bus_injections(s, d);
  REQUIRE(inj.size() == s.network.buses.size());
  for (const auto& v : inj) CHECK(std::abs(v) < 1e-12);

  // A served load shows up negative at its bus, with lagging reactive power.
  d.served_kw[0] = 95.0;
  inj = bus_injections(s, d);
  const int bus_idx = s.network.index_of(s.portfolio.loads[0].bus);
  CHECK(inj[bus_idx].real() == doctest::Approx(-95.0));
  CHECK(inj[bus_idx].imag() < 0.0);

  // Generation and storage discharge inject positively at unity power factor.
  d.served_kw[0] = 0.0;
  d.dg[0].p_kw = 40.0;
  d.dg[0].committed = true;
  d.storage_kw[0] = 25.0;
  inj = bus_injections(s, d);
  const int gen_bus = s.network.index_of(s.portfolio.dg[0].bus);
  const int sto_bus = s.network.index_of(s.portfolio.storage[0].bus);
  CHECK(inj[gen_bus].real() == doctest::Approx(40.0));
  CHECK(inj[gen_bus].imag() == doctest::Approx(0.0));
  CHECK(inj[sto_bus].real() == doctest::Approx(25.0));
}

TEST_CASE("the baseline schedule solves the network comfortably") {
  const Scenario& s = bundled();
  Dispatch d;
  d.dg.resize(s.portfolio.dg.size());
  for (std::size_t i = 0; i < s.portfolio.dg.size(); ++i) {
    d.dg[i].p_kw = s.state.dg[i].p_kw;
    d.dg[i].r_kw = s.state.dg[i].r_kw;
    d.dg[i].committed = s.state.dg[i].committed;
  }
  d.storage_kw.assign(s.portfolio.storage.size(), 0.0);
  d.served_kw = s.state.load_forecast_kw;
  d.curtailed_kw.assign(s.portfolio.loads.size(), 0.0);

  const auto inj = bus_injections(s, d);
  const PowerFlowResult res = solve_power_flow(s.network, inj);
  REQUIRE(res.converged);
  CHECK(res.mismatch_kw < 1e-3);
  const ConstraintReport rep = check_constraints(s.network, res, 1.0);
  CHECK(rep.feasible);
  CHECK(rep.min_v_pu > 0.9);
  CHECK(rep.max_loading < 1.0);
}
