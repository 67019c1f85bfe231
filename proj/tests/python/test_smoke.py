"""Smoke tests for the python bindings. The scenario file comes from the
PCMG_SCENARIO environment variable (ctest sets it to the bundled one)."""

import os

import pytest

import pcmgrid

SCENARIO = os.environ.get("PCMG_SCENARIO", "scenarios/pcmg.scenario")


def test_learning_math():
    assert pcmgrid.entropy(1, 2) == 1.0
    assert pcmgrid.entropy(0, 5) == 0.0
    assert pcmgrid.info_gain(5, 10, 5, 5, 0, 5) == 1.0
    assert pcmgrid.chi2_critical(0.001) == pytest.approx(10.8276, abs=1e-3)
    assert pcmgrid.cost_threshold(list(range(1, 101)), 0.10) == 90.0


def test_scenario_summary():
    info = pcmgrid.scenario_summary(SCENARIO)
    assert len(info["digest"]) == 16
    assert info["digest"] == pcmgrid.scenario_digest(SCENARIO)
    assert info["buses"] == 21
    assert info["branches"] == 20
    assert info["generators"] == 12
    assert info["storage_banks"] == 4
    assert info["load_groups"] == 12
    assert info["max_deficit_kw"] == pytest.approx(330.0)
    assert info["max_excess_kw"] == pytest.approx(160.0, abs=0.1)
    assert info["schedule_profit"] == pytest.approx(156.5055, abs=1e-6)


def test_islanding_plan():
    plan = pcmgrid.plan_islanding(SCENARIO, [0.35], 120, 3)
    assert plan["origin"] == "islanding"
    assert plan["direction"] == "deficit"
    assert plan["magnitude_kw"] == pytest.approx(1131.5)
    assert plan["scenario_digest"] == pcmgrid.scenario_digest(SCENARIO)
    assert plan["kept"] > 0
    (level,) = plan["levels"]
    assert level["top_pct"] == pytest.approx(0.35)
    assert 0.0 <= level["mrr"] <= level["mr"] <= 1.0
    if level["rules"]:
        assert "then TRUE" in level["rules"][0]
    else:
        assert level["empty_reason"]


def test_islanding_plan_deterministic():
    a = pcmgrid.plan_islanding(SCENARIO, [0.35], 80, 7)
    b = pcmgrid.plan_islanding(SCENARIO, [0.35], 80, 7)
    assert a == b


def test_storage_plan():
    table = pcmgrid.plan_storage(SCENARIO, 3, 10)
    assert table["scenario_digest"] == pcmgrid.scenario_digest(SCENARIO)
    opts = table["options"]
    assert len(opts) == 8
    assert opts[0]["capacity_kwh"] == 300.0
    biggest = [o for o in opts if o["capacity_kwh"] == 1500.0]
    assert len(biggest) == 2
    assert all(o["excess_cost"] == 0.0 for o in biggest)
    for o in opts:
        assert o["total_cost"] == pytest.approx(o["deficit_cost"] + o["excess_cost"])
