from dataclasses import replace

import numpy as np
import pytest

import oracles
from pvsc.model import (
    BatteryTechnology,
    Capacities,
    DayKind,
    EconomicParams,
    Inverter,
    OptimizationResult,
    PriceDecomposition,
    PvTechnology,
    RemunerationPolicy,
    TechnologyCatalog,
    validate_scenario,
)


def _battery(**kw):
    base = dict(name="b", unit_cost=100.0, ageing_parameter=300.0, lifetime=10.0, soc_min=0.1,
                charge_rate_max=0.5, discharge_rate_max=0.5, eff_charge=0.95, eff_discharge=0.95)
    base.update(kw)
    return BatteryTechnology(**base)


@pytest.mark.parametrize("kw", [{"eff_charge": -0.9}, {"eff_discharge": 1.2}, {"soc_min": 1.0},
                                {"unit_cost": 0.0}, {"charge_rate_max": float("nan")}])
def test_battery_validation(kw):
    with pytest.raises(ValueError):
        _battery(**kw)


def test_other_component_validation():
    with pytest.raises(ValueError):
        PvTechnology(360, 360, 20, 0)
    with pytest.raises(ValueError):
        Inverter(300, 0.97, 10, 0.9)
    with pytest.raises(ValueError):
        PriceDecomposition(-0.01, 0.05, 0.0, 0.0)
    with pytest.raises(ValueError):
        EconomicParams(-0.01)
    with pytest.raises(ValueError):
        Capacities(1.0, 2.0, None)


def test_catalog_rejects_duplicate_names(catalog):
    b = catalog.batteries[0]
    with pytest.raises(ValueError):
        TechnologyCatalog(catalog.pv, catalog.inverter, catalog.controller, (b, b))
    with pytest.raises(KeyError):
        catalog.battery("nope")


def test_policy_parse():
    assert RemunerationPolicy.parse(" P2 ") is RemunerationPolicy.P2
    assert RemunerationPolicy.P3.label == "P3"
    with pytest.raises(ValueError, match="p1, p2, p3"):
        RemunerationPolicy.parse("p4")


def test_capacities_derived_sizes(catalog):
    b = _battery(charge_rate_max=0.5, discharge_rate_max=1.0)
    caps = Capacities(6.0, 4.0, b)
    assert caps.inverter(catalog.inverter) == pytest.approx(5.0)
    assert caps.controller_kw() == 4.0
    assert Capacities(6.0).controller_kw() == 0.0
    assert Capacities(6.0, inverter_kw=2.0).inverter(catalog.inverter) == 2.0


def test_price_decomposition_hour_slice():
    p = PriceDecomposition(np.arange(24) / 100, np.full(24, 0.05), 0.004, 0.01)
    h = p.at(5)
    assert h.teu == 0.05 and h.pmh == 0.05 and h.sah == 0.004
    with pytest.raises(ValueError):
        p.teu[0] = 1.0


def _result(pv, e):
    return OptimizationResult("x", RemunerationPolicy.P1, pv, e, "b" if e else None, pv / 1.2, 0.0,
                              1.0, 2.0, 50.0, 10.0, 100.0, 0.0, 5.0, households=2.0)


def test_config_class_and_per_household():
    assert _result(0.0, 0.0).config_class == "none"
    assert _result(2.0, 0.0).config_class == "pv"
    assert _result(2.0, 1.0).config_class == "pv+battery"
    assert _result(0.0, 1.0).config_class == "battery"
    assert _result(2.0, 1.0).pv_kw_per_household == 1.0
    with pytest.raises(ValueError):
        _result(-1.0, 0.0)


def test_validate_scenario_reports_problems(national):
    assert validate_scenario(national) == []
    day = national.profiles[0]
    bad = national.with_profiles([replace(day, weight=365.0, load=day.load * 0 - 1)])
    msgs = validate_scenario(bad)
    assert any("load must be finite" in m for m in msgs)
    assert any("annual load" in m for m in msgs)
    assert validate_scenario(national.with_profiles([])) == ["scenario has no representative days"]
    assert any("weights sum" in m for m in validate_scenario(national.with_profiles(national.profiles[:-1])))


def test_representative_day_freezes_arrays():
    s = oracles.one_day_scenario(np.ones(24), np.zeros(24), np.full(24, 0.05), np.full(24, 0.04))
    d = s.profiles[0]
    assert d.day_kind is DayKind.WEEKDAY
    with pytest.raises(ValueError):
        d.load[0] = 3.0
    with pytest.raises(ValueError):
        oracles.one_day_scenario(np.ones(23), np.zeros(24), np.full(24, 0.05), np.full(24, 0.04))
