import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from buildstock.core import BuildingType, InvalidComparisonError, InvalidParameterError, ScenarioKind, YearRecord
from buildstock.core import StockLedger
from buildstock.engine import SimulationResult, run_simulation
from buildstock.metrics import (
    aggregate_stock,
    avoided_construction,
    avoided_construction_identity,
    construction_series,
    embodied_carbon,
    net_renovated,
    scenario_delta,
)
from buildstock.scenario import RenovationRamp

from oracles import HAND_LEDGER
from test_engine import configs, demand_series, flat, policy, run_hand

RES = BuildingType.RESIDENTIAL


def fake(stocks, scenario=ScenarioKind.TEP, economy="KR", btype=RES, start=2070):
    led = StockLedger(economy, btype, scenario)
    for k, s in enumerate(stocks):
        led.append(YearRecord(start + k, s))
    return SimulationResult(led, None, {})


def test_delta_relative_and_absolute():
    d = scenario_delta(fake([100.0], ScenarioKind.NR), fake([45.1]), 2070)
    assert d.relative == pytest.approx(0.549, abs=1e-15)
    assert d.absolute == pytest.approx(54.9, abs=1e-12)
    assert (d.baseline, d.variant) == (ScenarioKind.NR, ScenarioKind.TEP)


def test_delta_antisymmetric_in_absolute():
    a, b = fake([80.0], ScenarioKind.BAU), fake([60.0])
    assert scenario_delta(a, b, 2070).absolute == -scenario_delta(b, a, 2070).absolute


def test_delta_undefined_for_zero_baseline():
    d = scenario_delta(fake([0.0], ScenarioKind.NR), fake([0.0]), 2070)
    assert math.isnan(d.relative) and not d.relative_defined


def test_delta_rejects_mismatched_pair():
    with pytest.raises(InvalidComparisonError):
        scenario_delta(fake([1.0], economy="US"), fake([1.0], economy="KR"), 2070)
    with pytest.raises(InvalidComparisonError):
        scenario_delta(fake([1.0], btype=BuildingType.NON_RESIDENTIAL), fake([1.0]), 2070)


def _pair(first=None, second=None, demand=None, years=(2000, 2060)):
    demand = demand or {y: 100.0 + 0.5 * (y - years[0]) for y in range(years[0], years[1] + 1)}
    ds = demand_series(demand)
    nr = run_simulation(policy(ScenarioKind.NR, cycle=None), ds, *years)
    sc = run_simulation(policy(first=first, second=second), ds, *years)
    return nr, sc


def test_avoided_construction_against_itself_is_zero():
    nr, _ = _pair()
    assert all(v == 0.0 for v in avoided_construction(nr, nr).values())


def test_full_renovation_avoids_rb_in_first_year():
    nr, sc = _pair(first=flat(1.0))
    avoided = avoided_construction(nr, sc)
    assert avoided[2001] == pytest.approx(sc.ledger.record(2001).renovated, rel=1e-12)


def test_hand_cumulative_avoided_construction():
    sc = run_hand()
    cum = net_renovated(sc)[1:]
    expected = [HAND_LEDGER[y]["renovated_stock"] for y in (2001, 2002, 2003)]
    assert cum == pytest.approx(expected, abs=1e-12)


def test_identity_on_smooth_run():
    nr, sc = _pair(first=RenovationRamp(2010, 2050, 0.1, 0.6), second=RenovationRamp(2010, 2050, 0.0, 0.3))
    cum = np.cumsum(nr.series("new_construction") - sc.series("new_construction"))
    assert np.allclose(cum, net_renovated(sc), rtol=1e-10, atol=1e-9)
    assert np.allclose(cum, avoided_construction_identity(nr, sc), rtol=1e-10, atol=1e-9)


@settings(max_examples=40)
@given(configs())
def test_identity_holds_with_clamping(cfg):
    demand, mean, cycle, r1, r2, _ = cfg
    ds = demand_series(demand)
    start, end = min(demand), max(demand)
    nr = run_simulation(policy(ScenarioKind.NR, mean=mean, cycle=None), ds, start, end)
    sc = run_simulation(policy(mean=mean, cycle=cycle, first=RenovationRamp(*r1), second=RenovationRamp(*r2)),
                        ds, start, end)
    cum = np.cumsum(nr.series("new_construction") - sc.series("new_construction"))
    scale = max(demand.values())
    assert np.allclose(cum, avoided_construction_identity(nr, sc), rtol=1e-9, atol=1e-9 * scale)


def test_span_mismatch_rejected():
    nr, _ = _pair(years=(2000, 2030))
    _, sc = _pair(first=flat(0.2), years=(2000, 2031))
    with pytest.raises(InvalidComparisonError, match="span"):
        avoided_construction(nr, sc)


def test_carbon_units():
    s = embodied_carbon({2030: 1e6}, 500.0)
    assert s.cumulative == 0.5
    assert s.as_dict() == {2030: 0.5}


def test_zero_intensity_means_zero_emissions():
    assert embodied_carbon({2030: 1e9, 2031: 2e9}, 0.0).cumulative == 0.0


@given(
    nc=st.lists(st.floats(0, 1e9), min_size=1, max_size=20),
    ci=st.floats(0, 2000),
    k=st.floats(0, 10),
)
def test_carbon_linear_in_intensity(nc, ci, k):
    series = {2020 + i: v for i, v in enumerate(nc)}
    a = embodied_carbon(series, ci).emissions
    b = embodied_carbon(series, k * ci).emissions
    assert np.allclose(b, k * a, rtol=1e-12, atol=1e-300)


def test_carbon_rejects_bad_intensity():
    with pytest.raises(InvalidParameterError):
        embodied_carbon({2030: 1.0}, -1.0)
    with pytest.raises(InvalidParameterError, match="2031"):
        embodied_carbon({2030: 1.0, 2031: 1.0}, {2030: 300.0})


def test_construction_series_window():
    nr, _ = _pair()
    s = construction_series(nr, 2010, 2012)
    assert sorted(s) == [2010, 2011, 2012]


def test_aggregate_stock_sums_runs():
    total = aggregate_stock([fake([1.0, 2.0]), fake([3.0, 4.0], economy="US")])
    assert total == {2070: 4.0, 2071: 6.0}
