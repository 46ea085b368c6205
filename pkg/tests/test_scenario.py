import math

import pytest
from hypothesis import given, strategies as st

from buildstock.core import BuildingType, ConfigurationError, DataGapError, InvalidParameterError, ScenarioKind
from buildstock.scenario import (
    AVERAGE,
    FALLBACK_LIFETIME,
    DemandSeries,
    LifetimeSchedule,
    RenovationRamp,
    ScenarioPolicy,
    build_policy,
    demand_at,
    interpolate_endpoint_series,
    policy_economies,
    rate_at,
)

RES = BuildingType.RESIDENTIAL
NONRES = BuildingType.NON_RESIDENTIAL


def test_linear_ramp_endpoints_and_midpoint():
    ramp = RenovationRamp(2021, 2070, 0.10, 0.492)
    assert rate_at(ramp, 2021) == 0.10
    assert rate_at(ramp, 2070) == pytest.approx(0.492, abs=1e-15)
    assert rate_at(ramp, 2045) == pytest.approx(0.10 + 0.392 * 24 / 49)


def test_ramp_clamped_outside_window():
    ramp = RenovationRamp(2021, 2070, 0.03, 1.0)
    assert rate_at(ramp, 2000) == 0.03
    assert rate_at(ramp, 2090) == 1.0


def test_increment_ramp_one_percent_a_year():
    ramp = RenovationRamp(2021, 2070, 0.0, 0.49, step=0.01)
    assert rate_at(ramp, 2031) == pytest.approx(0.10, abs=1e-15)
    assert rate_at(ramp, 2069) == pytest.approx(0.48, abs=1e-15)
    assert rate_at(ramp, 2070) == 0.49


@pytest.mark.parametrize(
    "args",
    [(2021, 2070, 0.5, 0.4), (2021, 2070, -0.1, 0.4), (2021, 2070, 0.1, 1.2), (2070, 2021, 0.1, 0.2)],
)
def test_ramp_validation(args):
    with pytest.raises(InvalidParameterError):
        RenovationRamp(*args)


@given(
    lo=st.floats(0, 1), hi=st.floats(0, 1), year=st.integers(1950, 2100),
    step=st.one_of(st.none(), st.floats(0, 0.2)),
)
def test_rate_stays_in_range(lo, hi, year, step):
    lo, hi = min(lo, hi), max(lo, hi)
    r = rate_at(RenovationRamp(2021, 2070, lo, hi, step), year)
    assert lo <= r <= hi


def test_lifetime_schedule_switches_by_construction_year():
    sched = LifetimeSchedule.switching(35, 50, 2030)
    assert sched(2030).mean == 35
    assert sched(2031).mean == 50
    assert sched.means == (35, 50)
    assert LifetimeSchedule.switching(75, None, None).means == (75,)


def test_us_bau_residential_policy(shipped_params):
    p = build_policy("BAU", "US", "residential", shipped_params)
    assert p.average_lifetime.means == (75,)
    assert p.initial_lifetime.means == (25,)
    assert p.construction_lifetime.means == (25,)
    assert p.renovation_cycle == 25
    assert (p.first_renovation.start_rate, p.first_renovation.end_rate) == pytest.approx((0.10, 0.492))
    assert (p.second_renovation.start_rate, p.second_renovation.end_rate) == pytest.approx((0.10, 0.198))


def test_average_basis_uses_average_lifetime(shipped_params):
    p = build_policy("BAU", "EU27", "residential", shipped_params, lifetime_basis=AVERAGE)
    assert p.construction_lifetime.means == (120,)


def test_eu27_tep_first_ramp(shipped_params):
    p = build_policy(ScenarioKind.TEP, "EU27", RES, shipped_params)
    assert p.first_renovation.start_rate == pytest.approx(0.12)
    assert p.first_renovation.end_rate == 1.0


def test_nr_never_renovates(shipped_params):
    p = build_policy("NR", "US", RES, shipped_params)
    assert not p.renovates
    assert p.first_rate(2050) == 0.0 and p.second_rate(2050) == 0.0


def test_developing_economies_have_nr_equal_bau(shipped_params):
    for econ in ("CN", "IN", "AFR"):
        for t in (RES, NONRES):
            bau = build_policy("BAU", econ, t, shipped_params)
            nr = build_policy("NR", econ, t, shipped_params)
            assert not bau.renovates
            assert bau.construction_lifetime == nr.construction_lifetime


def test_china_tep_renovation(shipped_params):
    res = build_policy("TEP", "CN", RES, shipped_params)
    nonres = build_policy("TEP", "CN", NONRES, shipped_params)
    assert res.first_rate(2031) == pytest.approx(0.10)
    assert nonres.first_rate(2031) == pytest.approx(0.15)
    assert res.average_lifetime.means == (35, 80)
    assert res.lifetime_for_vintage(2035).mean == 50


def test_missing_row_names_tuple(shipped_params):
    with pytest.raises(ConfigurationError, match=r"\(TEP, UK, residential\)"):
        build_policy("TEP", "UK", RES, shipped_params)


def test_nr_without_row_falls_back(shipped_params):
    p = build_policy("NR", "UK", RES, shipped_params)
    assert p.construction_lifetime.means == (FALLBACK_LIFETIME,)


def test_bad_basis(shipped_params):
    with pytest.raises(ConfigurationError):
        build_policy("BAU", "US", RES, shipped_params, lifetime_basis="median")


def test_policy_invariants():
    sched = LifetimeSchedule.constant(50)
    ramp = RenovationRamp(2021, 2070, 0.1, 0.2)
    with pytest.raises(InvalidParameterError):
        ScenarioPolicy(ScenarioKind.NR, "X", RES, sched, 25, ramp)
    with pytest.raises(InvalidParameterError):
        ScenarioPolicy(ScenarioKind.BAU, "X", RES, sched, 25, None, ramp)
    with pytest.raises(InvalidParameterError):
        ScenarioPolicy(ScenarioKind.BAU, "X", RES, sched, None, ramp)


def test_eight_policy_economies(shipped_params):
    assert policy_economies(shipped_params) == ["US", "CA", "EU27", "JP", "KR", "CN", "IN", "AFR"]


def test_growth_extrapolation_after_last_anchor():
    out = interpolate_endpoint_series({2049: 74.0, 2050: 74.8}, (2049, 2052))
    assert out[2050] == 74.8
    assert out[2052] == pytest.approx(74.8 * (74.8 / 74.0) ** 2, rel=1e-14)


def test_linear_between_anchors():
    out = interpolate_endpoint_series({2000: 10.0, 2050: 60.0, 2070: 70.0}, (2000, 2070))
    assert out[2025] == 35.0
    assert out[2060] == 65.0
    assert sorted(out) == list(range(2000, 2071))


def test_interpolation_needs_two_anchors():
    with pytest.raises(ConfigurationError):
        interpolate_endpoint_series({2000: 1.0}, (2000, 2010))


@given(
    anchors=st.dictionaries(st.integers(2000, 2060), st.floats(0.1, 500), min_size=2, max_size=6),
)
def test_interpolation_hits_anchors_and_stays_between(anchors):
    out = interpolate_endpoint_series(anchors, (min(anchors), 2070))
    years = sorted(anchors)
    for y in years:
        assert out[y] == pytest.approx(anchors[y], rel=1e-12)
    for a, b in zip(years, years[1:]):
        lo, hi = sorted((anchors[a], anchors[b]))
        for y in range(a, b + 1):
            assert lo * (1 - 1e-12) <= out[y] <= hi * (1 + 1e-12)
    assert all(math.isfinite(v) and v > 0 for v in out.values())


def test_demand_is_population_times_floorspace():
    ds = DemandSeries()
    ds.add("X", "res", {2000: 2.0e6, 2001: 2.1e6}, {2000: 30.0, 2001: 31.0})
    assert demand_at(ds, "X", RES, 2001) == 2.1e6 * 31.0
    with pytest.raises(DataGapError) as err:
        demand_at(ds, "X", RES, 2002)
    assert err.value.year == 2002
    with pytest.raises(DataGapError):
        ds.check_coverage("X", RES, 2000, 2003)


def test_demand_rejects_negative():
    with pytest.raises(InvalidParameterError):
        DemandSeries().add("X", "res", {2000: -1.0}, {2000: 30.0})
