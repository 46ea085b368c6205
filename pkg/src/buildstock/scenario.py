"""Scenario policies (renovation ramps, lifetimes) and floorspace demand series."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

from .core import (
    BuildingType,
    ConfigurationError,
    DataGapError,
    EconomyId,
    InvalidParameterError,
    LifetimeDistribution,
    ScenarioKind,
    check_economy,
    make_default_lifetime,
)

RAMP_START = 2021
RAMP_END = 2070

# Lifetime given to NR runs of economies without a parameter row; NR stock
# does not depend on it, only the split of new construction does.
FALLBACK_LIFETIME = 50.0

LINEAR = "linear"
INCREMENT = "increment"


@dataclass(frozen=True)
class RenovationRamp:
    """Renovation rate rising from ``start_rate`` to ``end_rate``.

    ``step`` selects the annual-increment shape (rate grows by ``step`` per
    year from ``start_year``); without it the ramp is linear between the
    two end points.
    """

    start_year: int
    end_year: int
    start_rate: float
    end_rate: float
    step: float | None = None

    def __post_init__(self):
        if not 0 <= self.start_rate <= self.end_rate <= 1:
            raise InvalidParameterError(
                f"ramp rates must satisfy 0 <= start <= end <= 1, got {self.start_rate}, {self.end_rate}"
            )
        if not self.start_year < self.end_year:
            raise InvalidParameterError(f"ramp start {self.start_year} must precede end {self.end_year}")
        if self.step is not None and not self.step >= 0:
            raise InvalidParameterError(f"ramp step must be >= 0, got {self.step}")

    @property
    def shape(self) -> str:
        return LINEAR if self.step is None else INCREMENT


def rate_at(ramp: RenovationRamp, year: int) -> float:
    if ramp.step is None:
        frac = (year - ramp.start_year) / (ramp.end_year - ramp.start_year)
        rate = ramp.start_rate + (ramp.end_rate - ramp.start_rate) * frac
    else:
        rate = ramp.start_rate + ramp.step * (year - ramp.start_year)
    return min(max(rate, ramp.start_rate), ramp.end_rate)


@dataclass(frozen=True)
class LifetimeSchedule:
    """Lifetime by construction year: ``(last_vintage, lifetime)`` pieces, last open-ended."""

    pieces: tuple[tuple[int | None, LifetimeDistribution], ...]

    def __post_init__(self):
        if not self.pieces or self.pieces[-1][0] is not None:
            raise InvalidParameterError("lifetime schedule must end with an open-ended piece")
        bounds = [b for b, _ in self.pieces[:-1]]
        if bounds != sorted(bounds) or None in bounds:
            raise InvalidParameterError("lifetime schedule breakpoints must be increasing")

    @classmethod
    def constant(cls, mean: float) -> "LifetimeSchedule":
        return cls(((None, make_default_lifetime(mean)),))

    @classmethod
    def switching(cls, early: float, late: float | None, last_early_vintage: int | None) -> "LifetimeSchedule":
        if late is None or last_early_vintage is None or late == early:
            return cls.constant(early)
        return cls(((last_early_vintage, make_default_lifetime(early)), (None, make_default_lifetime(late))))

    def __call__(self, vintage: int) -> LifetimeDistribution:
        for last, dist in self.pieces:
            if last is None or vintage <= last:
                return dist
        raise AssertionError("unreachable")

    @property
    def means(self) -> tuple[float, ...]:
        return tuple(d.mean for _, d in self.pieces)


@dataclass(frozen=True)
class ScenarioPolicy:
    scenario: ScenarioKind
    economy: EconomyId
    building_type: BuildingType
    construction_lifetime: LifetimeSchedule
    renovation_cycle: float | None = None
    first_renovation: RenovationRamp | None = None
    second_renovation: RenovationRamp | None = None
    initial_lifetime: LifetimeSchedule | None = None
    average_lifetime: LifetimeSchedule | None = None

    def __post_init__(self):
        if self.scenario is ScenarioKind.NR and (self.first_renovation or self.second_renovation):
            raise InvalidParameterError("NR policy cannot renovate")
        if self.second_renovation is not None and self.first_renovation is None:
            raise InvalidParameterError("second renovation requires a first renovation")
        if self.first_renovation is not None and not (self.renovation_cycle and self.renovation_cycle > 0):
            raise InvalidParameterError("renovating policy needs a positive renovation cycle")

    @property
    def key(self) -> tuple[EconomyId, BuildingType, ScenarioKind]:
        return (self.economy, self.building_type, self.scenario)

    @property
    def renovates(self) -> bool:
        return self.first_renovation is not None

    @property
    def renovation_lifetime(self) -> LifetimeDistribution | None:
        if self.renovation_cycle is None:
            return None
        return make_default_lifetime(self.renovation_cycle)

    def lifetime_for_vintage(self, vintage: int) -> LifetimeDistribution:
        return self.construction_lifetime(vintage)

    def first_rate(self, year: int) -> float:
        return rate_at(self.first_renovation, year) if self.first_renovation else 0.0

    def second_rate(self, year: int) -> float:
        return rate_at(self.second_renovation, year) if self.second_renovation else 0.0


@dataclass(frozen=True)
class PolicyRow:
    """One economy/building-type row of a renovation parameter table. Rates are fractions."""

    scenario: ScenarioKind
    economy: EconomyId
    building_type: BuildingType
    average_lifetime: float
    initial_lifetime: float
    average_lifetime_late: float | None = None
    initial_lifetime_late: float | None = None
    lifetime_switch_year: int | None = None
    renovation_cycle: float | None = None
    first_rate_min: float | None = None
    first_rate_max: float | None = None
    second_rate_min: float | None = None
    second_rate_max: float | None = None
    ramp_step: float | None = None
    ramp_start: int = RAMP_START
    ramp_end: int = RAMP_END

    @property
    def key(self) -> tuple[ScenarioKind, EconomyId, BuildingType]:
        return (self.scenario, self.economy, self.building_type)

    @property
    def has_first(self) -> bool:
        return self.first_rate_max is not None

    @property
    def has_second(self) -> bool:
        return self.second_rate_max is not None


ParameterTable = Mapping[tuple[ScenarioKind, EconomyId, BuildingType], PolicyRow]

AVERAGE = "average"
INITIAL = "initial"


def _ramp(row: PolicyRow, lo: float, hi: float, step: float | None) -> RenovationRamp:
    return RenovationRamp(row.ramp_start, row.ramp_end, lo, hi, step)


def build_policy(
    scenario: ScenarioKind | str,
    economy: EconomyId,
    building_type: BuildingType | str,
    params: ParameterTable,
    lifetime_basis: str = INITIAL,
) -> ScenarioPolicy:
    """Policy for one (scenario, economy, building type).

    NR reuses the BAU row's lifetimes with renovation switched off, falling
    back to a generic lifetime when the economy has no row at all.
    ``lifetime_basis`` picks which lifetime column drives first demolition of
    new buildings. The default, ``"initial"``, treats the average lifetime as
    the service life reached with renovation (initial lifetime plus cycles),
    so renovation is what extends a building past its initial lifetime;
    ``"average"`` applies the average lifetime to new buildings directly.
    """
    scenario = ScenarioKind.parse(scenario)
    building_type = BuildingType.parse(building_type)
    economy = check_economy(economy)
    if lifetime_basis not in (AVERAGE, INITIAL):
        raise ConfigurationError(f"lifetime_basis must be {AVERAGE!r} or {INITIAL!r}, got {lifetime_basis!r}")

    lookup = ScenarioKind.BAU if scenario is ScenarioKind.NR else scenario
    row = params.get((lookup, economy, building_type))
    if row is None:
        if scenario is ScenarioKind.NR:
            return ScenarioPolicy(scenario, economy, building_type, LifetimeSchedule.constant(FALLBACK_LIFETIME))
        raise ConfigurationError(
            f"no parameter row for ({scenario.value}, {economy}, {building_type.value})"
        )

    average = LifetimeSchedule.switching(row.average_lifetime, row.average_lifetime_late, row.lifetime_switch_year)
    initial = LifetimeSchedule.switching(row.initial_lifetime, row.initial_lifetime_late, row.lifetime_switch_year)
    construction = average if lifetime_basis == AVERAGE else initial

    if scenario is ScenarioKind.NR or not row.has_first:
        return ScenarioPolicy(
            scenario, economy, building_type, construction, initial_lifetime=initial, average_lifetime=average
        )

    first = _ramp(row, row.first_rate_min, row.first_rate_max, row.ramp_step)
    second = None
    if row.has_second:
        second = _ramp(row, row.second_rate_min, row.second_rate_max, row.ramp_step)
    return ScenarioPolicy(
        scenario,
        economy,
        building_type,
        construction,
        renovation_cycle=row.renovation_cycle,
        first_renovation=first,
        second_renovation=second,
        initial_lifetime=initial,
        average_lifetime=average,
    )


def policy_economies(params: ParameterTable) -> list[EconomyId]:
    """Economies whose rows renovate in at least one scenario, in table order."""
    seen: dict[EconomyId, None] = {}
    for row in params.values():
        if row.has_first:
            seen.setdefault(row.economy, None)
    return list(seen)


def interpolate_endpoint_series(anchors: Mapping[int, float], span: tuple[int, int]) -> dict[int, float]:
    """Annual values over ``span`` from sparse anchors.

    Linear between anchors; after the last anchor the series grows at the
    compound annual rate implied by the last two anchors. Years before the
    first anchor are not filled.
    """
    if len(anchors) < 2:
        raise ConfigurationError(f"need at least 2 anchors, got {len(anchors)}")
    lo, hi = span
    if lo > hi:
        raise ConfigurationError(f"empty span {span}")
    years = sorted(anchors)
    if years[0] < lo or years[-1] > hi:
        raise ConfigurationError(f"anchors {years[0]}..{years[-1]} fall outside span {lo}..{hi}")

    out: dict[int, float] = {}
    for y0, y1 in zip(years, years[1:]):
        v0, v1 = float(anchors[y0]), float(anchors[y1])
        for y in range(y0, y1):
            out[y] = v0 + (v1 - v0) * (y - y0) / (y1 - y0)
    y_prev, y_last = years[-2], years[-1]
    v_prev, v_last = float(anchors[y_prev]), float(anchors[y_last])
    out[y_last] = v_last
    if v_prev > 0 and v_last > 0:
        growth = (v_last / v_prev) ** (1.0 / (y_last - y_prev))
    else:
        growth = 1.0
    for y in range(y_last + 1, hi + 1):
        out[y] = v_last * growth ** (y - y_last)
    return {y: out[y] for y in range(years[0], hi + 1)}


@dataclass
class DemandSeries:
    """Population and per-capita floorspace per (economy, building type), annual."""

    population: dict[tuple[EconomyId, BuildingType], dict[int, float]] = field(default_factory=dict)
    per_capita_floorspace: dict[tuple[EconomyId, BuildingType], dict[int, float]] = field(default_factory=dict)

    def add(
        self,
        economy: EconomyId,
        building_type: BuildingType | str,
        population: Mapping[int, float],
        per_capita: Mapping[int, float],
    ) -> None:
        key = (check_economy(economy), BuildingType.parse(building_type))
        for name, values in (("population", population), ("per-capita floorspace", per_capita)):
            for year, v in values.items():
                if not (v >= 0 and math.isfinite(v)):
                    raise InvalidParameterError(f"{name} for {key[0]} {year} must be >= 0, got {v!r}")
        self.population[key] = {int(y): float(v) for y, v in population.items()}
        self.per_capita_floorspace[key] = {int(y): float(v) for y, v in per_capita.items()}

    @property
    def keys(self) -> list[tuple[EconomyId, BuildingType]]:
        return sorted(self.per_capita_floorspace, key=lambda k: (k[0], k[1].value))

    @property
    def economies(self) -> list[EconomyId]:
        return sorted({e for e, _ in self.per_capita_floorspace})

    def coverage(self, economy: EconomyId, building_type: BuildingType) -> tuple[int, int]:
        key = (economy, BuildingType.parse(building_type))
        if key not in self.per_capita_floorspace:
            raise DataGapError(f"no demand data for {economy} {key[1].value}")
        years = set(self.population[key]) & set(self.per_capita_floorspace[key])
        return min(years), max(years)

    def check_coverage(self, economy: EconomyId, building_type: BuildingType, start: int, end: int) -> None:
        key = (economy, BuildingType.parse(building_type))
        if key not in self.per_capita_floorspace:
            raise DataGapError(f"no demand data for {economy} {key[1].value}")
        for year in range(start, end + 1):
            if year not in self.population[key] or year not in self.per_capita_floorspace[key]:
                raise DataGapError(f"demand for {economy} {key[1].value} missing year {year}", year)


def demand_at(series: DemandSeries, economy: EconomyId, building_type: BuildingType | str, year: int) -> float:
    """Floorspace demand in m2: population times per-capita floorspace."""
    key = (economy, BuildingType.parse(building_type))
    try:
        pop = series.population[key][year]
        pcf = series.per_capita_floorspace[key][year]
    except KeyError:
        raise DataGapError(f"demand for {economy} {key[1].value} missing year {year}", year) from None
    return pop * pcf
