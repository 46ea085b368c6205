"""Yearly cohort turnover: demolition, renovation, and demand-driven construction.

Each simulated year runs, in order:

1. demolition of new-build cohorts by lifetime hazard (DB);
2. demolition of renovated cohorts by renovation-cycle hazard (DRB);
3. renovation of ``rate * DB`` into a fresh renovated cohort (RB), plus
   re-renovation of first-generation demolitions when the policy allows;
4. new construction (NC >= 0) to meet demand.

The new-build cohorts form the reference stock: they are built to meet
demand and demolished exactly as they would be without renovation, so DB
is the same in every scenario that shares lifetimes. Renovation intercepts
a share of DB and keeps it in service, and each unit kept in service is a
unit that need not be built. The reported building stock is therefore the
reference stock minus the renovated floorspace still standing,
``BS_t = BS^NR_t - sum(RB - DRB)``. When demand falls faster than
buildings retire, NC clamps at zero, the reported stock only shrinks by DB,
and the excess over demand is kept as ``surplus``. Demolition that
would take the reported stock below zero is booked as ``written_off``.

Cohorts renovated in year t are first exposed to demolition in t + 1.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .core import (
    LEDGER_RTOL,
    Cohort,
    InvalidParameterError,
    LifetimeDistribution,
    StockLedger,
    YearRecord,
    check_year,
)
from .scenario import DemandSeries, ScenarioPolicy, demand_at
from .survival import HazardTable, build_hazard_table

UNIFORM = "uniform"
SINGLE_VINTAGE = "single"


def demolish_vintage(cohort: Cohort, year: int, table: HazardTable | None = None) -> float:
    """Floorspace of ``cohort`` demolished in ``year``."""
    if year < cohort.vintage:
        raise InvalidParameterError(f"year {year} precedes cohort vintage {cohort.vintage}")
    age = year - cohort.vintage
    if age == 0 or cohort.floorspace == 0:
        return 0.0
    table = table or build_hazard_table(cohort.lifetime)
    return cohort.floorspace * table.hazard(age)


def total_demolition(cohorts: Iterable[Cohort], year: int) -> float:
    return float(sum(demolish_vintage(c, year) for c in cohorts if c.vintage <= year and not c.is_renovated))


def renovate(db: float, rate: float) -> float:
    if not 0 <= rate <= 1:
        raise InvalidParameterError(f"renovation rate must lie in [0, 1], got {rate!r}")
    if db < 0:
        raise InvalidParameterError(f"demolished floorspace must be >= 0, got {db!r}")
    return rate * db


def demolish_renovated(cohorts: Iterable[Cohort], year: int) -> float:
    total = 0.0
    for c in cohorts:
        if not c.is_renovated:
            raise InvalidParameterError(f"cohort {c.vintage} is not renovated")
        if c.vintage <= year:
            total += demolish_vintage(c, year)
    return total


class _Pool:
    """Cohorts of one renovation generation held as parallel arrays."""

    def __init__(self, generation: int, capacity: int = 64):
        self.generation = generation
        self.n = 0
        self.vintage = np.zeros(capacity, dtype=np.int64)
        self.area = np.zeros(capacity)
        self.row = np.zeros(capacity, dtype=np.int64)

    def add(self, vintage: int, area: float, row: int) -> None:
        if self.n == self.vintage.size:
            grow = max(64, self.n)
            self.vintage = np.concatenate((self.vintage, np.zeros(grow, dtype=np.int64)))
            self.area = np.concatenate((self.area, np.zeros(grow)))
            self.row = np.concatenate((self.row, np.zeros(grow, dtype=np.int64)))
        self.vintage[self.n] = vintage
        self.area[self.n] = area
        self.row[self.n] = row
        self.n += 1

    def demolish(self, year: int, hazards: np.ndarray) -> tuple[float, np.ndarray]:
        n = self.n
        if n == 0:
            return 0.0, self.area[:0]
        age = np.minimum(year - self.vintage[:n], hazards.shape[1] - 1)
        out = self.area[:n] * hazards[self.row[:n], age]
        self.area[:n] -= out
        # Guard against -0.0 / rounding below zero.
        np.maximum(self.area[:n], 0.0, out=self.area[:n])
        return float(out.sum()), out

    def total(self) -> float:
        return float(self.area[: self.n].sum())

    def copy_state(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        n = self.n
        return self.vintage[:n].copy(), self.area[:n].copy(), self.row[:n].copy()


@dataclass
class EngineState:
    """Mutable state of one (economy, building type, scenario) run."""

    ledger: StockLedger
    current_year: int
    hazard_cache: dict[LifetimeDistribution, HazardTable] = field(default_factory=dict)
    truncate_cdf: bool = False
    keep_cohorts: bool = True
    pools: tuple[_Pool, _Pool, _Pool] = field(default_factory=lambda: (_Pool(0), _Pool(1), _Pool(2)))
    _rows: dict[LifetimeDistribution, int] = field(default_factory=dict)
    _dists: list[LifetimeDistribution] = field(default_factory=list)
    _matrix: np.ndarray = field(default_factory=lambda: np.ones((0, 2)))

    def table(self, dist: LifetimeDistribution) -> HazardTable:
        table = self.hazard_cache.get(dist)
        if table is None:
            table = build_hazard_table(dist, self.truncate_cdf)
            self.hazard_cache[dist] = table
        return table

    def row_for(self, dist: LifetimeDistribution) -> int:
        row = self._rows.get(dist)
        if row is not None:
            return row
        table = self.table(dist)
        width = max(self._matrix.shape[1], table.horizon + 2)
        matrix = np.ones((len(self._dists) + 1, width))
        matrix[:-1, : self._matrix.shape[1]] = self._matrix
        matrix[-1, : table.horizon + 1] = table.hazards
        matrix[:, 0] = 0.0
        self._matrix = matrix
        self._dists.append(dist)
        self._rows[dist] = row = len(self._dists) - 1
        return row

    @property
    def hazard_matrix(self) -> np.ndarray:
        return self._matrix

    def add_cohort(self, cohort: Cohort) -> None:
        self.pools[cohort.generation].add(cohort.vintage, cohort.floorspace, self.row_for(cohort.lifetime))

    def cohorts(self) -> tuple[Cohort, ...]:
        return self._materialise(tuple(p.copy_state() for p in self.pools))

    def _materialise(self, states) -> tuple[Cohort, ...]:
        out = []
        for gen, (vintage, area, row) in enumerate(states):
            for v, a, r in zip(vintage, area, row):
                out.append(Cohort(int(v), float(a), self._dists[r], gen))
        return tuple(out)

    def snapshot(self):
        states = tuple(p.copy_state() for p in self.pools)
        return lambda: self._materialise(states)

    @property
    def new_build_stock(self) -> float:
        return self.pools[0].total()

    @property
    def renovated_stock(self) -> float:
        return self.pools[1].total() + self.pools[2].total()

    @property
    def cohort_total(self) -> float:
        return self.new_build_stock + self.renovated_stock


def step_year(state: EngineState, demand: float, policy: ScenarioPolicy) -> EngineState:
    """Advance ``state`` by one year; ``demand`` is the floorspace that must be in service."""
    if demand < 0:
        raise InvalidParameterError(f"demand must be >= 0, got {demand!r}")
    year = state.current_year + 1
    matrix = state.hazard_matrix
    new, gen1, gen2 = state.pools
    prev_stock = state.ledger.records[-1].stock_total

    db, _ = new.demolish(year, matrix)
    drb1, _ = gen1.demolish(year, matrix)
    drb2, _ = gen2.demolish(year, matrix)

    rb1 = renovate(db, policy.first_rate(year))
    rb2 = renovate(drb1, policy.second_rate(year))
    cycle = policy.renovation_lifetime
    if rb1 > 0:
        gen1.add(year, rb1, state.row_for(cycle))
    if rb2 > 0:
        gen2.add(year, rb2, state.row_for(cycle))
    renovated_stock = gen1.total() + gen2.total()

    # Reference stock: rebuilt to demand as if nothing were renovated.
    reference = new.total()
    built = demand - reference
    if built > 0:
        new.add(year, built, state.row_for(policy.lifetime_for_vintage(year)))
        reference = demand

    target = reference - renovated_stock
    # DB comes from the reference stock; the reported stock cannot lose
    # more new-build floorspace than it holds.
    written_off = max(0.0, db - prev_stock)
    floor = prev_stock - db + written_off
    if target > floor:
        nc = target - floor
        stock = target
    else:
        nc = 0.0
        stock = floor
    # Excess in service: the reference stock above demand plus any reported
    # stock kept above its target because NC could not go negative.
    surplus = max(0.0, reference - demand) + max(0.0, stock - target)
    state.current_year = year
    state.ledger.append(
        YearRecord(
            year=year,
            stock_total=stock,
            demolished=db,
            renovated=rb1 + rb2,
            demolished_renovated=drb1 + drb2,
            new_construction=nc,
            written_off=written_off,
            surplus=surplus,
            renovated_stock=renovated_stock,
            reference_stock=reference,
            cohort_total=state.cohort_total,
        ),
        state.snapshot() if state.keep_cohorts else None,
    )
    return state


@dataclass
class SimulationResult:
    ledger: StockLedger
    policy: ScenarioPolicy
    demand: dict[int, float]

    @property
    def key(self):
        return self.ledger.key

    @property
    def years(self) -> np.ndarray:
        return self.ledger.years

    def stock(self) -> np.ndarray:
        return self.ledger.series("stock_total")

    def series(self, name: str) -> np.ndarray:
        return self.ledger.series(name)


def seed_cohorts(
    policy: ScenarioPolicy, start: int, stock: float, strategy: str = UNIFORM
) -> list[Cohort]:
    """Split the opening stock across pre-start vintages.

    ``uniform`` spreads it evenly over the mean-lifetime years before
    ``start``; ``single`` puts it all in the vintage half a mean lifetime back.
    """
    mean = policy.lifetime_for_vintage(start - 1).mean
    span = max(1, int(round(mean)))
    if strategy == UNIFORM:
        vintages = range(start - span, start)
    elif strategy == SINGLE_VINTAGE:
        vintages = [start - max(1, int(round(mean / 2)))]
    else:
        raise InvalidParameterError(f"unknown seed strategy {strategy!r}")
    share = stock / len(vintages)
    return [Cohort(v, share, policy.lifetime_for_vintage(v)) for v in vintages]


def new_state(
    policy: ScenarioPolicy,
    start: int,
    *,
    truncate_cdf: bool = False,
    keep_cohorts: bool = True,
    hazard_cache: Mapping[LifetimeDistribution, HazardTable] | None = None,
) -> EngineState:
    ledger = StockLedger(policy.economy, policy.building_type, policy.scenario)
    return EngineState(
        ledger,
        start,
        hazard_cache=dict(hazard_cache or {}),
        truncate_cdf=truncate_cdf,
        keep_cohorts=keep_cohorts,
    )


def run_simulation(
    policy: ScenarioPolicy,
    demand: DemandSeries,
    start: int,
    end: int,
    *,
    seed_strategy: str = UNIFORM,
    truncate_cdf: bool = False,
    keep_cohorts: bool = True,
    initial_cohorts: Iterable[Cohort] | None = None,
    hazard_cache: Mapping[LifetimeDistribution, HazardTable] | None = None,
) -> SimulationResult:
    """Simulate ``start``..``end`` for the policy's (economy, building type, scenario).

    The opening stock equals demand in ``start`` and is seeded across
    pre-start vintages unless ``initial_cohorts`` is given.
    """
    check_year(start, "start year")
    check_year(end, "end year")
    if not start < end:
        raise InvalidParameterError(f"start {start} must precede end {end}")
    demand.check_coverage(policy.economy, policy.building_type, start, end)
    targets = {y: demand_at(demand, policy.economy, policy.building_type, y) for y in range(start, end + 1)}

    state = new_state(
        policy,
        start,
        truncate_cdf=truncate_cdf,
        keep_cohorts=keep_cohorts,
        hazard_cache=hazard_cache,
    )
    if initial_cohorts is None:
        initial_cohorts = seed_cohorts(policy, start, targets[start], seed_strategy)
    for c in initial_cohorts:
        if c.vintage > start:
            raise InvalidParameterError(f"initial cohort vintage {c.vintage} is after {start}")
        state.add_cohort(c)
    opening = state.new_build_stock
    # Report the demand value itself when the seed reproduces it, so the
    # no-renovation stock is exactly population x per-capita floorspace.
    close = abs(opening - targets[start]) <= LEDGER_RTOL * max(abs(opening), 1.0)
    reference = targets[start] if close else opening
    renovated = state.renovated_stock
    state.ledger.append(
        YearRecord(
            year=start,
            stock_total=reference - renovated,
            surplus=max(0.0, reference - targets[start]),
            renovated_stock=renovated,
            reference_stock=reference,
            cohort_total=state.cohort_total,
        ),
        state.snapshot() if keep_cohorts else None,
    )

    for year in range(start + 1, end + 1):
        step_year(state, targets[year], policy)
    return SimulationResult(state.ledger, policy, targets)

