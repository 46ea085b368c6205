"""Scenario comparisons, avoided construction and embodied carbon of new floorspace."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .core import BuildingType, EconomyId, InvalidComparisonError, InvalidParameterError, ScenarioKind
from .engine import SimulationResult

KG_PER_MT = 1e9


@dataclass(frozen=True)
class ScenarioDelta:
    economy: EconomyId
    building_type: BuildingType
    year: int
    baseline: ScenarioKind
    variant: ScenarioKind
    baseline_stock: float
    variant_stock: float
    absolute: float
    relative: float  # NaN when the baseline stock is zero

    @property
    def relative_defined(self) -> bool:
        return not math.isnan(self.relative)


def _check_pair(a: SimulationResult, b: SimulationResult) -> None:
    if a.ledger.economy != b.ledger.economy or a.ledger.building_type != b.ledger.building_type:
        raise InvalidComparisonError(
            f"cannot compare {a.ledger.economy}/{a.ledger.building_type.value} "
            f"with {b.ledger.economy}/{b.ledger.building_type.value}"
        )


def scenario_delta(baseline: SimulationResult, variant: SimulationResult, year: int) -> ScenarioDelta:
    """Stock reduction of ``variant`` relative to ``baseline`` in ``year``."""
    _check_pair(baseline, variant)
    base = baseline.ledger.stock_at(year)
    var = variant.ledger.stock_at(year)
    absolute = base - var
    relative = absolute / base if base > 0 else math.nan
    return ScenarioDelta(
        baseline.ledger.economy,
        baseline.ledger.building_type,
        year,
        baseline.ledger.scenario,
        variant.ledger.scenario,
        base,
        var,
        absolute,
        relative,
    )


def _check_span(a: SimulationResult, b: SimulationResult) -> None:
    _check_pair(a, b)
    if a.ledger.start != b.ledger.start or a.ledger.end != b.ledger.end:
        raise InvalidComparisonError(
            f"span mismatch: {a.ledger.start}-{a.ledger.end} vs {b.ledger.start}-{b.ledger.end}"
        )


def avoided_construction(nr: SimulationResult, scenario: SimulationResult) -> dict[int, float]:
    """New construction the no-renovation run needs beyond ``scenario``, per year."""
    _check_span(nr, scenario)
    diff = nr.series("new_construction") - scenario.series("new_construction")
    return {int(y): float(d) for y, d in zip(nr.years, diff)}


def net_renovated(scenario: SimulationResult) -> np.ndarray:
    """Cumulative RB - DRB by year."""
    return np.cumsum(scenario.series("renovated") - scenario.series("demolished_renovated"))


def avoided_construction_identity(nr: SimulationResult, scenario: SimulationResult) -> np.ndarray:
    """Cumulative avoided construction predicted from the two runs' flows.

    Cumulative ``RB - DRB`` of the scenario, plus extra demolition in the
    no-renovation run, plus the difference in surplus, less the difference
    in written-off floorspace. With shared lifetimes and no clamping only
    the first term is non-zero.
    """
    _check_span(nr, scenario)
    extra_db = np.cumsum(nr.series("demolished") - scenario.series("demolished"))
    written_off = np.cumsum(nr.series("written_off") - scenario.series("written_off"))
    surplus = nr.series("surplus") - scenario.series("surplus")
    surplus = surplus - surplus[0]
    return net_renovated(scenario) + extra_db + surplus - written_off


@dataclass(frozen=True)
class EmbodiedCarbonSeries:
    years: np.ndarray
    new_construction: np.ndarray  # m2
    intensity: np.ndarray  # kgCO2 per m2
    emissions: np.ndarray  # MtCO2

    @property
    def cumulative(self) -> float:
        return float(self.emissions.sum())

    def as_dict(self) -> dict[int, float]:
        return {int(y): float(e) for y, e in zip(self.years, self.emissions)}


def embodied_carbon(
    nc_series: Mapping[int, float], intensity: Mapping[int, float] | float
) -> EmbodiedCarbonSeries:
    """MtCO2 released by new construction: ``NC [m2] * intensity [kgCO2/m2] / 1e9``."""
    years = np.array(sorted(nc_series), dtype=int)
    nc = np.array([nc_series[y] for y in years], dtype=float)
    if isinstance(intensity, Mapping):
        missing = [int(y) for y in years if y not in intensity]
        if missing:
            raise InvalidParameterError(f"no carbon intensity for year {missing[0]}")
        ci = np.array([intensity[y] for y in years], dtype=float)
    else:
        ci = np.full(years.shape, float(intensity))
    if np.any(ci < 0) or not np.all(np.isfinite(ci)):
        raise InvalidParameterError("carbon intensity must be finite and >= 0")
    return EmbodiedCarbonSeries(years, nc, ci, nc * ci / KG_PER_MT)


def construction_series(result: SimulationResult, start: int | None = None, end: int | None = None) -> dict[int, float]:
    years = result.years
    nc = result.series("new_construction")
    lo = years[0] if start is None else start
    hi = years[-1] if end is None else end
    return {int(y): float(v) for y, v in zip(years, nc) if lo <= y <= hi}


def aggregate_stock(results: Iterable[SimulationResult]) -> dict[int, float]:
    """Sum of reported stock by year across results sharing one span."""
    total: dict[int, float] = {}
    for r in results:
        for y, s in zip(r.years, r.stock()):
            total[int(y)] = total.get(int(y), 0.0) + float(s)
    return total
