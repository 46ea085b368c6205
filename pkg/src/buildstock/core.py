"""Domain types shared across the stock-turnover model.

Floorspace is always in square metres and time is in whole calendar years.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

MIN_YEAR = 1900
MAX_YEAR = 2100

# Relative tolerance used by the ledger balance and cohort-sum checks.
LEDGER_RTOL = 1e-6

EconomyId = str


class BuildstockError(Exception):
    """Base class for model errors."""


class InvalidParameterError(BuildstockError, ValueError):
    pass


class ConfigurationError(BuildstockError, ValueError):
    pass


class DataGapError(BuildstockError, LookupError):
    def __init__(self, message: str, year: int | None = None):
        super().__init__(message)
        self.year = year


class InvalidComparisonError(BuildstockError, ValueError):
    pass


class BuildingType(str, enum.Enum):
    RESIDENTIAL = "residential"
    NON_RESIDENTIAL = "non-residential"

    @classmethod
    def parse(cls, text: str | "BuildingType") -> "BuildingType":
        if isinstance(text, cls):
            return text
        key = str(text).strip().lower().replace("_", "-").replace(" ", "-")
        aliases = {
            "residential": cls.RESIDENTIAL,
            "res": cls.RESIDENTIAL,
            "non-residential": cls.NON_RESIDENTIAL,
            "nonresidential": cls.NON_RESIDENTIAL,
            "non-res": cls.NON_RESIDENTIAL,
            "nonres": cls.NON_RESIDENTIAL,
        }
        try:
            return aliases[key]
        except KeyError:
            raise InvalidParameterError(f"unknown building type {text!r}") from None


class ScenarioKind(str, enum.Enum):
    NR = "NR"
    BAU = "BAU"
    TEP = "TEP"

    @classmethod
    def parse(cls, text: str | "ScenarioKind") -> "ScenarioKind":
        if isinstance(text, cls):
            return text
        try:
            return cls(str(text).strip().upper())
        except ValueError:
            raise InvalidParameterError(f"unknown scenario {text!r}") from None


def check_year(year: int, what: str = "year") -> int:
    if int(year) != year:
        raise InvalidParameterError(f"{what} must be an integer, got {year!r}")
    if not MIN_YEAR <= year <= MAX_YEAR:
        raise InvalidParameterError(f"{what} {year} outside [{MIN_YEAR}, {MAX_YEAR}]")
    return int(year)


def check_economy(code: EconomyId) -> EconomyId:
    if not isinstance(code, str) or not code.strip():
        raise InvalidParameterError(f"economy code must be a non-empty string, got {code!r}")
    return code.strip()


@dataclass(frozen=True)
class LifetimeDistribution:
    """Normal building lifetime, in years."""

    mean: float
    std_dev: float

    def __post_init__(self):
        if not (self.mean > 0 and np.isfinite(self.mean)):
            raise InvalidParameterError(f"lifetime mean must be positive, got {self.mean!r}")
        if not (self.std_dev > 0 and np.isfinite(self.std_dev)):
            raise InvalidParameterError(f"lifetime std_dev must be positive, got {self.std_dev!r}")


def make_default_lifetime(mean: float) -> LifetimeDistribution:
    """Lifetime with a standard deviation of one third of the mean."""
    if not mean > 0:
        raise InvalidParameterError(f"lifetime mean must be positive, got {mean!r}")
    return LifetimeDistribution(float(mean), mean / 3)


MAX_GENERATION = 2


@dataclass(frozen=True)
class Cohort:
    """Floorspace built (generation 0) or renovated (generation >= 1) in one year."""

    vintage: int
    floorspace: float
    lifetime: LifetimeDistribution
    generation: int = 0

    def __post_init__(self):
        if not self.floorspace >= 0:
            raise InvalidParameterError(f"cohort floorspace must be >= 0, got {self.floorspace!r}")
        if not 0 <= self.generation <= MAX_GENERATION:
            raise InvalidParameterError(
                f"renovation generation must be in [0, {MAX_GENERATION}], got {self.generation}"
            )

    @property
    def is_renovated(self) -> bool:
        return self.generation > 0

    @property
    def provenance(self) -> str:
        return f"Renovated({self.generation})" if self.generation else "NewBuild"

    def age(self, year: int) -> int:
        return year - self.vintage

    def reduced(self, amount: float) -> "Cohort":
        if amount < 0:
            raise InvalidParameterError("cannot reduce a cohort by a negative amount")
        return Cohort(self.vintage, max(0.0, self.floorspace - amount), self.lifetime, self.generation)


FLOW_FIELDS = ("demolished", "renovated", "demolished_renovated", "new_construction", "written_off")


@dataclass(frozen=True)
class YearRecord:
    """One year of a ledger.

    ``stock_total`` is the reported building stock: new-build floorspace
    still in its original service life. Floorspace kept in service by
    renovation is ``renovated_stock``; together they make up ``in_service``.
    ``reference_stock`` is the stock the same demand would need with no
    renovation at all.
    """

    year: int
    stock_total: float
    demolished: float = 0.0
    renovated: float = 0.0
    demolished_renovated: float = 0.0
    new_construction: float = 0.0
    # Part of DB the reported stock did not hold (it never goes below zero).
    written_off: float = 0.0
    # In-service floorspace above demand that clamping new construction at
    # zero could not remove.
    surplus: float = 0.0
    renovated_stock: float = 0.0
    reference_stock: float = 0.0
    cohort_total: float = 0.0

    @property
    def in_service(self) -> float:
        return self.stock_total + self.renovated_stock


@dataclass
class StockLedger:
    """Year-by-year accounting for one (economy, building type, scenario)."""

    economy: EconomyId
    building_type: BuildingType
    scenario: ScenarioKind
    records: list[YearRecord] = field(default_factory=list)
    # Cohort snapshots: year -> tuple of cohorts alive at the end of that year.
    _snapshots: dict[int, tuple] = field(default_factory=dict, repr=False)

    def append(self, record: YearRecord, snapshot=None) -> None:
        if self.records and record.year != self.records[-1].year + 1:
            raise InvalidParameterError(
                f"ledger years must be contiguous: {self.records[-1].year} then {record.year}"
            )
        for name in FLOW_FIELDS:
            if getattr(record, name) < 0:
                raise InvalidParameterError(f"negative flow {name} in {record.year}")
        self.records.append(record)
        if snapshot is not None:
            self._snapshots[record.year] = snapshot

    @property
    def key(self) -> tuple[EconomyId, BuildingType, ScenarioKind]:
        return (self.economy, self.building_type, self.scenario)

    @property
    def years(self) -> np.ndarray:
        return np.array([r.year for r in self.records], dtype=int)

    @property
    def start(self) -> int:
        return self.records[0].year

    @property
    def end(self) -> int:
        return self.records[-1].year

    def series(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records], dtype=float)

    def record(self, year: int) -> YearRecord:
        if not self.records or not self.start <= year <= self.end:
            raise DataGapError(f"ledger has no entry for {year}", year)
        return self.records[year - self.start]

    def stock_at(self, year: int) -> float:
        return self.record(year).stock_total

    def cohorts_at(self, year: int) -> tuple[Cohort, ...]:
        if year not in self._snapshots:
            raise DataGapError(f"no cohort snapshot kept for {year}", year)
        snap = self._snapshots[year]
        return snap() if callable(snap) else snap

    def in_service(self) -> np.ndarray:
        return self.series("stock_total") + self.series("renovated_stock")

    def balance_residuals(self) -> np.ndarray:
        """Relative residual of ``in_service_t = in_service_{t-1} - DB - DRB + RB + NC``.

        Any ``written_off`` demolition is added back on the right-hand side.
        """
        total = self.in_service()
        if len(total) < 2:
            return np.zeros(0)
        expected = (
            total[:-1]
            - self.series("demolished")[1:]
            - self.series("demolished_renovated")[1:]
            + self.series("renovated")[1:]
            + self.series("new_construction")[1:]
            + self.series("written_off")[1:]
        )
        return (total[1:] - expected) / np.maximum(np.abs(total[1:]), 1.0)

    def stock_residuals(self) -> np.ndarray:
        """Relative residual of ``stock_t = stock_{t-1} - DB + NC`` (plus any write-off)."""
        stock = self.series("stock_total")
        if len(stock) < 2:
            return np.zeros(0)
        expected = (
            stock[:-1]
            - self.series("demolished")[1:]
            + self.series("new_construction")[1:]
            + self.series("written_off")[1:]
        )
        return (stock[1:] - expected) / np.maximum(np.abs(stock[1:]), 1.0)

    def cohort_residuals(self) -> np.ndarray:
        """Relative gap between the cohort sum and reference plus renovated stock."""
        total = self.series("reference_stock") + self.series("renovated_stock")
        return (total - self.series("cohort_total")) / np.maximum(np.abs(total), 1.0)

    def check_balance(self, rtol: float = LEDGER_RTOL) -> None:
        years = self.years
        checks = (
            ("in-service balance", self.balance_residuals(), years[1:]),
            ("reported-stock balance", self.stock_residuals(), years[1:]),
            ("cohort sum", self.cohort_residuals(), years),
        )
        for what, res, ys in checks:
            bad = np.flatnonzero(np.abs(res) > rtol)
            if bad.size:
                raise AssertionError(
                    f"{what} violated in {int(ys[bad[0]])}: relative residual {res[bad[0]]:.3e}"
                )


def total_floorspace(cohorts: Iterable[Cohort]) -> float:
    return float(sum(c.floorspace for c in cohorts))
