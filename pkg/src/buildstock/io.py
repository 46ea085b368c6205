"""File formats: demand anchors, policy tables, run configs, result exports."""
from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import os
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .core import (
    BuildingType,
    ConfigurationError,
    EconomyId,
    InvalidParameterError,
    ScenarioKind,
    check_year,
)
from .engine import SINGLE_VINTAGE, UNIFORM, SimulationResult, run_simulation
from .scenario import (
    AVERAGE,
    INITIAL,
    RAMP_END,
    RAMP_START,
    DemandSeries,
    ParameterTable,
    PolicyRow,
    build_policy,
    interpolate_endpoint_series,
)

log = logging.getLogger(__name__)

SQFT_PER_M2 = 10.7639
DATA_DIR_ENV = "BUILDSTOCK_DATA_DIR"

POPULATION_FILE = "population.csv"
FLOORSPACE_FILE = "floorspace.csv"
POLICY_FILE = "policy_table.csv"

RESULT_COLUMNS = (
    "economy",
    "building_type",
    "scenario",
    "year",
    "stock_m2",
    "DB",
    "RB",
    "DRB",
    "NC",
    "renovated_stock_m2",
    "surplus_m2",
)
_LEDGER_FIELDS = {
    "stock_m2": "stock_total",
    "DB": "demolished",
    "RB": "renovated",
    "DRB": "demolished_renovated",
    "NC": "new_construction",
    "renovated_stock_m2": "renovated_stock",
    "surplus_m2": "surplus",
}


class ParseError(ConfigurationError):
    def __init__(self, path, line: int | None, message: str):
        where = f"{path}:{line}" if line is not None else str(path)
        super().__init__(f"{where}: {message}")
        self.path = str(path)
        self.line = line


class CoverageError(ConfigurationError):
    pass


def data_path(name: str) -> Path:
    """Default location of a shipped data file, honouring ``BUILDSTOCK_DATA_DIR``."""
    override = os.environ.get(DATA_DIR_ENV)
    if override:
        return Path(override) / name
    return Path(str(resources.files("buildstock") / "data" / name))


def _rows(path: Path, required: Iterable[str]):
    """Yield (line number, row dict) from a headed CSV file."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        missing = [c for c in required if c not in (reader.fieldnames or [])]
        if missing:
            raise ParseError(path, 1, f"missing column(s) {', '.join(missing)}")
        for row in reader:
            if not any((v or "").strip() for v in row.values() if isinstance(v, str)):
                continue
            yield reader.line_num, {k: (v or "").strip() for k, v in row.items() if k is not None}


def _number(path, line, row, name, *, allow_blank=False, percent=False) -> float | None:
    text = row.get(name, "")
    if text == "":
        if allow_blank:
            return None
        raise ParseError(path, line, f"missing value for {name}")
    if percent and text.endswith("%"):
        text = text[:-1]
    try:
        value = float(text)
    except ValueError:
        raise ParseError(path, line, f"{name}={row.get(name)!r} is not a number") from None
    if not math.isfinite(value):
        raise ParseError(path, line, f"{name} must be finite")
    return value


def _year(path, line, row, name="year", allow_blank=False) -> int | None:
    value = _number(path, line, row, name, allow_blank=allow_blank)
    if value is None:
        return None
    if value != int(value):
        raise ParseError(path, line, f"{name} must be an integer year")
    try:
        return check_year(int(value), name)
    except InvalidParameterError as exc:
        raise ParseError(path, line, str(exc)) from None


def _building_type(path, line, text) -> BuildingType:
    try:
        return BuildingType.parse(text)
    except InvalidParameterError as exc:
        raise ParseError(path, line, str(exc)) from None


def load_demand(
    population_file: Path | str | None = None,
    floorspace_file: Path | str | None = None,
    span: tuple[int, int] | None = None,
) -> DemandSeries:
    """Read population and per-capita floorspace anchors and densify them to annual values.

    ``population_file`` has columns ``economy, year, population``;
    ``floorspace_file`` has ``economy, building_type, year,
    per_capita_floorspace`` and an optional ``unit`` (``m2`` or ``ft2``).
    """
    pop_path = Path(population_file) if population_file else data_path(POPULATION_FILE)
    fs_path = Path(floorspace_file) if floorspace_file else data_path(FLOORSPACE_FILE)

    population: dict[EconomyId, dict[int, float]] = {}
    for line, row in _rows(pop_path, ("economy", "year", "population")):
        economy = row["economy"]
        if not economy:
            raise ParseError(pop_path, line, "empty economy code")
        year = _year(pop_path, line, row)
        value = _number(pop_path, line, row, "population")
        if value < 0:
            raise ParseError(pop_path, line, f"negative population {value}")
        if year in population.setdefault(economy, {}):
            raise ParseError(pop_path, line, f"duplicate population for {economy} {year}")
        population[economy][year] = value

    per_capita: dict[tuple[EconomyId, BuildingType], dict[int, float]] = {}
    for line, row in _rows(fs_path, ("economy", "building_type", "year", "per_capita_floorspace")):
        economy = row["economy"]
        if not economy:
            raise ParseError(fs_path, line, "empty economy code")
        btype = _building_type(fs_path, line, row["building_type"])
        year = _year(fs_path, line, row)
        value = _number(fs_path, line, row, "per_capita_floorspace")
        unit = row.get("unit", "").lower() or "m2"
        if unit in ("ft2", "sqft"):
            value = value / SQFT_PER_M2
        elif unit != "m2":
            raise ParseError(fs_path, line, f"unknown unit {row.get('unit')!r}")
        if value < 0:
            raise ParseError(fs_path, line, f"negative per-capita floorspace {value}")
        anchors = per_capita.setdefault((economy, btype), {})
        if year in anchors:
            raise ParseError(fs_path, line, f"duplicate floorspace for {economy} {btype.value} {year}")
        anchors[year] = value

    if span is None:
        years = [y for a in population.values() for y in a] + [y for a in per_capita.values() for y in a]
        if not years:
            raise ParseError(fs_path, None, "no demand anchors")
        span = (min(years), max(years))

    series = DemandSeries()
    for (economy, btype), anchors in per_capita.items():
        if economy not in population:
            raise CoverageError(f"{pop_path}: no population for economy {economy} used in {fs_path}")
        years = list(population[economy]) + list(anchors)
        full = (min(min(years), span[0]), max(max(years), span[1]))
        try:
            pop = interpolate_endpoint_series(population[economy], full)
            pcf = interpolate_endpoint_series(anchors, full)
        except ConfigurationError as exc:
            raise CoverageError(f"{economy} {btype.value}: {exc}") from None
        series.add(economy, btype, pop, pcf)
    return series


POLICY_COLUMNS = (
    "scenario",
    "economy",
    "building_type",
    "average_lifetime",
    "initial_lifetime",
)


def load_policy_table(path: Path | str | None = None) -> dict:
    """Parse a renovation parameter table; rates are given in percent."""
    path = Path(path) if path else data_path(POLICY_FILE)
    table: dict = {}
    for line, row in _rows(path, POLICY_COLUMNS):
        token = row["scenario"].upper()
        if token not in (ScenarioKind.BAU.value, ScenarioKind.TEP.value):
            raise ParseError(path, line, f"unknown scenario token {row['scenario']!r} (expected BAU or TEP)")
        scenario = ScenarioKind(token)
        economy = row["economy"]
        if not economy:
            raise ParseError(path, line, "empty economy code")
        btype = _building_type(path, line, row["building_type"])

        def num(name, percent=False):
            return _number(path, line, row, name, allow_blank=True, percent=percent)

        rates = {}
        for name in ("first_rate_min", "first_rate_max", "second_rate_min", "second_rate_max"):
            value = num(name, percent=True)
            if value is not None and not 0 <= value <= 100:
                raise ParseError(path, line, f"{name}={row[name]} outside [0, 100]%")
            rates[name] = None if value is None else value / 100.0
        for prefix in ("first", "second"):
            lo, hi = rates[f"{prefix}_rate_min"], rates[f"{prefix}_rate_max"]
            if (lo is None) != (hi is None):
                raise ParseError(path, line, f"{prefix} renovation needs both min and max rates")
            if lo is not None and lo > hi:
                raise ParseError(path, line, f"{prefix} renovation min rate exceeds max")
        if rates["second_rate_max"] is not None and rates["first_rate_max"] is None:
            raise ParseError(path, line, "second renovation without a first renovation")

        average = num("average_lifetime")
        initial = num("initial_lifetime")
        cycle = num("renovation_cycle")
        for name, value in (("average_lifetime", average), ("initial_lifetime", initial), ("renovation_cycle", cycle)):
            if value is not None and value <= 0:
                raise ParseError(path, line, f"{name} must be positive")
        if average is None or initial is None:
            raise ParseError(path, line, "average_lifetime and initial_lifetime are required")
        if rates["first_rate_max"] is not None and cycle is None:
            raise ParseError(path, line, "renovating row needs a renovation_cycle")

        shape = (row.get("ramp_shape") or "linear").lower()
        step = num("ramp_step", percent=True)
        if shape == "increment":
            if step is None or step < 0:
                raise ParseError(path, line, "increment ramp needs a non-negative ramp_step")
            step = step / 100.0
        elif shape == "linear":
            step = None
        else:
            raise ParseError(path, line, f"unknown ramp_shape {row.get('ramp_shape')!r}")
        ramp_start = _year(path, line, row, "ramp_start", allow_blank=True) or RAMP_START
        ramp_end = _year(path, line, row, "ramp_end", allow_blank=True) or RAMP_END
        if ramp_start >= ramp_end:
            raise ParseError(path, line, "ramp_start must precede ramp_end")

        late_average = num("average_lifetime_late")
        late_initial = num("initial_lifetime_late")
        switch = _year(path, line, row, "lifetime_switch_year", allow_blank=True)
        if (late_average is not None or late_initial is not None) and switch is None:
            raise ParseError(path, line, "late lifetimes need a lifetime_switch_year")

        policy_row = PolicyRow(
            scenario=scenario,
            economy=economy,
            building_type=btype,
            average_lifetime=average,
            initial_lifetime=initial,
            average_lifetime_late=late_average,
            initial_lifetime_late=late_initial,
            lifetime_switch_year=switch,
            renovation_cycle=cycle,
            ramp_step=step,
            ramp_start=ramp_start,
            ramp_end=ramp_end,
            **rates,
        )
        if policy_row.key in table:
            raise ParseError(path, line, f"duplicate row for {token}, {economy}, {btype.value}")
        table[policy_row.key] = policy_row
    return table


@dataclass
class RunConfig:
    economies: list[EconomyId] | None = None  # None: every economy with demand data
    building_types: list[BuildingType] = field(default_factory=lambda: list(BuildingType))
    scenarios: list[ScenarioKind] = field(default_factory=lambda: list(ScenarioKind))
    start_year: int = 2000
    end_year: int = 2070
    population_file: str | None = None
    floorspace_file: str | None = None
    policy_file: str | None = None
    seed_strategy: str = UNIFORM
    truncate_cdf_at_zero: bool = False
    lifetime_basis: str = INITIAL
    output_dir: str = "out"
    format: str = "csv"

    def __post_init__(self):
        self.building_types = [BuildingType.parse(t) for t in self.building_types]
        self.scenarios = [ScenarioKind.parse(s) for s in self.scenarios]
        check_year(self.start_year, "start_year")
        check_year(self.end_year, "end_year")
        if not self.start_year < self.end_year:
            raise ConfigurationError(f"start_year {self.start_year} must precede end_year {self.end_year}")
        if self.economies is not None and not self.economies:
            raise ConfigurationError("economies list is empty")
        if not self.building_types or not self.scenarios:
            raise ConfigurationError("building_types and scenarios must be non-empty")
        if self.seed_strategy not in (UNIFORM, SINGLE_VINTAGE):
            raise ConfigurationError(f"seed_strategy must be {UNIFORM!r} or {SINGLE_VINTAGE!r}")
        if self.lifetime_basis not in (AVERAGE, INITIAL):
            raise ConfigurationError(f"lifetime_basis must be {AVERAGE!r} or {INITIAL!r}")
        if self.format not in ("csv", "json"):
            raise ConfigurationError(f"format must be csv or json, got {self.format!r}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["building_types"] = [t.value for t in self.building_types]
        d["scenarios"] = [s.value for s in self.scenarios]
        return d


def load_config(path: Path | str) -> RunConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(path, exc.lineno, f"invalid JSON: {exc.msg}") from None
    if not isinstance(raw, dict):
        raise ParseError(path, None, "config must be a JSON object")
    known = set(RunConfig.__dataclass_fields__)
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ParseError(path, None, f"unknown config key(s): {', '.join(unknown)}")
    base = path.parent
    for key in ("population_file", "floorspace_file", "policy_file"):
        if raw.get(key):
            raw[key] = str((base / raw[key]).resolve()) if not Path(raw[key]).is_absolute() else raw[key]
    try:
        return RunConfig(**raw)
    except (InvalidParameterError, ConfigurationError) as exc:
        raise ParseError(path, None, str(exc)) from None


ResultKey = tuple[EconomyId, BuildingType, ScenarioKind]


def run_all(
    config: RunConfig, demand: DemandSeries | None = None, params: ParameterTable | None = None
) -> dict[ResultKey, SimulationResult]:
    """Run every configured (economy, building type, scenario).

    Renovating scenarios are skipped, with a warning, for economies that
    have no parameter row; they run NR only.
    """
    if demand is None:
        demand = load_demand(config.population_file, config.floorspace_file, (config.start_year, config.end_year))
    if params is None:
        params = load_policy_table(config.policy_file)
    economies = config.economies if config.economies is not None else demand.economies
    results: dict[ResultKey, SimulationResult] = {}
    for economy in economies:
        for btype in config.building_types:
            if (economy, btype) not in demand.per_capita_floorspace:
                raise CoverageError(f"no demand data for {economy} {btype.value}")
            for scenario in config.scenarios:
                if scenario is not ScenarioKind.NR and (scenario, economy, btype) not in params:
                    log.info("no %s parameters for %s %s; skipped", scenario.value, economy, btype.value)
                    continue
                policy = build_policy(scenario, economy, btype, params, config.lifetime_basis)
                results[(economy, btype, scenario)] = run_simulation(
                    policy,
                    demand,
                    config.start_year,
                    config.end_year,
                    seed_strategy=config.seed_strategy,
                    truncate_cdf=config.truncate_cdf_at_zero,
                    keep_cohorts=False,
                )
    return results


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=str)


def inputs_digest(config: RunConfig, demand: DemandSeries, params: ParameterTable) -> str:
    """SHA-256 over every input value that can change a run."""
    cfg = config.to_dict()
    for key in ("output_dir", "format"):
        cfg.pop(key, None)
    payload = {
        "config": cfg,
        "demand": [
            [e, t.value, sorted(demand.population[(e, t)].items()), sorted(demand.per_capita_floorspace[(e, t)].items())]
            for e, t in demand.keys
        ],
        "policy": sorted(
            [[k[0].value, k[1], k[2].value], {n: (v.value if hasattr(v, "value") else v) for n, v in asdict(r).items()}]
            for k, r in params.items()
        ),
    }
    return hashlib.sha256(_canonical(payload).encode()).hexdigest()


def _result_rows(results: Mapping[ResultKey, SimulationResult]):
    for key in sorted(results, key=lambda k: (k[0], k[1].value, k[2].value)):
        ledger = results[key].ledger
        for rec in ledger.records:
            row = [ledger.economy, ledger.building_type.value, ledger.scenario.value, rec.year]
            row += [getattr(rec, _LEDGER_FIELDS[c]) for c in RESULT_COLUMNS[4:]]
            yield row


def export_results(
    results: Mapping[ResultKey, SimulationResult],
    out_dir: Path | str,
    fmt: str = "csv",
    *,
    config: RunConfig | None = None,
    inputs_sha256: str | None = None,
    plot_data: bool = False,
    demand: DemandSeries | None = None,
) -> list[Path]:
    """Write the long-form results file, a run manifest and optional plot series."""
    if not results:
        raise ConfigurationError("nothing to export")
    if fmt not in ("csv", "json"):
        raise ConfigurationError(f"unknown format {fmt!r}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = list(_result_rows(results))

    results_path = out / f"results.{fmt}"
    if fmt == "csv":
        with results_path.open("w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(RESULT_COLUMNS)
            for row in rows:
                writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
    else:
        payload = [dict(zip(RESULT_COLUMNS, row)) for row in rows]
        results_path.write_text(json.dumps(payload, indent=1) + "\n", encoding="utf-8")
    written = [results_path]

    manifest = {
        "results_file": results_path.name,
        "results_sha256": hashlib.sha256(results_path.read_bytes()).hexdigest(),
        "rows": len(rows),
        "runs": [[k[0], k[1].value, k[2].value] for k in sorted(results, key=lambda k: (k[0], k[1].value, k[2].value))],
    }
    if config is not None:
        manifest["config"] = config.to_dict()
    if inputs_sha256 is not None:
        manifest["inputs_sha256"] = inputs_sha256
    manifest_path = out / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    written.append(manifest_path)

    if plot_data:
        written += _write_plot_data(results, out, demand)
    return written


def _write_plot_data(results, out: Path, demand: DemandSeries | None) -> list[Path]:
    paths = []
    stock_path = out / "plot_scenario_stock.csv"
    by_pair: dict[tuple[EconomyId, BuildingType], dict[ScenarioKind, SimulationResult]] = {}
    for (e, t, s), r in results.items():
        by_pair.setdefault((e, t), {})[s] = r
    with stock_path.open("w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["economy", "building_type", "year"] + [s.value for s in ScenarioKind])
        for (e, t) in sorted(by_pair, key=lambda k: (k[0], k[1].value)):
            runs = by_pair[(e, t)]
            any_run = next(iter(runs.values()))
            for y in any_run.years:
                cells = [repr(runs[s].ledger.stock_at(int(y))) if s in runs else "" for s in ScenarioKind]
                writer.writerow([e, t.value, int(y)] + cells)
    paths.append(stock_path)
    if demand is not None:
        pcf_path = out / "plot_per_capita_floorspace.csv"
        with pcf_path.open("w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["economy", "building_type", "year", "population", "per_capita_floorspace_m2"])
            for e, t in demand.keys:
                for y in sorted(demand.per_capita_floorspace[(e, t)]):
                    writer.writerow(
                        [e, t.value, y, repr(demand.population[(e, t)][y]), repr(demand.per_capita_floorspace[(e, t)][y])]
                    )
        paths.append(pcf_path)
    return paths


def import_results(path: Path | str) -> dict[ResultKey, dict[str, np.ndarray]]:
    """Read a results file written by :func:`export_results`."""
    path = Path(path)
    if path.suffix == ".json":
        try:
            records = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ParseError(path, exc.lineno, f"invalid JSON: {exc.msg}") from None
        numbered = [(i + 1, {k: str(v) for k, v in rec.items()}) for i, rec in enumerate(records)]
    else:
        numbered = list(_rows(path, RESULT_COLUMNS))
    grouped: dict[ResultKey, dict[str, list]] = {}
    for line, row in numbered:
        try:
            key = (row["economy"], BuildingType.parse(row["building_type"]), ScenarioKind.parse(row["scenario"]))
        except InvalidParameterError as exc:
            raise ParseError(path, line, str(exc)) from None
        cols = grouped.setdefault(key, {c: [] for c in RESULT_COLUMNS[3:]})
        cols["year"].append(_year(path, line, row))
        for c in RESULT_COLUMNS[4:]:
            cols[c].append(_number(path, line, row, c))
    return {
        k: {c: np.asarray(v, dtype=int if c == "year" else float) for c, v in cols.items()}
        for k, cols in grouped.items()
    }


def result_columns(result: SimulationResult) -> dict[str, np.ndarray]:
    """The exported columns of one in-memory result."""
    cols = {"year": result.years}
    for c in RESULT_COLUMNS[4:]:
        cols[c] = result.series(_LEDGER_FIELDS[c])
    return cols
