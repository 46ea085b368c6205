"""Building-stock turnover with renovation: cohort survival, scenarios, demand and carbon."""
from .core import (
    BuildingType,
    BuildstockError,
    Cohort,
    ConfigurationError,
    DataGapError,
    InvalidComparisonError,
    InvalidParameterError,
    LifetimeDistribution,
    ScenarioKind,
    StockLedger,
    YearRecord,
    make_default_lifetime,
)
from .engine import SimulationResult, run_simulation, seed_cohorts, step_year
from .io import RunConfig, export_results, import_results, load_config, load_demand, load_policy_table, run_all
from .metrics import avoided_construction, embodied_carbon, scenario_delta
from .scenario import DemandSeries, RenovationRamp, ScenarioPolicy, build_policy, interpolate_endpoint_series
from .survival import build_hazard_table, demolition_hazard, lifetime_cdf

__version__ = "0.1.0"

__all__ = [
    "BuildingType",
    "BuildstockError",
    "Cohort",
    "ConfigurationError",
    "DataGapError",
    "DemandSeries",
    "InvalidComparisonError",
    "InvalidParameterError",
    "LifetimeDistribution",
    "RenovationRamp",
    "RunConfig",
    "ScenarioKind",
    "ScenarioPolicy",
    "SimulationResult",
    "StockLedger",
    "YearRecord",
    "avoided_construction",
    "build_hazard_table",
    "build_policy",
    "demolition_hazard",
    "embodied_carbon",
    "export_results",
    "import_results",
    "interpolate_endpoint_series",
    "lifetime_cdf",
    "load_config",
    "load_demand",
    "load_policy_table",
    "make_default_lifetime",
    "run_all",
    "run_simulation",
    "scenario_delta",
    "seed_cohorts",
    "step_year",
]
