"""``buildstock`` command line: run, compare, validate, oracle."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from dataclasses import replace

from .core import BuildingType, BuildstockError, ScenarioKind, make_default_lifetime
from .io import (
    RunConfig,
    export_results,
    inputs_digest,
    load_config,
    load_demand,
    load_policy_table,
    run_all,
)
from .metrics import scenario_delta
from .scenario import build_policy, policy_economies
from .survival import max_oracle_deviation

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_IO = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--economy", action="append", help="economy code (repeatable)")
    p.add_argument("--type", action="append", dest="types", help="residential or non-residential (repeatable)")
    p.add_argument("--from", dest="start", type=int, help="first simulated year")
    p.add_argument("--to", dest="end", type=int, help="last simulated year")
    p.add_argument("--out", help="output directory")
    p.add_argument("--format", choices=("csv", "json"))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="buildstock", description="Building-stock turnover under renovation scenarios.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="simulate configured scenarios and export results")
    _common(run)
    run.add_argument("--scenario", action="append", help="NR, BAU or TEP (repeatable)")
    run.add_argument("--plot-data", action="store_true", help="also write per-figure plot series")

    cmp_ = sub.add_parser("compare", help="stock reduction of scenario B against scenario A")
    _common(cmp_)
    cmp_.add_argument("baseline")
    cmp_.add_argument("variant")

    val = sub.add_parser("validate", help="check inputs and summarise policies")
    _common(val)

    orc = sub.add_parser("oracle", help="Monte-Carlo check of the lifetime CDF")
    orc.add_argument("--mean", type=float, default=50.0)
    orc.add_argument("--samples", type=int, default=1_000_000)
    orc.add_argument("--seed", type=int, default=0)
    return parser


def _config(args, scenarios=None) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    updates = {}
    if args.economy:
        updates["economies"] = args.economy
    if args.types:
        updates["building_types"] = [BuildingType.parse(t) for t in args.types]
    if scenarios:
        updates["scenarios"] = [ScenarioKind.parse(s) for s in scenarios]
    if args.start is not None:
        updates["start_year"] = args.start
    if args.end is not None:
        updates["end_year"] = args.end
    if args.out:
        updates["output_dir"] = args.out
    if args.format:
        updates["format"] = args.format
    return replace(cfg, **updates) if updates else cfg


def _inputs(cfg: RunConfig):
    demand = load_demand(cfg.population_file, cfg.floorspace_file, (cfg.start_year, cfg.end_year))
    params = load_policy_table(cfg.policy_file)
    return demand, params


def cmd_run(args) -> int:
    cfg = _config(args, args.scenario)
    demand, params = _inputs(cfg)
    results = run_all(cfg, demand, params)
    paths = export_results(
        results,
        cfg.output_dir,
        cfg.format,
        config=cfg,
        inputs_sha256=inputs_digest(cfg, demand, params),
        plot_data=args.plot_data,
        demand=demand,
    )
    for p in paths:
        print(p)
    return EXIT_OK


def cmd_compare(args) -> int:
    base, var = ScenarioKind.parse(args.baseline), ScenarioKind.parse(args.variant)
    cfg = _config(args, sorted({base, var}, key=list(ScenarioKind).index))
    demand, params = _inputs(cfg)
    results = run_all(cfg, demand, params)
    header = ["economy", "building_type", "year", "baseline", "variant", "baseline_m2", "variant_m2", "absolute_m2", "relative"]
    rows = []
    pairs = sorted({(e, t) for e, t, _ in results}, key=lambda k: (k[0], k[1].value))
    for e, t in pairs:
        if (e, t, base) not in results or (e, t, var) not in results:
            continue
        d = scenario_delta(results[(e, t, base)], results[(e, t, var)], cfg.end_year)
        rel = "" if math.isnan(d.relative) else repr(d.relative)
        rows.append([e, t.value, d.year, base.value, var.value, repr(d.baseline_stock), repr(d.variant_stock), repr(d.absolute), rel])
    if not rows:
        print("no comparable runs", file=sys.stderr)
        return EXIT_INVALID
    if cfg.format == "json":
        json.dump([dict(zip(header, r)) for r in rows], sys.stdout, indent=1)
        print()
    else:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg = _config(args)
    demand, params = _inputs(cfg)
    economies = cfg.economies or demand.economies
    for e in economies:
        for t in cfg.building_types:
            demand.check_coverage(e, t, cfg.start_year, cfg.end_year)
    policy_econ = policy_economies(params)
    print(f"demand: {len(demand.keys)} series, {cfg.start_year}-{cfg.end_year} covered for {len(economies)} economies")
    print(f"policy economies ({len(policy_econ)}): {' '.join(policy_econ)}")
    for e in policy_econ:
        for t in BuildingType:
            for s in (ScenarioKind.BAU, ScenarioKind.TEP):
                if (s, e, t) not in params:
                    continue
                p = build_policy(s, e, t, params, cfg.lifetime_basis)
                first = p.first_renovation
                second = p.second_renovation
                line = f"  {s.value:3} {e:5} {t.value:15} lifetime {'/'.join(f'{m:g}' for m in p.construction_lifetime.means)}"
                if first:
                    line += f" cycle {p.renovation_cycle:g} first {first.start_rate:.1%}-{first.end_rate:.1%}"
                if second:
                    line += f" second {second.start_rate:.1%}-{second.end_rate:.1%}"
                print(line)
    return EXIT_OK


def cmd_oracle(args) -> int:
    dist = make_default_lifetime(args.mean)
    dev, points = max_oracle_deviation(dist, args.samples, args.seed)
    for t, (analytic, empirical) in sorted(points.items()):
        print(f"t={t:g} analytic {analytic:.6f} empirical {empirical:.6f}")
    print(f"mean {dist.mean:g} sd {dist.std_dev:g} samples {args.samples} max |F_mc - F| = {dev:.6f}")
    return EXIT_OK


COMMANDS = {"run": cmd_run, "compare": cmd_compare, "validate": cmd_validate, "oracle": cmd_oracle}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (BuildstockError, ValueError, LookupError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
