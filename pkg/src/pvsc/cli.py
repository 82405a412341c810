"""Command-line interface.

Exit codes: 0 success, 2 input error, 3 solver failure.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import json
import sys
from dataclasses import replace

import numpy as np

from . import __version__, ingestion, sizing, sweep
from .dispatch import DispatchOptions, SolverError, optimal_dispatch, write_dispatch_csv
from .economics import scale_pv_cost
from .model import Capacities, DayKind, EconomicParams, RemunerationPolicy

EXIT_INPUT = 2
EXIT_SOLVER = 3

SYNTHETIC_NOTE = "synthetic profiles: compare with published regional results qualitatively only"

RESULT_COLUMNS = (
    "region", "policy", "pv_kw_per_hh", "rooftop_pct", "asr", "ssr", "scr", "eir",
    "battery_kwh_per_hh", "battery_technology", "pv_kw", "inverter_kw", "controller_kw",
    "eac_eur", "eac_no_pv_eur", "profiles",
)


class UsageError(Exception):
    pass


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0, help="seed for synthetic price noise (default 0)")
    p.add_argument("--out", default="-", help="output file, '-' for stdout")
    p.add_argument("--format", choices=("csv", "json-lines"), default="csv")
    p.add_argument("--catalog", default="reference", help="'reference' or a catalog CSV")
    p.add_argument("--regions", default="builtin", help="'builtin' or a regions CSV")
    p.add_argument("--profiles", help="profile CSV with measured days (default: synthesize)")
    p.add_argument("--synthetic-cf", type=float, help="annual solar capacity factor for synthetic profiles")
    p.add_argument("--config", help="key = value overrides, e.g. pv.panel_cost_eur_per_kw = 300")
    p.add_argument("--discount-rate-fraction", type=float, help="discount rate, e.g. 0.02")
    p.add_argument("--pv-cost-eur-per-kw", type=float,
                   help="headline PV cost (panel + installation + inverter), scales the catalog pro rata")
    p.add_argument("--cap-tcu-only", action="store_true",
                   help="value imports at the production price only in the monthly export cap")
    p.add_argument("--free-inverter", action="store_true", help="size the inverter independently of PV")


def _region_arg(p, multi=False):
    if multi:
        g = p.add_mutually_exclusive_group()
        g.add_argument("--region", default=None)
        g.add_argument("--all-regions", action="store_true")
    else:
        p.add_argument("--region", default="national")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pvsc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="store_true", help="print version and dataset checksums as JSON")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("optimize", help="optimal installation per region")
    _region_arg(p, multi=True)
    p.add_argument("--policy", default="p2", help="p1 (no remuneration), p2 or p3")
    _common(p)

    p = sub.add_parser("compare-policies", help="optimal installation under p1, p2 and p3")
    _region_arg(p)
    _common(p)

    p = sub.add_parser("sweep", help="technology-cost sensitivity grid")
    _region_arg(p)
    p.add_argument("--policy", default="p2")
    p.add_argument("--pv", "--pv-cost-range-eur-per-kw", dest="pv_range", default="600:1450:50",
                   help="headline PV cost range start:stop:step, EUR/kW")
    p.add_argument("--battery", "--battery-cost-range-eur-per-kwh", dest="battery_range", default="96:230:15",
                   help="battery cost range start:stop:step, EUR/kWh")
    p.add_argument("--battery-chemistry", default=sweep.SWEEP_BATTERY)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--iso-metric", default="asr", help="result attribute for level sets")
    p.add_argument("--iso-levels", default="", help="comma-separated levels; empty disables")
    p.add_argument("--iso-out", help="level-set CSV path")
    _common(p)

    p = sub.add_parser("dispatch-dump", help="hourly operation of the optimal (or a given) installation")
    _region_arg(p)
    p.add_argument("--policy", default="p2")
    p.add_argument("--month", type=int, help="1-12; default all")
    p.add_argument("--day", choices=[k.value for k in DayKind], help="default both")
    p.add_argument("--pv-kw", type=float, help="fixed PV capacity (kW); default optimal")
    p.add_argument("--battery-kwh", type=float, default=0.0)
    p.add_argument("--battery-chemistry", default=sweep.SWEEP_BATTERY)
    _common(p)
    return parser


# -- inputs ---------------------------------------------------------------------


def _inputs(args):
    try:
        catalog = ingestion.load_catalog(args.catalog)
        econ = EconomicParams()
        if args.config:
            catalog, econ = ingestion.apply_config(ingestion.load_config(args.config), catalog, econ)
        if args.discount_rate_fraction is not None:
            econ = replace(econ, discount_rate=args.discount_rate_fraction)
        if args.pv_cost_eur_per_kw is not None:
            catalog = scale_pv_cost(catalog, args.pv_cost_eur_per_kw)
        regions = ingestion.load_regions(args.regions)
    except (OSError, ValueError, KeyError) as exc:
        raise UsageError(str(exc)) from None
    return catalog, econ, regions


def _scenario(args, skeleton):
    try:
        if args.profiles:
            return ingestion.load_profiles_csv(args.profiles, skeleton)
        return ingestion.synthesize_profiles(skeleton, args.synthetic_cf, price_seed=args.seed)
    except (OSError, ValueError) as exc:
        raise UsageError(f"{skeleton.region_label}: {exc}") from None


def _policy(label):
    try:
        return RemunerationPolicy.parse(label)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _region(regions, label):
    try:
        return ingestion.find_region(regions, label)
    except ValueError:
        raise UsageError(f"unknown region {label!r}; known: "
                         + ", ".join(r.region_label for r in regions)) from None


def _options(args, workers=1):
    d = DispatchOptions(cap_includes_teu=not args.cap_tcu_only, free_inverter=args.free_inverter)
    return sizing.SizingOptions(dispatch=d, workers=workers)


@contextlib.contextmanager
def _output(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _num(v, digits=6):
    return f"{v:.{digits}f}" if np.isfinite(v) else ("inf" if v > 0 else "nan")


def _result_record(r) -> dict:
    return {
        "region": r.region,
        "policy": r.policy.label,
        "pv_kw_per_hh": r.pv_kw_per_household,
        "rooftop_pct": r.rooftop_fraction,
        "asr": r.asr,
        "ssr": r.ssr,
        "scr": r.scr,
        "eir": r.eir,
        "battery_kwh_per_hh": r.battery_kwh_per_household,
        "battery_technology": r.battery_technology or "",
        "pv_kw": r.pv_kw,
        "inverter_kw": r.inverter_kw,
        "controller_kw": r.controller_kw,
        "eac_eur": r.eac,
        "eac_no_pv_eur": r.eac_no_pv,
        "profiles": "synthetic" if r.synthetic else "measured",
    }


def write_results(results, fh, fmt):
    recs = [_result_record(r) for r in results]
    if fmt == "csv":
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULT_COLUMNS)
        for rec in recs:
            w.writerow([_num(v) if isinstance(v, float) else v for v in (rec[c] for c in RESULT_COLUMNS)])
    else:
        for rec in recs:
            out = {k: (round(v, 6) if isinstance(v, float) and np.isfinite(v) else v) for k, v in rec.items()}
            if rec["profiles"] == "synthetic":
                out["note"] = SYNTHETIC_NOTE
            fh.write(json.dumps(out) + "\n")


def _note_synthetic(results):
    if any(r.synthetic for r in results):
        print(f"note: {SYNTHETIC_NOTE}", file=sys.stderr)


# -- commands -------------------------------------------------------------------


def cmd_optimize(args) -> int:
    catalog, econ, regions = _inputs(args)
    policy = _policy(args.policy)
    if args.all_regions:
        skeletons = regions
    else:
        skeletons = [_region(regions, args.region or "national")]
    results = [sizing.optimize_installation(_scenario(args, s), catalog, policy, econ, _options(args))
               for s in skeletons]
    with _output(args.out) as fh:
        write_results(results, fh, args.format)
    _note_synthetic(results)
    return 0


def cmd_compare_policies(args) -> int:
    catalog, econ, regions = _inputs(args)
    scenario = _scenario(args, _region(regions, args.region))
    results = sizing.compare_policies(scenario, catalog, econ, _options(args))
    with _output(args.out) as fh:
        write_results(results, fh, args.format)
    _note_synthetic(results)
    return 0


def cmd_sweep(args) -> int:
    catalog, econ, regions = _inputs(args)
    policy = _policy(args.policy)
    scenario = _scenario(args, _region(regions, args.region))
    try:
        pv = sweep.parse_range(args.pv_range)
        batt = sweep.parse_range(args.battery_range)
        levels = [float(x) for x in args.iso_levels.split(",") if x.strip()]
        catalog.battery(args.battery_chemistry)
    except (ValueError, KeyError) as exc:
        raise UsageError(str(exc)) from None
    if args.workers < 1:
        raise UsageError("--workers must be >= 1")
    try:
        grid = sweep.cost_sweep(scenario, catalog, policy, pv, batt, econ, args.battery_chemistry,
                                args.workers, _options(args))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    with _output(args.out) as fh:
        sweep.write_sweep(grid, fh, args.format)
    if levels:
        rows = sweep.iso_lines(grid, args.iso_metric, levels)
        with _output(args.iso_out or "-") as fh:
            sweep.write_iso_lines(rows, fh)
    failed = [p for p in grid.points if p.error]
    for p in failed:
        print(f"warning: point pv={p.pv_cost:g} battery={p.battery_cost:g} failed: {p.error}", file=sys.stderr)
    if scenario.synthetic:
        print(f"note: {SYNTHETIC_NOTE}", file=sys.stderr)
    return 0


def cmd_dispatch_dump(args) -> int:
    catalog, econ, regions = _inputs(args)
    policy = _policy(args.policy)
    scenario = _scenario(args, _region(regions, args.region))
    if args.month is not None and not 1 <= args.month <= 12:
        raise UsageError(f"--month must be 1-12, got {args.month}")
    opts = _options(args)
    if args.pv_kw is None:
        sol = sizing.optimize_installation(scenario, catalog, policy, econ, opts).dispatch
    else:
        if args.pv_kw < 0 or args.battery_kwh < 0:
            raise UsageError("capacities must be >= 0")
        try:
            battery = catalog.battery(args.battery_chemistry) if args.battery_kwh > 0 else None
        except KeyError as exc:
            raise UsageError(str(exc)) from None
        caps = Capacities(args.pv_kw, args.battery_kwh, battery)
        sol = optimal_dispatch(scenario, caps, catalog, policy, econ, opts.dispatch)
    fmt = "csv" if args.format == "csv" else "json-lines"
    with _output(args.out) as fh:
        write_dispatch_csv(None, sol, scenario, args.month, args.day, fmt, stream=fh)
    if scenario.synthetic:
        print(f"note: {SYNTHETIC_NOTE}", file=sys.stderr)
    return 0


COMMANDS = {
    "optimize": cmd_optimize,
    "compare-policies": cmd_compare_policies,
    "sweep": cmd_sweep,
    "dispatch-dump": cmd_dispatch_dump,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.version:
        print(json.dumps({"version": __version__, "datasets": ingestion.builtin_checksums()}, sort_keys=True))
        return 0
    if args.command is None:
        parser.print_help(sys.stderr)
        return EXIT_INPUT
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
