"""Parameter sweeps over technology costs, discount rate and PV lifetime.

A cost sweep re-optimizes the installation on a grid of headline PV costs
(panel + installation + inverter, EUR/kW) and battery costs (EUR/kWh of one
chemistry). Per PV-cost column the battery-free optimum is computed once and
shared by every battery cost of that column. Grid points are independent and
may run in a process pool; results are gathered by grid index so the output
does not depend on the number of workers.

Rate and lifetime sweeps run each point twice: directly, and at the reference
rate/lifetime with capital costs replaced by their annuity equivalents. Both
runs must agree.
"""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .dispatch import SolverError
from .economics import scale_pv_cost, transform_catalog_pv_lifetime, transform_catalog_rate
from .model import BuildingScenario, EconomicParams, OptimizationResult, RemunerationPolicy, TechnologyCatalog
from .sizing import SizingOptions, _best, build_result, candidates

SWEEP_BATTERY = "Lithium Nickel Cobalt Aluminium Oxide"
SWEEP_COLUMNS = ("pv_cost", "battery_cost", "config_class", "pv_kw_per_hh", "battery_kwh_per_hh", "asr", "ssr",
                 "scr", "eir")


def parse_range(text: str) -> np.ndarray:
    """``start:stop:step`` -> start, start+step, ... below stop, then stop itself.

    Order follows the sign of ``step``; a single number gives one point.
    """
    parts = text.split(":")
    try:
        vals = [float(p) for p in parts]
    except ValueError:
        raise ValueError(f"bad range {text!r}, expected start:stop:step") from None
    if len(vals) == 1:
        return np.array(vals)
    if len(vals) != 3:
        raise ValueError(f"bad range {text!r}, expected start:stop:step")
    start, stop, step = vals
    if step == 0 or (stop - start) * step < 0:
        raise ValueError(f"range {text!r}: step must move from start towards stop")
    n = int(np.floor((stop - start) / step + 1e-9))
    pts = [start + k * step for k in range(n + 1)]
    pts = [p for p in pts if (stop - p) * np.sign(step) > 1e-9]
    return np.array(pts + [stop])


@dataclass(frozen=True)
class SweepPoint:
    i: int  # PV-cost index
    j: int  # battery-cost index
    pv_cost: float
    battery_cost: float
    result: Optional[OptimizationResult]
    error: Optional[str] = None

    @property
    def config_class(self) -> str:
        return self.result.config_class if self.result is not None else "failed"


@dataclass(frozen=True)
class SweepGrid:
    policy: RemunerationPolicy
    pv_costs: np.ndarray
    battery_costs: np.ndarray
    battery: str
    points: tuple[SweepPoint, ...]  # row-major: PV cost outer, battery cost inner

    def point(self, i: int, j: int) -> SweepPoint:
        return self.points[i * len(self.battery_costs) + j]

    def metric(self, name: str) -> np.ndarray:
        """(n_pv, n_battery) array of a result attribute; NaN at failed points."""
        out = np.full((len(self.pv_costs), len(self.battery_costs)), np.nan)
        for p in self.points:
            if p.result is not None:
                out[p.i, p.j] = float(getattr(p.result, name))
        return out

    def battery_mask(self) -> np.ndarray:
        return self.metric("battery_kwh") > 0

    def adoption_boundary(self) -> np.ndarray:
        """Per PV cost, the highest battery cost at which storage is installed (NaN if never)."""
        mask = self.battery_mask()
        out = np.full(len(self.pv_costs), np.nan)
        for i in range(len(self.pv_costs)):
            if mask[i].any():
                out[i] = float(np.max(self.battery_costs[mask[i]]))
        return out


def _strip(result: OptimizationResult) -> OptimizationResult:
    return replace(result, dispatch=None)


def _column_catalog(catalog: TechnologyCatalog, pv_cost: float) -> TechnologyCatalog:
    return scale_pv_cost(catalog, pv_cost)


def _point_catalog(catalog: TechnologyCatalog, pv_cost: float, battery: str, battery_cost: float):
    cat = _column_catalog(catalog, pv_cost)
    b = replace(cat.battery(battery), unit_cost=battery_cost)
    return replace(cat, batteries=(b,))


def _solve_column(args):
    scenario, catalog, policy, econ, options, pv_cost = args
    try:
        cat = _column_catalog(catalog, pv_cost)
        opts = replace(options, batteries=(), workers=1)
        return candidates(scenario, cat, policy, econ, opts)[0], None
    except (SolverError, ValueError) as exc:
        return None, f"{type(exc).__name__}: {exc}"


def _solve_point(args):
    scenario, catalog, policy, econ, options, pv_cost, battery, battery_cost, free = args
    if free is None:
        return None, "battery-free optimization failed"
    try:
        cat = _point_catalog(catalog, pv_cost, battery, battery_cost)
        opts = replace(options, batteries=(battery,), workers=1)
        best = _best([free] + candidates(scenario, cat, policy, econ, opts, include_free=False))
        res = build_result(scenario, cat, policy, best.eac, best.capacities, best.dispatch)
        return _strip(res), None
    except (SolverError, ValueError) as exc:
        return None, f"{type(exc).__name__}: {exc}"


def _map(fn, tasks, workers):
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    return [fn(t) for t in tasks]


def cost_sweep(
    scenario: BuildingScenario,
    catalog: TechnologyCatalog,
    policy: RemunerationPolicy,
    pv_costs: Sequence[float],
    battery_costs: Sequence[float],
    econ: EconomicParams = EconomicParams(),
    battery: str = SWEEP_BATTERY,
    workers: int = 1,
    options: SizingOptions = SizingOptions(),
) -> SweepGrid:
    """Optimize the installation at every (PV cost, battery cost) grid point."""
    pv_costs = np.asarray(pv_costs, dtype=float)
    battery_costs = np.asarray(battery_costs, dtype=float)
    if pv_costs.size < 2 or battery_costs.size < 2:
        raise ValueError("a cost sweep needs at least 2 points per axis")
    if (pv_costs <= 0).any() or (battery_costs <= 0).any():
        raise ValueError("sweep costs must be positive")
    catalog.battery(battery)  # fail early on unknown chemistry
    cols = _map(_solve_column, [(scenario, catalog, policy, econ, options, float(c)) for c in pv_costs], workers)
    tasks = [
        (scenario, catalog, policy, econ, options, float(pc), battery, float(bc), cols[i][0])
        for i, pc in enumerate(pv_costs)
        for bc in battery_costs
    ]
    outs = _map(_solve_point, tasks, workers)
    points = []
    nb = len(battery_costs)
    for k, (res, err) in enumerate(outs):
        i, j = divmod(k, nb)
        if err is None and cols[i][1] is not None:
            err = cols[i][1]
        points.append(SweepPoint(i, j, float(pv_costs[i]), float(battery_costs[j]), res, err))
    return SweepGrid(policy, pv_costs, battery_costs, battery, tuple(points))


def _fmt(v: float) -> str:
    if v is None or not np.isfinite(v):
        return "nan" if v is None or np.isnan(v) else ("inf" if v > 0 else "-inf")
    return f"{v:.6f}"


def sweep_records(grid: SweepGrid) -> list[dict]:
    rows = []
    for p in grid.points:
        r = p.result
        rec = {"pv_cost": p.pv_cost, "battery_cost": p.battery_cost, "config_class": p.config_class}
        for col, attr in (("pv_kw_per_hh", "pv_kw_per_household"), ("battery_kwh_per_hh", "battery_kwh_per_household"),
                          ("asr", "asr"), ("ssr", "ssr"), ("scr", "scr"), ("eir", "eir")):
            rec[col] = float(getattr(r, attr)) if r is not None else None
        if p.error:
            rec["error"] = p.error
        rows.append(rec)
    return rows


def write_sweep(grid: SweepGrid, fh, fmt: str = "csv") -> None:
    recs = sweep_records(grid)
    if fmt == "csv":
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for rec in recs:
            w.writerow([rec["config_class"] if c == "config_class" else _fmt(rec[c]) for c in SWEEP_COLUMNS])
    else:
        for rec in recs:
            fh.write(json.dumps({k: (round(v, 6) if isinstance(v, float) and np.isfinite(v) else v)
                                 for k, v in rec.items()}) + "\n")


def iso_lines(grid: SweepGrid, metric: str, levels: Sequence[float]) -> list[dict]:
    """Level sets of a metric over the (PV cost, battery cost) plane by marching squares."""
    import contourpy

    z = grid.metric(metric)
    gen = contourpy.contour_generator(grid.battery_costs, grid.pv_costs, np.ma.masked_invalid(z),
                                      line_type=contourpy.LineType.Separate)
    rows = []
    for level in levels:
        for line_id, seg in enumerate(gen.lines(float(level))):
            for k, (bc, pc) in enumerate(seg):
                rows.append({"metric": metric, "level": float(level), "line": line_id, "vertex": k,
                             "pv_cost": float(pc), "battery_cost": float(bc)})
    return rows


def write_iso_lines(rows: list[dict], fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    cols = ("metric", "level", "line", "vertex", "pv_cost", "battery_cost")
    w.writerow(cols)
    for r in rows:
        w.writerow([r["metric"], _fmt(r["level"]), r["line"], r["vertex"], _fmt(r["pv_cost"]), _fmt(r["battery_cost"])])


def sweep_csv_text(grid: SweepGrid) -> str:
    buf = io.StringIO()
    write_sweep(grid, buf)
    return buf.getvalue()


# -- equivalence sweeps -----------------------------------------------------------


@dataclass(frozen=True)
class EquivalenceRun:
    value: float  # discount rate or PV lifetime
    direct: OptimizationResult
    transformed: OptimizationResult

    @property
    def capacity_rel_diff(self) -> float:
        d, t = self.direct, self.transformed
        diffs = [abs(a - b) / max(abs(a), abs(b), 1e-9) if max(abs(a), abs(b)) > 1e-9 else 0.0
                 for a, b in ((d.pv_kw, t.pv_kw), (d.battery_kwh, t.battery_kwh))]
        return max(diffs)

    @property
    def eac_rel_diff(self) -> float:
        return abs(self.direct.eac - self.transformed.eac) / max(abs(self.direct.eac), 1e-12)


def _optimize(scenario, catalog, policy, econ, options):
    from .sizing import optimize_installation

    return _strip(optimize_installation(scenario, catalog, policy, econ, options))


def rate_sweep(
    scenario: BuildingScenario,
    catalog: TechnologyCatalog,
    policy: RemunerationPolicy,
    rates: Sequence[float],
    econ: EconomicParams = EconomicParams(),
    options: SizingOptions = SizingOptions(),
) -> list[EquivalenceRun]:
    """Direct optimization at each rate vs the reference rate with equivalent costs."""
    r0 = econ.discount_rate
    out = []
    for r in rates:
        direct = _optimize(scenario, catalog, policy, replace(econ, discount_rate=float(r)), options)
        transformed = _optimize(scenario, transform_catalog_rate(catalog, r0, float(r)), policy, econ, options)
        out.append(EquivalenceRun(float(r), direct, transformed))
    return out


def lifetime_sweep(
    scenario: BuildingScenario,
    catalog: TechnologyCatalog,
    policy: RemunerationPolicy,
    lifetimes: Sequence[float],
    econ: EconomicParams = EconomicParams(),
    options: SizingOptions = SizingOptions(),
) -> list[EquivalenceRun]:
    """Direct optimization at each PV lifetime vs the reference lifetime with equivalent PV cost."""
    out = []
    for L in lifetimes:
        direct_cat = replace(catalog, pv=replace(catalog.pv, lifetime=float(L)))
        direct = _optimize(scenario, direct_cat, policy, econ, options)
        transformed = _optimize(scenario, transform_catalog_pv_lifetime(catalog, econ.discount_rate, float(L)),
                                policy, econ, options)
        out.append(EquivalenceRun(float(L), direct, transformed))
    return out


def write_equivalence(runs: list[EquivalenceRun], fh, label: str) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow((label, "pv_kw_direct", "pv_kw_transformed", "battery_kwh_direct", "battery_kwh_transformed",
                "eac_direct", "eac_transformed", "asr_direct", "capacity_rel_diff", "eac_rel_diff"))
    for r in runs:
        w.writerow([_fmt(r.value), _fmt(r.direct.pv_kw), _fmt(r.transformed.pv_kw), _fmt(r.direct.battery_kwh),
                    _fmt(r.transformed.battery_kwh), _fmt(r.direct.eac), _fmt(r.transformed.eac),
                    _fmt(r.direct.asr), f"{r.capacity_rel_diff:.3e}", f"{r.eac_rel_diff:.3e}"])
