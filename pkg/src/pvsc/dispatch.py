"""Hourly cost-optimal operation over the representative days.

The year is modelled as weighted representative days. For each day and hour
PV output (after inverter clipping and efficiency) is split between the load,
the battery, exports and curtailment; the battery closes a daily cycle and
its yearly discharge throughput is capped by the ageing parameter. Export
revenue per calendar month is capped at the value of that month's imports.

The same linear program serves dispatch with fixed capacities and the joint
sizing problem, where PV and battery capacities are free variables.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np
import scipy.sparse as sp

from . import tariff
from .economics import unit_annuities
from .lp_kernel import LinearProgram, LPError, Tolerances, solve_lp
from .model import (
    HOURS,
    BatteryTechnology,
    BuildingScenario,
    Capacities,
    DispatchSolution,
    EconomicParams,
    RemunerationPolicy,
    TechnologyCatalog,
)

FLOW_COLUMNS = (
    "pv_generation_dc",
    "pv_available_ac",
    "pv_to_load",
    "pv_to_battery",
    "pv_export",
    "pv_curtailed",
    "battery_to_load",
    "grid_import",
    "soc",
)


class SolverError(RuntimeError):
    """The LP solver did not return an optimal solution."""

    def __init__(self, message: str, diagnostics: Optional[dict] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


@dataclass(frozen=True)
class DispatchOptions:
    """Modelling switches. Defaults reproduce the reference configuration."""

    grid_charging: bool = False  # allow grid_to_battery
    battery_export: bool = False  # allow battery_to_grid
    free_inverter: bool = False  # size the inverter independently of PV
    cap_includes_teu: bool = True  # value imports at TCU+TEU (else TCU only) in the monthly cap
    export_epsilon: float = 1e-6  # EUR/kWh charged on exports so worthless ones are curtailed
    method: str = "highs"
    tolerances: Tolerances = Tolerances()


@dataclass
class ScenarioArrays:
    """Scenario profiles stacked into (days, 24) arrays."""

    weights: np.ndarray
    months: np.ndarray
    load: np.ndarray
    cf: np.ndarray
    import_price: np.ndarray
    export_price: np.ndarray
    cap_price: np.ndarray

    @classmethod
    def from_scenario(cls, s: BuildingScenario, policy: RemunerationPolicy, cap_includes_teu: bool = True):
        prices = [d.prices for d in s.profiles]
        return cls(
            weights=np.array([d.weight for d in s.profiles]),
            months=np.array([d.month for d in s.profiles]),
            load=np.vstack([d.load for d in s.profiles]),
            cf=np.vstack([d.solar_cf for d in s.profiles]),
            import_price=np.vstack([tariff.import_price(p) for p in prices]),
            export_price=np.vstack([np.broadcast_to(tariff.export_price(p, policy), (HOURS,)) for p in prices]),
            cap_price=np.vstack([tariff.cap_price(p, cap_includes_teu) for p in prices]),
        )


class _Layout:
    def __init__(self):
        self.n = 0
        self.blocks = {}

    def add(self, name, shape):
        size = int(np.prod(shape))
        idx = np.arange(self.n, self.n + size).reshape(shape)
        self.n += size
        self.blocks[name] = idx
        return idx


class _Rows:
    """Accumulates sparse rows as COO triplets."""

    def __init__(self):
        self.r, self.c, self.v, self.b = [], [], [], []
        self.m = 0
        self.families = {}

    def add(self, name, terms, rhs):
        """Append rows shaped like ``rhs``.

        Each term is ``(cols, coef)``: ``cols`` has the row shape (one entry
        per row) or the row shape plus a trailing axis (several per row).
        """
        rhs = np.asarray(rhs, dtype=float)
        rows = np.arange(self.m, self.m + rhs.size).reshape(rhs.shape)
        for cols, coef in terms:
            cols = np.asarray(cols)
            rr = rows if cols.ndim == rows.ndim else rows[..., None]
            rr = np.broadcast_to(rr, cols.shape)
            self.r.append(rr.ravel())
            self.c.append(cols.ravel())
            self.v.append(np.broadcast_to(np.asarray(coef, dtype=float), cols.shape).ravel())
        self.b.append(rhs.ravel())
        self.families[name] = rows
        self.m += rhs.size
        return rows

    def matrix(self, n):
        if not self.m:
            return sp.csr_matrix((0, n)), np.zeros(0)
        A = sp.csr_matrix(
            (np.concatenate(self.v), (np.concatenate(self.r), np.concatenate(self.c))), shape=(self.m, n)
        )
        A.sum_duplicates()
        return A, np.concatenate(self.b)


@dataclass
class DispatchProgram:
    lp: LinearProgram
    layout: _Layout
    arrays: ScenarioArrays
    ac_factor: np.ndarray  # AC kWh per kW of PV each hour (fixed DC/AC ratio)
    battery: Optional[BatteryTechnology]
    constant: float  # cost of serving the whole load from the grid


def build_program(
    scenario: BuildingScenario,
    catalog: TechnologyCatalog,
    policy: RemunerationPolicy,
    econ: EconomicParams,
    battery: Optional[BatteryTechnology] = None,
    fixed: Optional[Capacities] = None,
    options: DispatchOptions = DispatchOptions(),
) -> DispatchProgram:
    """Assemble the dispatch LP.

    With ``fixed`` the capacities are pinned and only operation is optimized;
    otherwise PV (bounded by the roof) and battery capacity are decision
    variables priced at their annuities.
    """
    arr = ScenarioArrays.from_scenario(scenario, policy, options.cap_includes_teu)
    D = arr.load.shape[0]
    inv, ctl = catalog.inverter, catalog.controller
    if fixed is not None and fixed.battery_kwh > 0:
        battery = fixed.battery
    has_batt = battery is not None and not (fixed is not None and fixed.battery_kwh == 0)
    w = arr.weights[:, None]
    lay = _Layout()
    pl = lay.add("pv_to_load", (D, HOURS))
    px = lay.add("pv_export", (D, HOURS))
    pb = bl = soc = gb = bg = None
    if has_batt:
        pb = lay.add("pv_to_battery", (D, HOURS))
        bl = lay.add("battery_to_load", (D, HOURS))
        soc = lay.add("soc", (D, HOURS))
        if options.grid_charging:
            gb = lay.add("grid_to_battery", (D, HOURS))
        if options.battery_export:
            bg = lay.add("battery_to_grid", (D, HOURS))
    P = lay.add("pv_kw", ())
    E = lay.add("battery_kwh", ()) if has_batt else None
    I = lay.add("inverter_kw", ()) if options.free_inverter else None
    R = lay.add("revenue", (12,))

    lb = np.zeros(lay.n)
    ub = np.full(lay.n, np.inf)
    c = np.zeros(lay.n)

    ann = unit_annuities(catalog, econ, battery if has_batt else None)
    c[pl] = -w * arr.import_price
    c[px] = options.export_epsilon * w
    c[R] = -1.0
    if options.free_inverter:
        c[P] = ann.pv_per_kw
        c[I] = ann.inverter_per_kw
    else:
        c[P] = ann.pv_per_kw + ann.inverter_per_kw / inv.dc_ac_ratio
    if has_batt:
        c[bl] = -w * arr.import_price
        c[E] = ann.battery_per_kwh
        if gb is not None:
            c[gb] = w * arr.import_price
        if bg is not None:
            c[bg] = options.export_epsilon * w

    # worthless exports are curtailed instead
    ub[px] = np.where(arr.export_price > 0, np.inf, 0.0)
    months_present = set(arr.months.tolist())
    for m in range(12):
        if policy is RemunerationPolicy.P1 or (m + 1) not in months_present:
            ub[R[m]] = 0.0

    if fixed is not None:
        lb[P] = ub[P] = fixed.pv_kw
        if has_batt:
            lb[E] = ub[E] = fixed.battery_kwh
        if I is not None:
            inv_kw = fixed.inverter(inv)
            lb[I] = ub[I] = inv_kw
    else:
        ub[P] = scenario.roof_area / catalog.pv.roof_occupation

    ac_factor = inv.efficiency * np.minimum(arr.cf, 1.0 / inv.dc_ac_ratio)
    rows = _Rows()
    load_terms = [(pl, 1.0)] + ([(bl, 1.0)] if has_batt else [])
    rows.add("load", load_terms, arr.load)
    pv_terms = [(pl, 1.0), (px, 1.0)] + ([(pb, 1.0)] if has_batt else [])
    if options.free_inverter:
        rows.add("pv_dc", pv_terms + [(np.full((D, HOURS), P), -inv.efficiency * arr.cf)], np.zeros((D, HOURS)))
        rows.add("pv_inverter", pv_terms + [(np.full((D, HOURS), I), -inv.efficiency)], np.zeros((D, HOURS)))
    else:
        rows.add("pv_ac", pv_terms + [(np.full((D, HOURS), P), -ac_factor)], np.zeros((D, HOURS)))

    eq = _Rows()
    if has_batt:
        b = battery
        e_in = b.eff_charge * ctl.efficiency
        e_out = 1.0 / (b.eff_discharge * ctl.efficiency)
        nxt = np.roll(soc, -1, axis=1)
        charge = [(pb, -e_in)] + ([(gb, -e_in)] if gb is not None else [])
        discharge = [(bl, e_out)] + ([(bg, e_out)] if bg is not None else [])
        eq.add("soc", [(nxt, 1.0), (soc, -1.0)] + charge + discharge, np.zeros((D, HOURS)))
        Ecol = np.full((D, HOURS), E)
        rows.add("soc_max", [(soc, 1.0), (Ecol, -1.0)], np.zeros((D, HOURS)))
        rows.add("soc_min", [(soc, -1.0), (Ecol, b.soc_min)], np.zeros((D, HOURS)))
        rows.add("charge_rate", [(pb, 1.0)] + ([(gb, 1.0)] if gb is not None else []) + [(Ecol, -b.charge_rate_max)],
                 np.zeros((D, HOURS)))
        rows.add("discharge_rate", [(bl, 1.0)] + ([(bg, 1.0)] if bg is not None else [])
                 + [(Ecol, -b.discharge_rate_max)], np.zeros((D, HOURS)))
        age_terms = [(bl.ravel(), np.broadcast_to(w * e_out, bl.shape).ravel())]
        if bg is not None:
            age_terms.append((bg.ravel(), np.broadcast_to(w * e_out, bg.shape).ravel()))
        age_cols = np.concatenate([t[0] for t in age_terms] + [np.array([E])])
        age_coef = np.concatenate([t[1] for t in age_terms] + [np.array([-b.ageing_parameter])])
        rows.add("ageing", [(age_cols[None, :], age_coef[None, :])], np.zeros(1))

    # monthly compensation cap: R_m <= export value and R_m <= import value
    cap_rows_val, cap_rows_imp = [], []
    for m in range(12):
        days = np.flatnonzero(arr.months == m + 1)
        if days.size == 0:
            continue
        ex_cols = [px[days].ravel()]
        ex_coef = [-(w[days] * arr.export_price[days]).ravel()]
        if bg is not None:
            ex_cols.append(bg[days].ravel())
            ex_coef.append(-(w[days] * arr.export_price[days]).ravel())
        cols = np.concatenate([[R[m]]] + ex_cols)
        coef = np.concatenate([[1.0]] + ex_coef)
        cap_rows_val.append((cols, coef))
        wc = (w[days] * arr.cap_price[days])
        im_cols = [pl[days].ravel()]
        im_coef = [wc.ravel()]
        if has_batt:
            im_cols.append(bl[days].ravel())
            im_coef.append(wc.ravel())
            if gb is not None:
                im_cols.append(gb[days].ravel())
                im_coef.append(-wc.ravel())
        cols = np.concatenate([[R[m]]] + im_cols)
        coef = np.concatenate([[1.0]] + im_coef)
        cap_rows_imp.append((cols, coef, float((wc * arr.load[days]).sum())))
    for k, (cols, coef) in enumerate(cap_rows_val):
        rows.add(f"cap_value_{k}", [(cols[None, :], coef[None, :])], np.zeros(1))
    for k, (cols, coef, rhs) in enumerate(cap_rows_imp):
        rows.add(f"cap_import_{k}", [(cols[None, :], coef[None, :])], np.array([rhs]))

    A_ub, b_ub = rows.matrix(lay.n)
    A_eq, b_eq = eq.matrix(lay.n)
    lp = LinearProgram.build(c, A_ub, b_ub, A_eq if eq.m else None, b_eq if eq.m else None, (lb, ub))
    constant = float((w * arr.import_price * arr.load).sum())
    return DispatchProgram(lp, lay, arr, ac_factor, battery if has_batt else None, constant)


def _solve(program: DispatchProgram, options: DispatchOptions):
    res = solve_lp(program.lp, method=options.method, tol=options.tolerances)
    if not res.ok:
        raise SolverError(
            f"dispatch LP not solved: {res.status} ({res.message}) after {res.iterations} iterations",
            {"status": res.status, "iterations": res.iterations, **res.diagnostics},
        )
    return res


def _extract(program: DispatchProgram, x: np.ndarray, catalog: TechnologyCatalog, policy, options) -> DispatchSolution:
    lay, arr = program.layout, program.arrays
    blocks = lay.blocks
    zeros = np.zeros_like(arr.load)

    def get(name):
        if name not in blocks:
            return zeros.copy()
        v = x[blocks[name]]
        return np.where(np.abs(v) < 1e-9, 0.0, v) if np.ndim(v) else float(v)

    pv_kw = max(float(x[blocks["pv_kw"]]), 0.0)
    e_kwh = max(float(x[blocks["battery_kwh"]]), 0.0) if "battery_kwh" in blocks else 0.0
    inv = catalog.inverter
    dc = pv_kw * arr.cf
    if options.free_inverter:
        inv_kw = max(float(x[blocks["inverter_kw"]]), 0.0)
        avail = inv.efficiency * np.minimum(dc, inv_kw)
    else:
        inv_kw = None
        avail = program.ac_factor * pv_kw
    pl, pb, px, bl = get("pv_to_load"), get("pv_to_battery"), get("pv_export"), get("battery_to_load")
    gb, bg = get("grid_to_battery"), get("battery_to_grid")
    curtailed = np.maximum(avail - pl - pb - px, 0.0)
    grid = np.maximum(arr.load - pl - bl, 0.0) + gb
    caps = Capacities(pv_kw, e_kwh, program.battery if e_kwh > 0 else None, inv_kw)
    ledger = monthly_ledger(arr, grid, px + bg)
    return DispatchSolution(
        weights=arr.weights,
        months=arr.months,
        load=arr.load,
        pv_generation_dc=dc,
        pv_available_ac=avail,
        pv_to_load=pl,
        pv_to_battery=pb,
        pv_export=px,
        pv_curtailed=curtailed,
        battery_to_load=bl,
        grid_import=grid,
        soc=get("soc"),
        capacities=caps,
        grid_to_battery=gb,
        battery_to_grid=bg,
        **ledger,
    )


def monthly_ledger(arr: ScenarioArrays, grid_import: np.ndarray, exports: np.ndarray) -> dict:
    """Per-month import value, export value before/after the cap, and uncompensated export energy."""
    w = arr.weights[:, None]
    imp_val = w * arr.import_price * grid_import
    cap_val = w * arr.cap_price * grid_import
    exp_val = w * arr.export_price * exports
    exp_kwh = w * exports
    out = {k: np.zeros(12) for k in ("import_value", "export_value_potential", "export_value_compensated",
                                     "export_energy_uncompensated")}
    for m in range(12):
        days = arr.months == m + 1
        if not days.any():
            continue
        v = exp_val[days].sum()
        comp = min(v, cap_val[days].sum())
        e = exp_kwh[days].sum()
        out["import_value"][m] = imp_val[days].sum()
        out["export_value_potential"][m] = v
        out["export_value_compensated"][m] = comp
        out["export_energy_uncompensated"][m] = e * (1.0 - comp / v) if v > 0 else e
    return out


def dispatch_totals(sol: DispatchSolution) -> dict[str, float]:
    """Annual import cost, compensated export revenue and energy totals."""
    w = sol.weights
    exports = sol.pv_export + sol.battery_to_grid
    return {
        "C_imports": float(sol.import_value.sum()),
        "R_exports": float(sol.export_value_compensated.sum()),
        "energy_imported": float(w @ sol.grid_import.sum(axis=1)),
        "energy_exported": float(w @ exports.sum(axis=1)),
    }


def optimal_dispatch(
    scenario: BuildingScenario,
    capacities: Capacities,
    catalog: TechnologyCatalog,
    policy: RemunerationPolicy,
    econ: EconomicParams = EconomicParams(),
    options: DispatchOptions = DispatchOptions(),
) -> DispatchSolution:
    """Cost-minimizing operation for fixed capacities under perfect foresight."""
    program = build_program(scenario, catalog, policy, econ, fixed=capacities, options=options)
    res = _solve(program, options)
    return _extract(program, res.x, catalog, policy, options)


def solve_joint(
    scenario: BuildingScenario,
    catalog: TechnologyCatalog,
    policy: RemunerationPolicy,
    econ: EconomicParams,
    battery: Optional[BatteryTechnology],
    options: DispatchOptions = DispatchOptions(),
) -> DispatchSolution:
    """Jointly optimal PV/battery capacities and dispatch for one battery technology (or none)."""
    program = build_program(scenario, catalog, policy, econ, battery=battery, options=options)
    res = _solve(program, options)
    return _extract(program, res.x, catalog, policy, options)


def write_dispatch_csv(
    path: Union[str, Path, None],
    sol: DispatchSolution,
    scenario: BuildingScenario,
    month: Optional[int] = None,
    day_kind: Optional[str] = None,
    fmt: str = "csv",
    stream=None,
) -> int:
    """Write one row per (month, day_kind, hour); returns the number of rows."""
    import json

    cols = ("month", "day_kind", "hour", "weight", "load") + FLOW_COLUMNS[:2] + (
        "pv_to_load", "pv_to_battery", "pv_export", "pv_curtailed", "battery_to_load", "grid_import", "soc")
    records = []
    for d, prof in enumerate(scenario.profiles):
        if month is not None and prof.month != month:
            continue
        if day_kind is not None and prof.day_kind.value != day_kind:
            continue
        for h in range(HOURS):
            rec = {"month": prof.month, "day_kind": prof.day_kind.value, "hour": h, "weight": float(prof.weight),
                   "load": float(sol.load[d, h])}
            for c in cols[5:]:
                rec[c] = float(getattr(sol, c)[d, h])
            records.append(rec)
    fh = stream if stream is not None else open(path, "w", newline="")
    try:
        if fmt == "csv":
            wr = csv.writer(fh)
            wr.writerow(cols)
            for rec in records:
                wr.writerow([_fmt(rec[c]) for c in cols])
        else:
            for rec in records:
                fh.write(json.dumps({k: (round(v, 9) if isinstance(v, float) else v) for k, v in rec.items()}) + "\n")
    finally:
        if stream is None:
            fh.close()
    return len(records)


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.9f}"
    return str(v)
