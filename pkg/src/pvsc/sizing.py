"""Least-cost sizing of PV, battery, inverter and controller.

Capacities and hourly operation are optimized together. Each battery
chemistry gets its own joint LP, plus one LP without a battery; the
controller's fixed cost is added afterwards to every candidate that installs
storage, and the cheapest candidate wins. This is exact because the fixed
cost is paid if and only if the battery capacity is positive.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import indicators
from .dispatch import DispatchOptions, ScenarioArrays, dispatch_totals, optimal_dispatch, solve_joint
from .economics import assemble_eac, asr
from .model import (
    BatteryTechnology,
    BuildingScenario,
    Capacities,
    DispatchSolution,
    EconomicParams,
    OptimizationResult,
    RemunerationPolicy,
    TechnologyCatalog,
    validate_scenario,
)

# capacities below this are treated as not installed
CAPACITY_ZERO = 1e-6
# relative EAC difference below which candidates count as tied (earlier one kept)
TIE_TOLERANCE = 1e-9


@dataclass(frozen=True)
class SizingOptions:
    dispatch: DispatchOptions = DispatchOptions()
    batteries: Optional[Sequence[str]] = None  # restrict to these chemistries; None = whole catalog
    workers: int = 1  # concurrent per-technology LPs
    om: float = 0.0  # fixed annual O&M, EUR


@dataclass(frozen=True)
class Candidate:
    battery: Optional[str]
    eac: float
    capacities: Capacities
    dispatch: DispatchSolution = field(repr=False)


def baseline_cost(scenario: BuildingScenario) -> float:
    """Annual bill when the whole load is bought from the grid."""
    arr = ScenarioArrays.from_scenario(scenario, RemunerationPolicy.P1)
    return float((arr.weights[:, None] * arr.import_price * arr.load).sum())


def _snap(v: float) -> float:
    return 0.0 if v < CAPACITY_ZERO else v


def _evaluate(sol, catalog, econ, om) -> tuple[float, Capacities]:
    caps = sol.capacities
    pv_kw = _snap(caps.pv_kw)
    e_kwh = _snap(caps.battery_kwh)
    caps = Capacities(pv_kw, e_kwh, caps.battery if e_kwh > 0 else None, caps.inverter_kw)
    totals = dispatch_totals(sol)
    cost = assemble_eac(caps, catalog, econ, totals["C_imports"], totals["R_exports"], om)
    return cost.eac, caps


def candidates(
    scenario: BuildingScenario,
    catalog: TechnologyCatalog,
    policy: RemunerationPolicy,
    econ: EconomicParams = EconomicParams(),
    options: SizingOptions = SizingOptions(),
    include_free: bool = True,
) -> list[Candidate]:
    """Optimal configuration per battery technology, battery-free first.

    Battery candidates whose optimum installs no storage are dropped.
    """
    names = [b.name for b in catalog.batteries] if options.batteries is None else list(options.batteries)
    techs: list[Optional[BatteryTechnology]] = [None] if include_free else []
    techs += [catalog.battery(n) for n in names]

    def run(b):
        return solve_joint(scenario, catalog, policy, econ, b, options.dispatch)

    if options.workers > 1 and len(techs) > 1:
        with ThreadPoolExecutor(max_workers=options.workers) as pool:
            sols = list(pool.map(run, techs))
    else:
        sols = [run(b) for b in techs]
    out = []
    for b, sol in zip(techs, sols):
        eac, caps = _evaluate(sol, catalog, econ, options.om)
        if b is not None and caps.battery_kwh == 0:
            continue  # same configuration as the battery-free candidate
        out.append(Candidate(b.name if b is not None else None, eac, caps, sol))
    return out


def _best(cands: list[Candidate]) -> Candidate:
    best = cands[0]
    for c in cands[1:]:
        if c.eac < best.eac - TIE_TOLERANCE * max(abs(best.eac), 1.0):
            best = c
    return best


def build_result(
    scenario: BuildingScenario,
    catalog: TechnologyCatalog,
    policy: RemunerationPolicy,
    eac: float,
    caps: Capacities,
    sol: DispatchSolution,
    eac_no_pv: Optional[float] = None,
) -> OptimizationResult:
    base = baseline_cost(scenario) if eac_no_pv is None else eac_no_pv
    return OptimizationResult(
        region=scenario.region_label,
        policy=policy,
        pv_kw=caps.pv_kw,
        battery_kwh=caps.battery_kwh,
        battery_technology=caps.battery.name if caps.battery is not None else None,
        inverter_kw=caps.inverter(catalog.inverter),
        controller_kw=caps.controller_kw(),
        eac=eac,
        eac_no_pv=base,
        asr=asr(base, eac),
        ssr=indicators.ssr(sol),
        scr=indicators.scr(sol),
        eir=indicators.eir(sol),
        rooftop_fraction=min(indicators.rooftop_fraction(caps.pv_kw, catalog.pv.roof_occupation, scenario.roof_area),
                             100.0),
        households=scenario.households,
        synthetic=scenario.synthetic,
        dispatch=sol,
    )


def optimize_installation(
    scenario: BuildingScenario,
    catalog: TechnologyCatalog,
    policy: RemunerationPolicy,
    econ: EconomicParams = EconomicParams(),
    options: SizingOptions = SizingOptions(),
) -> OptimizationResult:
    """Least-EAC installation and its operation for one remuneration policy."""
    problems = validate_scenario(scenario)
    if problems:
        raise ValueError(f"invalid scenario {scenario.region_label!r}: " + "; ".join(problems))
    best = _best(candidates(scenario, catalog, policy, econ, options))
    return build_result(scenario, catalog, policy, best.eac, best.capacities, best.dispatch)


def evaluate_fixed(
    scenario: BuildingScenario,
    catalog: TechnologyCatalog,
    policy: RemunerationPolicy,
    capacities: Capacities,
    econ: EconomicParams = EconomicParams(),
    options: SizingOptions = SizingOptions(),
) -> float:
    """EAC of given capacities operated optimally."""
    sol = optimal_dispatch(scenario, capacities, catalog, policy, econ, options.dispatch)
    totals = dispatch_totals(sol)
    return assemble_eac(capacities, catalog, econ, totals["C_imports"], totals["R_exports"], options.om).eac


def compare_policies(
    scenario: BuildingScenario,
    catalog: TechnologyCatalog,
    econ: EconomicParams = EconomicParams(),
    options: SizingOptions = SizingOptions(),
) -> list[OptimizationResult]:
    """Optimal installation under P1, P2 and P3 with shared inputs."""
    return [optimize_installation(scenario, catalog, p, econ, options) for p in RemunerationPolicy]


def rounding_report(result: OptimizationResult, step_kw: float = 0.1) -> dict:
    """Capacities rounded to practical steps, with the rounding applied."""
    def rnd(v):
        return float(np.round(v / step_kw) * step_kw)

    return {
        "pv_kw": rnd(result.pv_kw),
        "battery_kwh": rnd(result.battery_kwh),
        "inverter_kw": rnd(result.inverter_kw),
        "controller_kw": rnd(result.controller_kw),
        "pv_kw_delta": rnd(result.pv_kw) - result.pv_kw,
    }
