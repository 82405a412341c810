"""Performance indicators of an operated installation, in percent.

All sums are weight-expanded over the representative days, i.e. annual
energy. SCR uses delivered PV (AC-available output minus curtailment) as its
denominator so that an installation exporting nothing scores 100; the share
lost to curtailment is reported separately by :func:`curtailed_share`.
Battery contributions are counted on the output side, after losses.
"""

from __future__ import annotations

import numpy as np

from .model import DispatchSolution


def _annual(sol: DispatchSolution, arr: np.ndarray) -> float:
    return float(sol.weights @ np.asarray(arr).sum(axis=1))


def self_consumed(sol: DispatchSolution) -> float:
    """Annual load served on-site by PV directly or through the battery (kWh)."""
    return _annual(sol, sol.pv_to_load + sol.battery_to_load)


def delivered_pv(sol: DispatchSolution) -> float:
    return _annual(sol, sol.pv_available_ac - sol.pv_curtailed)


def energy_imported(sol: DispatchSolution) -> float:
    return _annual(sol, sol.grid_import)


def energy_exported(sol: DispatchSolution) -> float:
    return _annual(sol, sol.pv_export + sol.battery_to_grid)


def ssr(sol: DispatchSolution) -> float:
    """Self-sufficiency: share of annual load not bought from the grid."""
    load = _annual(sol, sol.load)
    if load <= 0:
        return 0.0
    return float(np.clip(100.0 * self_consumed(sol) / load, 0.0, 100.0))


def scr(sol: DispatchSolution) -> float:
    """Self-consumption: share of delivered PV used on-site; 0 without PV."""
    pv = delivered_pv(sol)
    if pv <= 1e-12:
        return 0.0
    return float(np.clip(100.0 * self_consumed(sol) / pv, 0.0, 100.0))


def eir(sol: DispatchSolution) -> float:
    """Annual exported over imported energy; infinite when exporting without imports."""
    exp, imp = energy_exported(sol), energy_imported(sol)
    if exp <= 0:
        return 0.0
    return 100.0 * exp / imp if imp > 0 else float("inf")


def eir_value(sol: DispatchSolution) -> float:
    """Diagnostic: export value before the monthly cap over import value."""
    imp = float(sol.import_value.sum())
    exp = float(sol.export_value_potential.sum())
    if exp <= 0:
        return 0.0
    return 100.0 * exp / imp if imp > 0 else float("inf")


def curtailed_share(sol: DispatchSolution) -> float:
    """Share of AC-available PV that is curtailed."""
    avail = _annual(sol, sol.pv_available_ac)
    if avail <= 1e-12:
        return 0.0
    return 100.0 * _annual(sol, sol.pv_curtailed) / avail


def rooftop_fraction(pv_kw: float, roof_occupation: float, roof_area: float) -> float:
    """Share of the roof covered by ``pv_kw`` of panels."""
    if roof_area <= 0:
        raise ValueError(f"roof area must be > 0, got {roof_area}")
    return 100.0 * pv_kw * roof_occupation / roof_area
