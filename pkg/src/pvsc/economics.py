"""Annualized-cost arithmetic.

Capital costs are spread over component lifetimes with the capital recovery
(annuity) factor. Because the cash flows from grid trade do not depend on the
discount rate or on lifetimes, a change of either can be folded into an
equivalent capital cost at the reference rate/lifetime; the helpers here do
that transform for single costs and for whole catalogs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

from .model import BatteryTechnology, Capacities, EconomicParams, TechnologyCatalog


def annuity_factor(r: float, lifetime: float) -> float:
    """Capital recovery factor ``r / (1 - (1 + r)**-L)``; ``1/L`` at ``r = 0``."""
    if not (math.isfinite(r) and math.isfinite(lifetime)):
        raise ValueError(f"annuity_factor needs finite inputs, got r={r}, L={lifetime}")
    if r < 0:
        raise ValueError(f"discount rate must be >= 0, got {r}")
    if lifetime < 1:
        raise ValueError(f"lifetime must be >= 1 year, got {lifetime}")
    if r == 0:
        return 1.0 / lifetime
    if r < 1e-8:
        # series in r; the closed form loses all precision for subnormal r
        return 1.0 / lifetime + r * (lifetime + 1.0) / (2.0 * lifetime)
    # 1 - (1+r)^-L without cancellation for small r
    return r / -math.expm1(-lifetime * math.log1p(r))


def equivalent_capital_cost(cc: float, r0: float, l0: float, r: float, lifetime: float) -> float:
    """Capital cost at (r0, l0) carrying the same annuity as ``cc`` at (r, lifetime)."""
    return cc * annuity_factor(r, lifetime) / annuity_factor(r0, l0)


def equivalent_capital_cost_rate(cc: float, r0: float, r: float, lifetime: float) -> float:
    """Equivalent cost at rate ``r0`` of a capital cost annuitized at rate ``r``.

    Equal to ``cc * (r/r0) * (1-(1+r0)**-L) / (1-(1+r)**-L)``, with the
    ``r -> 0`` and ``r0 -> 0`` limits taken through :func:`annuity_factor`.
    """
    return equivalent_capital_cost(cc, r0, lifetime, r, lifetime)


def equivalent_capital_cost_lifetime(cc: float, r: float, l0: float, lifetime: float) -> float:
    """Equivalent cost at lifetime ``l0`` of a capital cost amortized over ``lifetime``."""
    return equivalent_capital_cost(cc, r, l0, r, lifetime)


def asr(eac_no_pv: float, eac_pv: float) -> float:
    """Annualized savings ratio, percent."""
    if not eac_no_pv > 0:
        raise ValueError(f"ASR undefined for non-positive baseline EAC ({eac_no_pv})")
    return 100.0 * (eac_no_pv - eac_pv) / eac_no_pv


@dataclass(frozen=True)
class AnnualizedCostBreakdown:
    pv_annuity: float
    inverter_annuity: float
    battery_annuity: float
    controller_annuity: float
    imports_cost: float
    exports_revenue: float
    om: float = 0.0

    @property
    def capital(self) -> float:
        return self.pv_annuity + self.inverter_annuity + self.battery_annuity + self.controller_annuity

    @property
    def eac(self) -> float:
        return self.capital + self.om + self.imports_cost - self.exports_revenue


@dataclass(frozen=True)
class UnitAnnuities:
    """Per-unit annual capital charges used as LP cost coefficients."""

    pv_per_kw: float  # panel + BOS
    inverter_per_kw: float  # per kW AC
    battery_per_kwh: float  # battery + controller power share
    controller_fixed: float


def unit_annuities(
    catalog: TechnologyCatalog, econ: EconomicParams, battery: Optional[BatteryTechnology] = None
) -> UnitAnnuities:
    r = econ.discount_rate
    pv, inv, ctl = catalog.pv, catalog.inverter, catalog.controller
    batt = 0.0
    if battery is not None:
        rate = max(battery.charge_rate_max, battery.discharge_rate_max)
        batt = battery.unit_cost * annuity_factor(r, battery.lifetime) + rate * ctl.unit_cost * annuity_factor(
            r, ctl.lifetime
        )
    return UnitAnnuities(
        pv_per_kw=pv.unit_cost * annuity_factor(r, pv.lifetime),
        inverter_per_kw=inv.unit_cost * annuity_factor(r, inv.lifetime),
        battery_per_kwh=batt,
        controller_fixed=ctl.fixed_cost * annuity_factor(r, ctl.lifetime),
    )


def assemble_eac(
    capacities: Capacities,
    catalog: TechnologyCatalog,
    econ: EconomicParams,
    imports_cost: float = 0.0,
    exports_revenue: float = 0.0,
    om: float = 0.0,
) -> AnnualizedCostBreakdown:
    """Annualize every component and add the year's grid cash flows.

    The controller's fixed cost is charged only when a battery is installed.
    """
    r = econ.discount_rate
    pv, inv, ctl = catalog.pv, catalog.inverter, catalog.controller
    battery_annuity = controller_annuity = 0.0
    if capacities.battery_kwh > 0:
        b = capacities.battery
        battery_annuity = capacities.battery_kwh * b.unit_cost * annuity_factor(r, b.lifetime)
        controller_annuity = (ctl.fixed_cost + capacities.controller_kw() * ctl.unit_cost) * annuity_factor(
            r, ctl.lifetime
        )
    return AnnualizedCostBreakdown(
        pv_annuity=capacities.pv_kw * pv.unit_cost * annuity_factor(r, pv.lifetime),
        inverter_annuity=capacities.inverter(inv) * inv.unit_cost * annuity_factor(r, inv.lifetime),
        battery_annuity=battery_annuity,
        controller_annuity=controller_annuity,
        imports_cost=imports_cost,
        exports_revenue=exports_revenue,
        om=om,
    )


def transform_catalog_rate(catalog: TechnologyCatalog, r0: float, r: float) -> TechnologyCatalog:
    """Catalog whose costs at rate ``r0`` reproduce every annuity at rate ``r``."""

    def eq(cc, lifetime):
        return equivalent_capital_cost_rate(cc, r0, r, lifetime)

    pv, inv, ctl = catalog.pv, catalog.inverter, catalog.controller
    return replace(
        catalog,
        pv=replace(pv, panel_cost=eq(pv.panel_cost, pv.lifetime), bos_labour_cost=eq(pv.bos_labour_cost, pv.lifetime)),
        inverter=replace(inv, unit_cost=eq(inv.unit_cost, inv.lifetime)),
        controller=replace(
            ctl, fixed_cost=eq(ctl.fixed_cost, ctl.lifetime), unit_cost=eq(ctl.unit_cost, ctl.lifetime)
        ),
        batteries=tuple(replace(b, unit_cost=eq(b.unit_cost, b.lifetime)) for b in catalog.batteries),
    )


def transform_catalog_pv_lifetime(catalog: TechnologyCatalog, r: float, lifetime: float) -> TechnologyCatalog:
    """Catalog keeping the PV lifetime but with PV costs equivalent to ``lifetime``."""
    pv = catalog.pv
    l0 = pv.lifetime
    return replace(
        catalog,
        pv=replace(
            pv,
            panel_cost=equivalent_capital_cost_lifetime(pv.panel_cost, r, l0, lifetime),
            bos_labour_cost=equivalent_capital_cost_lifetime(pv.bos_labour_cost, r, l0, lifetime),
        ),
    )


def total_installed_cost_per_kwp(catalog: TechnologyCatalog) -> float:
    """Panel + installation + inverter share per kW of PV (inverter sized by the DC/AC ratio)."""
    return catalog.pv.unit_cost + catalog.inverter.unit_cost / catalog.inverter.dc_ac_ratio


def equivalent_total_cost_rate(catalog: TechnologyCatalog, r0: float, r: float) -> dict[str, float]:
    """PV and inverter equivalents per kWp at ``r0`` for discount rate ``r``, plus their sum."""
    pv, inv = catalog.pv, catalog.inverter
    pv_eq = equivalent_capital_cost_rate(pv.unit_cost, r0, r, pv.lifetime)
    inv_eq = equivalent_capital_cost_rate(inv.unit_cost / inv.dc_ac_ratio, r0, r, inv.lifetime)
    return {"pv": pv_eq, "inverter": inv_eq, "total": pv_eq + inv_eq}


def equivalent_total_cost_lifetime(catalog: TechnologyCatalog, r: float, lifetime: float) -> dict[str, float]:
    """As :func:`equivalent_total_cost_rate` for a change of PV lifetime (inverter unchanged)."""
    pv, inv = catalog.pv, catalog.inverter
    pv_eq = equivalent_capital_cost_lifetime(pv.unit_cost, r, pv.lifetime, lifetime)
    inv_eq = inv.unit_cost / inv.dc_ac_ratio
    return {"pv": pv_eq, "inverter": inv_eq, "total": pv_eq + inv_eq}


def nominal_pv_cost(catalog: TechnologyCatalog) -> float:
    """Panel + installation + inverter unit cost, the headline "PV cost" (1,080 EUR/kW at reference)."""
    return catalog.pv.unit_cost + catalog.inverter.unit_cost


def scale_pv_cost(catalog: TechnologyCatalog, pv_cost: float) -> TechnologyCatalog:
    """Scale panel, installation and inverter costs pro rata to a headline PV cost."""
    k = pv_cost / nominal_pv_cost(catalog)
    pv, inv = catalog.pv, catalog.inverter
    return replace(
        catalog,
        pv=replace(pv, panel_cost=pv.panel_cost * k, bos_labour_cost=pv.bos_labour_cost * k),
        inverter=replace(inv, unit_cost=inv.unit_cost * k),
    )
