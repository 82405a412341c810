"""Domain types shared by every module.

All types are frozen dataclasses. Technology parameters are validated at
construction; scenario-level consistency (weights, energy totals, bounds on
profile values) is reported by :func:`validate_scenario` so callers can decide
what to do with a slightly off dataset.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

HOURS = 24
DAYS_PER_YEAR = 365


def _frozen_array(values, name: str, length: int = HOURS) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim == 0:
        arr = np.full(length, float(arr))
    if arr.shape != (length,):
        raise ValueError(f"{name}: expected {length} hourly values, got shape {arr.shape}")
    arr.flags.writeable = False
    return arr


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ValueError(msg)


def _positive(obj, *names: str) -> None:
    for n in names:
        v = getattr(obj, n)
        _require(math.isfinite(v) and v > 0, f"{type(obj).__name__}.{n} must be > 0, got {v}")


def _fraction(obj, *names: str) -> None:
    for n in names:
        v = getattr(obj, n)
        _require(0 < v <= 1, f"{type(obj).__name__}.{n} must be in (0, 1], got {v}")


@dataclass(frozen=True)
class PvTechnology:
    panel_cost: float  # EUR/kW
    bos_labour_cost: float  # EUR/kW
    lifetime: float  # years
    roof_occupation: float  # m2/kW

    def __post_init__(self):
        _positive(self, "panel_cost", "bos_labour_cost", "lifetime", "roof_occupation")

    @property
    def unit_cost(self) -> float:
        return self.panel_cost + self.bos_labour_cost


@dataclass(frozen=True)
class Inverter:
    unit_cost: float  # EUR/kW AC
    efficiency: float
    lifetime: float
    dc_ac_ratio: float

    def __post_init__(self):
        _positive(self, "unit_cost", "lifetime")
        _fraction(self, "efficiency")
        _require(self.dc_ac_ratio >= 1, f"Inverter.dc_ac_ratio must be >= 1, got {self.dc_ac_ratio}")


@dataclass(frozen=True)
class BatteryTechnology:
    name: str
    unit_cost: float  # EUR/kWh
    ageing_parameter: float  # equivalent full cycles per year
    lifetime: float
    soc_min: float
    charge_rate_max: float  # 1/h
    discharge_rate_max: float  # 1/h
    eff_charge: float
    eff_discharge: float

    def __post_init__(self):
        _positive(self, "unit_cost", "ageing_parameter", "lifetime", "charge_rate_max", "discharge_rate_max")
        _fraction(self, "eff_charge", "eff_discharge")
        _require(0 <= self.soc_min < 1, f"BatteryTechnology.soc_min must be in [0, 1), got {self.soc_min}")


@dataclass(frozen=True)
class Controller:
    fixed_cost: float  # EUR
    unit_cost: float  # EUR/kW
    efficiency: float
    lifetime: float = 10.0

    def __post_init__(self):
        _require(self.fixed_cost >= 0, "Controller.fixed_cost must be >= 0")
        _positive(self, "unit_cost", "lifetime")
        _fraction(self, "efficiency")


@dataclass(frozen=True)
class TechnologyCatalog:
    pv: PvTechnology
    inverter: Inverter
    controller: Controller
    batteries: tuple[BatteryTechnology, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "batteries", tuple(self.batteries))
        names = [b.name for b in self.batteries]
        _require(len(set(names)) == len(names), f"duplicate battery names in catalog: {names}")

    def battery(self, name: str) -> BatteryTechnology:
        for b in self.batteries:
            if b.name == name:
                return b
        raise KeyError(f"no battery technology named {name!r}")


@dataclass(frozen=True)
class PriceDecomposition:
    """Energy-term price components, in EUR/kWh.

    Fields may be scalars or equal-length arrays (one value per hour).
    ``perd_fraction`` is the power-losses component expressed as a fraction
    of the production cost.
    """

    teu: object
    pmh: object
    sah: object
    oc: object
    perd_fraction: object = 0.17

    def __post_init__(self):
        for n in ("teu", "pmh", "sah", "oc", "perd_fraction"):
            v = getattr(self, n)
            if np.ndim(v):
                arr = np.array(v, dtype=float)
                arr.flags.writeable = False
                object.__setattr__(self, n, arr)
                bad = not np.all(np.isfinite(arr)) or np.any(arr < 0)
            else:
                object.__setattr__(self, n, float(v))
                bad = not math.isfinite(v) or v < 0
            _require(not bad, f"PriceDecomposition.{n} must be finite and >= 0")

    @property
    def cp(self):
        return self.pmh + self.sah + self.oc

    @property
    def perd(self):
        return self.perd_fraction * self.cp

    @property
    def tcu(self):
        return self.cp + self.perd

    @property
    def import_energy_price(self):
        return self.tcu + self.teu

    def at(self, hour: int) -> "PriceDecomposition":
        def pick(v):
            return float(v[hour]) if np.ndim(v) else v

        return PriceDecomposition(*(pick(getattr(self, n)) for n in ("teu", "pmh", "sah", "oc", "perd_fraction")))

    def __eq__(self, other):
        if not isinstance(other, PriceDecomposition):
            return NotImplemented
        return all(
            np.array_equal(getattr(self, n), getattr(other, n))
            for n in ("teu", "pmh", "sah", "oc", "perd_fraction")
        )

    __hash__ = None


# 2018 averages for the no-discrimination tariff. TCU = 79.3 EUR/MWh with
# PERD at 17 % of CP fixes CP; the SAH/OC split of the remainder is ours.
_CP_2018 = 0.0793 / 1.17
PRICES_2018_AVERAGE = PriceDecomposition(
    teu=0.0440,
    pmh=0.0572,
    sah=0.0045,
    oc=_CP_2018 - 0.0572 - 0.0045,
    perd_fraction=0.17,
)


class RemunerationPolicy(enum.Enum):
    P1 = "p1"  # no remuneration
    P2 = "p2"  # exports valued at PMH
    P3 = "p3"  # exports valued at PMH + PERD

    @classmethod
    def parse(cls, label: str) -> "RemunerationPolicy":
        try:
            return cls(label.strip().lower())
        except ValueError:
            raise ValueError(f"unknown policy {label!r}; expected one of p1, p2, p3") from None

    @property
    def label(self) -> str:
        return self.name


class DayKind(str, enum.Enum):
    WEEKDAY = "weekday"
    WEEKEND = "weekend"


@dataclass(frozen=True, eq=False)
class RepresentativeDay:
    month: int
    day_kind: DayKind
    weight: float
    load: np.ndarray
    solar_cf: np.ndarray
    prices: PriceDecomposition

    def __post_init__(self):
        object.__setattr__(self, "day_kind", DayKind(self.day_kind))
        object.__setattr__(self, "load", _frozen_array(self.load, "load"))
        object.__setattr__(self, "solar_cf", _frozen_array(self.solar_cf, "solar_cf"))
        p = self.prices
        object.__setattr__(
            self,
            "prices",
            PriceDecomposition(
                *(_frozen_array(getattr(p, n), n) for n in ("teu", "pmh", "sah", "oc", "perd_fraction"))
            ),
        )

    def __eq__(self, other):
        if not isinstance(other, RepresentativeDay):
            return NotImplemented
        return (
            self.month == other.month
            and self.day_kind == other.day_kind
            and self.weight == other.weight
            and np.array_equal(self.load, other.load)
            and np.array_equal(self.solar_cf, other.solar_cf)
            and self.prices == other.prices
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class BuildingScenario:
    region_label: str
    households: float
    floor_area: float
    roof_area: float
    annual_consumption_per_household: float
    profiles: tuple[RepresentativeDay, ...] = ()
    synthetic: bool = False
    annual_cf: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "profiles", tuple(self.profiles))

    @property
    def annual_load(self) -> float:
        return self.households * self.annual_consumption_per_household

    def with_profiles(self, profiles: Sequence[RepresentativeDay], **changes) -> "BuildingScenario":
        from dataclasses import replace

        return replace(self, profiles=tuple(profiles), **changes)

    def __eq__(self, other):
        if not isinstance(other, BuildingScenario):
            return NotImplemented
        return (
            self.region_label == other.region_label
            and self.households == other.households
            and self.floor_area == other.floor_area
            and self.roof_area == other.roof_area
            and self.annual_consumption_per_household == other.annual_consumption_per_household
            and self.synthetic == other.synthetic
            and self.annual_cf == other.annual_cf
            and len(self.profiles) == len(other.profiles)
            and all(a == b for a, b in zip(self.profiles, other.profiles))
        )

    __hash__ = None


@dataclass(frozen=True)
class EconomicParams:
    discount_rate: float = 0.02
    currency_label: str = "EUR"

    def __post_init__(self):
        _require(
            math.isfinite(self.discount_rate) and self.discount_rate >= 0,
            f"EconomicParams.discount_rate must be >= 0, got {self.discount_rate}",
        )


@dataclass(frozen=True)
class Capacities:
    pv_kw: float = 0.0
    battery_kwh: float = 0.0
    battery: Optional[BatteryTechnology] = None
    inverter_kw: Optional[float] = None  # None -> pv_kw / dc_ac_ratio

    def __post_init__(self):
        _require(self.pv_kw >= 0 and self.battery_kwh >= 0, "capacities must be >= 0")
        _require(
            self.battery_kwh == 0 or self.battery is not None,
            "a battery technology is required when battery_kwh > 0",
        )

    def inverter(self, inv: Inverter) -> float:
        return self.pv_kw / inv.dc_ac_ratio if self.inverter_kw is None else self.inverter_kw

    def controller_kw(self) -> float:
        if self.battery is None or self.battery_kwh == 0:
            return 0.0
        return max(self.battery.charge_rate_max, self.battery.discharge_rate_max) * self.battery_kwh


@dataclass(frozen=True, eq=False)
class DispatchSolution:
    """Hourly flows in kWh, arrays shaped (n_days, 24) in profile order.

    ``soc[:, t]`` is the state of charge at the start of hour ``t``; the daily
    cycle closes back onto ``soc[:, 0]``. Monthly ledgers are arrays of 12.
    """

    weights: np.ndarray
    months: np.ndarray
    load: np.ndarray
    pv_generation_dc: np.ndarray
    pv_available_ac: np.ndarray
    pv_to_load: np.ndarray
    pv_to_battery: np.ndarray
    pv_export: np.ndarray
    pv_curtailed: np.ndarray
    battery_to_load: np.ndarray
    grid_import: np.ndarray
    soc: np.ndarray
    import_value: np.ndarray
    export_value_potential: np.ndarray
    export_value_compensated: np.ndarray
    export_energy_uncompensated: np.ndarray
    capacities: Capacities = field(default_factory=Capacities)
    grid_to_battery: Optional[np.ndarray] = None
    battery_to_grid: Optional[np.ndarray] = None

    def __post_init__(self):
        for name in ("grid_to_battery", "battery_to_grid"):
            if getattr(self, name) is None:
                object.__setattr__(self, name, np.zeros_like(self.load))

    def annual(self, flow: str) -> float:
        """Weight-expanded annual sum of an hourly flow."""
        return float(self.weights @ getattr(self, flow).sum(axis=1))


@dataclass(frozen=True)
class OptimizationResult:
    region: str
    policy: RemunerationPolicy
    pv_kw: float
    battery_kwh: float
    battery_technology: Optional[str]
    inverter_kw: float
    controller_kw: float
    eac: float
    eac_no_pv: float
    asr: float
    ssr: float
    scr: float
    eir: float
    rooftop_fraction: float
    households: float = 1.0
    synthetic: bool = False
    dispatch: Optional[DispatchSolution] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        _require(
            min(self.pv_kw, self.battery_kwh, self.inverter_kw, self.controller_kw) >= 0,
            "capacities must be >= 0",
        )
        _require(-1e-9 <= self.rooftop_fraction <= 100 + 1e-9, f"rooftop_fraction out of range: {self.rooftop_fraction}")

    @property
    def pv_kw_per_household(self) -> float:
        return self.pv_kw / self.households

    @property
    def battery_kwh_per_household(self) -> float:
        return self.battery_kwh / self.households

    @property
    def config_class(self) -> str:
        if self.battery_kwh > 0:
            return "pv+battery" if self.pv_kw > 0 else "battery"
        return "pv" if self.pv_kw > 0 else "none"


def validate_scenario(s: BuildingScenario) -> list[str]:
    """Return human-readable invariant violations; empty when the scenario is consistent."""
    out = []
    if not s.households >= 1:
        out.append(f"households must be >= 1 (got {s.households})")
    if not s.roof_area > 0:
        out.append(f"roof_area must be > 0 (got {s.roof_area})")
    if not s.annual_consumption_per_household > 0:
        out.append(f"annual consumption must be > 0 (got {s.annual_consumption_per_household})")
    if not s.profiles:
        out.append("scenario has no representative days")
        return out
    for i, d in enumerate(s.profiles):
        tag = f"profile {i} (month {d.month}, {d.day_kind.value})"
        if not 1 <= d.month <= 12:
            out.append(f"{tag}: month out of range")
        if not d.weight > 0:
            out.append(f"{tag}: weight must be > 0")
        if not np.all(np.isfinite(d.load)) or np.any(d.load < 0):
            out.append(f"{tag}: load must be finite and >= 0")
        if not np.all(np.isfinite(d.solar_cf)) or np.any(d.solar_cf < 0) or np.any(d.solar_cf > 1):
            out.append(f"{tag}: solar_cf outside [0, 1]")
    wsum = sum(d.weight for d in s.profiles)
    if not math.isclose(wsum, DAYS_PER_YEAR, rel_tol=0, abs_tol=1e-9):
        out.append(f"weights sum {wsum:g} != {DAYS_PER_YEAR}")
    energy = sum(d.weight * float(d.load.sum()) for d in s.profiles)
    if s.annual_load > 0 and abs(energy - s.annual_load) > 1e-3 * s.annual_load:
        out.append(f"annual load {energy:.1f} kWh differs from H x C = {s.annual_load:.1f} kWh by more than 0.1%")
    return out
