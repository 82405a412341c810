"""Loading scenarios, catalogs and profiles, and synthesizing profiles.

Builtin datasets live in ``pvsc/data``:

``reference_catalog.csv``
    Long format ``component,key,value``. Components are ``pv``,
    ``inverter``, ``controller``, ``battery`` (defaults shared by every
    chemistry) and ``battery:<name>`` (one per chemistry; may override any
    default). Keys carry their unit, e.g. ``unit_cost_eur_per_kwh``.
``regions.csv``
    ``region,floor_area_m2,households,consumption_kwh_per_household,
    roof_area_m2,annual_cf``. The roof area is back-solved from the regional
    results table (PV capacity x 10 m2/kW divided by the reported rooftop
    share, averaged over both remuneration cases) because no roof model is
    given. ``annual_cf`` values are approximate read-offs of a regional
    capacity-factor map.
``published_regional_results.csv``
    Published regional results, kept for side-by-side reporting only.

When the hourly load, price and irradiance datasets are not available,
:func:`synthesize_profiles` builds 24 representative days (12 months x
weekday/weekend) from documented analytic shapes. Scenarios built this way
are flagged ``synthetic`` and every report says so.
"""

from __future__ import annotations

import calendar
import csv
import hashlib
import io
import os
import re
from dataclasses import replace
from importlib import resources
from pathlib import Path
from typing import Optional, Union

import numpy as np

from . import tariff
from .model import (
    HOURS,
    BatteryTechnology,
    BuildingScenario,
    Controller,
    DayKind,
    EconomicParams,
    Inverter,
    PriceDecomposition,
    PvTechnology,
    RepresentativeDay,
    TechnologyCatalog,
)

DATA_DIR_ENV = "PVSC_DATA_DIR"
REFERENCE_YEAR = 2018
BUILTIN_FILES = ("reference_catalog.csv", "regions.csv", "published_regional_results.csv")

PathLike = Union[str, Path]

# key -> (component field, converter)
_PV_KEYS = {
    "panel_cost_eur_per_kw": "panel_cost",
    "bos_labour_cost_eur_per_kw": "bos_labour_cost",
    "lifetime_years": "lifetime",
    "roof_occupation_m2_per_kw": "roof_occupation",
}
_INVERTER_KEYS = {
    "unit_cost_eur_per_kw": "unit_cost",
    "efficiency": "efficiency",
    "lifetime_years": "lifetime",
    "dc_ac_ratio": "dc_ac_ratio",
}
_CONTROLLER_KEYS = {
    "fixed_cost_eur": "fixed_cost",
    "unit_cost_eur_per_kw": "unit_cost",
    "efficiency": "efficiency",
    "lifetime_years": "lifetime",
}
_BATTERY_KEYS = {
    "unit_cost_eur_per_kwh": "unit_cost",
    "ageing_cycles_per_year": "ageing_parameter",
    "lifetime_years": "lifetime",
    "soc_min_fraction": "soc_min",
    "charge_rate_max_per_h": "charge_rate_max",
    "discharge_rate_max_per_h": "discharge_rate_max",
    "eff_charge": "eff_charge",
    "eff_discharge": "eff_discharge",
}
_COMPONENT_KEYS = {"pv": _PV_KEYS, "inverter": _INVERTER_KEYS, "controller": _CONTROLLER_KEYS, "battery": _BATTERY_KEYS}

REGION_COLUMNS = (
    "region",
    "floor_area_m2",
    "households",
    "consumption_kwh_per_household",
    "roof_area_m2",
    "annual_cf",
)
PROFILE_COLUMNS = ("region", "month", "day_kind", "hour", "load_kwh", "solar_cf") + tariff.PRICE_COLUMNS


class InputError(ValueError):
    """Malformed input file or unknown selector."""


# -- builtin data ---------------------------------------------------------------


def data_dir() -> Optional[Path]:
    d = os.environ.get(DATA_DIR_ENV)
    return Path(d) if d else None


def _builtin_text(name: str) -> str:
    return resources.files("pvsc.data").joinpath(name).read_text()


def builtin_checksums() -> dict[str, str]:
    return {name: hashlib.sha256(_builtin_text(name).encode()).hexdigest() for name in BUILTIN_FILES}


def _open_source(source: PathLike, builtin_name: str) -> tuple[str, str]:
    """Return (text, label) for ``"reference"``/``"builtin"`` or a file path."""
    if str(source) in ("reference", "builtin"):
        return _builtin_text(builtin_name), f"builtin:{builtin_name}"
    path = Path(source)
    if not path.exists() and data_dir() is not None and (data_dir() / path).exists():
        path = data_dir() / path
    if not path.exists():
        raise InputError(f"no such file: {source}")
    return path.read_text(), str(path)


def _number(value: str, label: str, lineno: int, field: str) -> float:
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise InputError(f"{label}:{lineno}: field {field!r} is not a number: {value!r}") from None
    if not np.isfinite(v):
        raise InputError(f"{label}:{lineno}: field {field!r} is not finite")
    return v


def _rows(text: str, label: str, required: tuple[str, ...]):
    reader = csv.DictReader(io.StringIO(text))
    header = reader.fieldnames or []
    for col in required:
        if col not in header:
            raise InputError(f"{label}: missing column {col!r}")
    for lineno, row in enumerate(reader, start=2):
        yield lineno, row


# -- catalog --------------------------------------------------------------------


def load_catalog(source: PathLike = "reference") -> TechnologyCatalog:
    """Load a technology catalog from the long-format CSV (or the builtin reference)."""
    text, label = _open_source(source, "reference_catalog.csv")
    fields: dict[str, dict] = {"pv": {}, "inverter": {}, "controller": {}, "battery": {}}
    batteries: dict[str, dict] = {}
    lines: dict = {}
    for lineno, row in _rows(text, label, ("component", "key", "value")):
        comp, key = row["component"].strip(), row["key"].strip()
        kind, _, name = comp.partition(":")
        if kind not in _COMPONENT_KEYS or (name and kind != "battery"):
            raise InputError(f"{label}:{lineno}: unknown component {comp!r}")
        mapping = _COMPONENT_KEYS[kind]
        if key not in mapping:
            raise InputError(f"{label}:{lineno}: unknown key {key!r} for component {kind!r}")
        value = _number(row["value"], label, lineno, key)
        target = batteries.setdefault(name, {}) if name else fields[kind]
        target[mapping[key]] = value
        lines[(comp, mapping[key])] = lineno

    def build(cls, kw, comp):
        try:
            return cls(**kw)
        except (TypeError, ValueError) as exc:
            where = sorted({ln for (c, _), ln in lines.items() if c == comp})
            raise InputError(f"{label}: invalid {comp} (lines {where}): {exc}") from None

    catalog_batteries = []
    for name, over in batteries.items():
        kw = {**fields["battery"], **over}
        catalog_batteries.append(build(BatteryTechnology, {"name": name, **kw}, f"battery:{name}"))
    return TechnologyCatalog(
        pv=build(PvTechnology, fields["pv"], "pv"),
        inverter=build(Inverter, fields["inverter"], "inverter"),
        controller=build(Controller, fields["controller"], "controller"),
        batteries=tuple(catalog_batteries),
    )


def dump_catalog(catalog: TechnologyCatalog) -> str:
    """Serialize a catalog to the long CSV format (every battery fully spelled out)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("component", "key", "value"))
    for comp, obj, mapping in (
        ("pv", catalog.pv, _PV_KEYS),
        ("inverter", catalog.inverter, _INVERTER_KEYS),
        ("controller", catalog.controller, _CONTROLLER_KEYS),
    ):
        for key, attr in mapping.items():
            w.writerow((comp, key, repr(float(getattr(obj, attr)))))
    for b in catalog.batteries:
        for key, attr in _BATTERY_KEYS.items():
            w.writerow((f"battery:{b.name}", key, repr(float(getattr(b, attr)))))
    return buf.getvalue()


def save_catalog(catalog: TechnologyCatalog, path: PathLike) -> None:
    Path(path).write_text(dump_catalog(catalog))


# -- regions --------------------------------------------------------------------


def load_regions(source: PathLike = "builtin") -> list[BuildingScenario]:
    """Scenario skeletons (no profiles) for every region in the file."""
    text, label = _open_source(source, "regions.csv")
    out = []
    for lineno, row in _rows(text, label, REGION_COLUMNS[:5]):
        vals = {c: _number(row[c], label, lineno, c) for c in REGION_COLUMNS[1:5]}
        cf = row.get("annual_cf")
        cf = _number(cf, label, lineno, "annual_cf") if cf not in (None, "") else None
        for c, v in vals.items():
            if v <= 0:
                raise InputError(f"{label}:{lineno}: field {c!r} must be > 0, got {v}")
        out.append(
            BuildingScenario(
                region_label=row["region"].strip(),
                households=vals["households"],
                floor_area=vals["floor_area_m2"],
                roof_area=vals["roof_area_m2"],
                annual_consumption_per_household=vals["consumption_kwh_per_household"],
                annual_cf=cf,
            )
        )
    return out


def _slug(label: str) -> str:
    return re.sub(r"[^a-z0-9]+", "-", label.lower()).strip("-")


def find_region(regions: list[BuildingScenario], label: str) -> BuildingScenario:
    key = _slug(label)
    for r in regions:
        if _slug(r.region_label) == key:
            return r
    raise InputError(f"unknown region {label!r}")


def load_published_results() -> list[dict]:
    text = _builtin_text("published_regional_results.csv")
    out = []
    for _, row in _rows(text, "published_regional_results.csv", ("region",)):
        out.append({k: (v if k == "region" else float(v)) for k, v in row.items()})
    return out


# -- calendar -------------------------------------------------------------------


def day_counts(year: int = REFERENCE_YEAR) -> dict[tuple[int, str], int]:
    """Number of weekdays and weekend days per month of ``year``."""
    out = {}
    for m in range(1, 13):
        days = calendar.monthrange(year, m)[1]
        weekend = sum(1 for d in range(1, days + 1) if calendar.weekday(year, m, d) >= 5)
        out[(m, DayKind.WEEKDAY.value)] = days - weekend
        out[(m, DayKind.WEEKEND.value)] = weekend
    return out


# -- synthetic profiles ------------------------------------------------------------

# Residential weekday load shape (share of daily energy per hour): low night
# valley, a morning shoulder, a midday plateau and the evening peak at 21h.
_LOAD_WEEKDAY = np.array([
    0.036, 0.029, 0.025, 0.023, 0.022, 0.023, 0.027, 0.034,
    0.039, 0.042, 0.044, 0.046, 0.048, 0.051, 0.052, 0.047,
    0.043, 0.043, 0.046, 0.051, 0.057, 0.061, 0.057, 0.047,
])
_LOAD_MONTH = np.array([1.20, 1.10, 1.00, 0.90, 0.85, 0.90, 1.05, 1.05, 0.90, 0.90, 1.00, 1.15])
_WEEKEND_FLATTEN = 0.3  # weekend shape = 0.7 x weekday + 0.3 x flat
_WEEKEND_ENERGY = 1.05  # weekend days use 5 % more energy

# Day-ahead market price: monthly level (EUR/kWh) and a two-peak hourly shape.
_PMH_MONTH = np.array([0.0507, 0.0549, 0.0401, 0.0428, 0.0549, 0.0582, 0.0616, 0.0640, 0.0712, 0.0652, 0.0617, 0.0619])
_PMH_SHAPE = np.array([
    0.95, 0.90, 0.87, 0.85, 0.85, 0.88, 0.95, 1.03,
    1.08, 1.08, 1.05, 1.03, 1.01, 1.00, 0.98, 0.97,
    0.98, 1.00, 1.04, 1.08, 1.11, 1.12, 1.08, 1.01,
])
_PMH_WEEKEND = 0.93
_PMH_NOISE = 0.02  # relative, seeded

_SAH = 0.0045
_PERD_FRACTION = 0.17
_CP_MEAN = 0.0793 / (1 + _PERD_FRACTION)
_PMH_MEAN = 0.0572

_LATITUDE = 40.0
_CLEARNESS = np.array([0.62, 0.66, 0.72, 0.74, 0.78, 0.83, 0.86, 0.84, 0.78, 0.70, 0.63, 0.60])


def _declination(month: int) -> float:
    doy = (np.cumsum([0] + [calendar.monthrange(REFERENCE_YEAR, m)[1] for m in range(1, 13)])[month - 1]
           + calendar.monthrange(REFERENCE_YEAR, month)[1] / 2)
    return np.radians(23.45) * np.sin(2 * np.pi * (284 + doy) / 365)


def clear_sky_shape(month: int) -> np.ndarray:
    """Relative plane-of-array output per clock hour for a mid-month day."""
    solar_noon = 14.25 if 4 <= month <= 10 else 13.25  # local clock time incl. daylight saving
    phi, delta = np.radians(_LATITUDE), _declination(month)
    # integrate each hour over 4 sub-steps
    t = np.arange(HOURS)[:, None] + (np.arange(4)[None, :] + 0.5) / 4
    omega = np.radians(15.0 * (t - solar_noon))
    cosz = np.sin(phi) * np.sin(delta) + np.cos(phi) * np.cos(delta) * np.cos(omega)
    # fixed tilt near latitude flattens the seasonal swing
    tilt = np.radians(30.0)
    cos_inc = np.sin(phi - tilt) * np.sin(delta) + np.cos(phi - tilt) * np.cos(delta) * np.cos(omega)
    up = cosz > 0.02
    power = np.where(up, np.clip(cos_inc, 0, None) * np.clip(cosz, 0, None) ** 0.15, 0.0)
    return _CLEARNESS[month - 1] * power.mean(axis=1)


def _scale_cf(shapes: np.ndarray, weights: np.ndarray, target: float) -> np.ndarray:
    def annual(k):
        return float(weights @ np.minimum(k * shapes, 1.0).sum(axis=1)) / (weights.sum() * HOURS)

    lo, hi = 0.0, 1.0
    while annual(hi) < target:
        hi *= 2
        if hi > 1e6:
            raise ValueError(f"capacity factor {target} unreachable with the clear-sky shape")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if annual(mid) < target:
            lo = mid
        else:
            hi = mid
    return np.minimum(hi * shapes, 1.0)


def synthesize_profiles(
    skeleton: BuildingScenario,
    solar_annual_cf: Optional[float] = None,
    price_seed: int = 0,
    shares: Optional[dict] = None,
) -> BuildingScenario:
    """Fill a scenario skeleton with 24 synthetic representative days.

    Load follows a residential double-peak curve with weekend flattening and
    a winter-heavy monthly factor, scaled to households x consumption. Solar
    capacity factors follow a clear-sky curve for a tilted array, scaled so
    the weighted annual mean equals ``solar_annual_cf``. Market prices are a
    two-peak curve around the reference-year monthly levels with seeded
    noise, rescaled to the annual mean; the access-tariff energy term is
    blended over the discrimination options.
    """
    cf = skeleton.annual_cf if solar_annual_cf is None else solar_annual_cf
    if cf is None or not 0 < cf <= 0.25:
        raise ValueError(f"target annual capacity factor must be in (0, 0.25], got {cf}")
    counts = day_counts()
    keys = [(m, k.value) for m in range(1, 13) for k in DayKind]
    weights = np.array([counts[k] for k in keys], dtype=float)
    rng = np.random.default_rng(price_seed)

    weekend_shape = (1 - _WEEKEND_FLATTEN) * _LOAD_WEEKDAY / _LOAD_WEEKDAY.sum() + _WEEKEND_FLATTEN / HOURS
    raw_load = np.array([
        _LOAD_MONTH[m - 1] * (_LOAD_WEEKDAY / _LOAD_WEEKDAY.sum() if k == "weekday" else _WEEKEND_ENERGY * weekend_shape)
        for m, k in keys
    ])
    load = raw_load * skeleton.annual_load / float(weights @ raw_load.sum(axis=1))

    shapes = np.array([clear_sky_shape(m) for m, _ in keys])
    solar = _scale_cf(shapes, weights, cf)

    pmh = np.array([
        _PMH_MONTH[m - 1] * _PMH_SHAPE * (1.0 if k == "weekday" else _PMH_WEEKEND) for m, k in keys
    ])
    pmh = pmh * (1 + _PMH_NOISE * rng.standard_normal(pmh.shape))
    pmh = pmh * _PMH_MEAN / (float(weights @ pmh.sum(axis=1)) / (weights.sum() * HOURS))
    oc = _CP_MEAN - _PMH_MEAN - _SAH

    shares = shares or tariff.DEFAULT_SHARES
    profiles = []
    for i, (m, k) in enumerate(keys):
        parts = [
            PriceDecomposition(tariff.teu_schedule(opt, m), pmh[i], np.full(HOURS, _SAH), np.full(HOURS, oc),
                               np.full(HOURS, _PERD_FRACTION))
            for opt in ("A", "DHA", "DHS")
        ]
        prices = tariff.blend_average_building(*parts, shares=shares)
        profiles.append(RepresentativeDay(m, DayKind(k), weights[i], load[i], solar[i], prices))
    return skeleton.with_profiles(profiles, synthetic=True, annual_cf=cf)


def annual_capacity_factor(s: BuildingScenario) -> float:
    w = np.array([d.weight for d in s.profiles])
    cf = np.vstack([d.solar_cf for d in s.profiles])
    return float(w @ cf.sum(axis=1)) / (w.sum() * HOURS)


# -- profile CSV ------------------------------------------------------------------


def write_profiles_csv(s: BuildingScenario, path: PathLike) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(PROFILE_COLUMNS + ("weight",))
        for d in s.profiles:
            for h in range(HOURS):
                p = d.prices.at(h)
                w.writerow([s.region_label, d.month, d.day_kind.value, h, repr(float(d.load[h])),
                            repr(float(d.solar_cf[h]))]
                           + [repr(float(getattr(p, c))) for c in tariff.PRICE_COLUMNS] + [repr(float(d.weight))])


def load_profiles_csv(path: PathLike, skeleton: BuildingScenario) -> BuildingScenario:
    """Attach representative days from a profile CSV to a scenario skeleton.

    Rows whose ``region`` differs from the skeleton's label are ignored. A
    ``weight`` column is optional; without it weights are the reference
    calendar's weekday/weekend day counts.
    """
    text, label = _open_source(path, "")
    counts = day_counts()
    days: dict = {}
    want = _slug(skeleton.region_label)
    for lineno, row in _rows(text, label, PROFILE_COLUMNS):
        if _slug(row["region"]) != want:
            continue
        try:
            month, hour = int(row["month"]), int(row["hour"])
            kind = DayKind(row["day_kind"].strip().lower()).value
        except ValueError:
            raise InputError(f"{label}:{lineno}: bad month/hour/day_kind") from None
        if not (1 <= month <= 12 and 0 <= hour < HOURS):
            raise InputError(f"{label}:{lineno}: month or hour out of range")
        rec = days.setdefault((month, kind), {"hours": {}, "weight": None})
        vals = {c: _number(row[c], label, lineno, c) for c in ("load_kwh", "solar_cf") + tariff.PRICE_COLUMNS}
        for c, v in vals.items():
            if v < 0:
                raise InputError(f"{label}:{lineno}: field {c!r} must be >= 0, got {v}")
        rec["hours"][hour] = vals
        if row.get("weight") not in (None, ""):
            rec["weight"] = _number(row["weight"], label, lineno, "weight")
    if not days:
        raise InputError(f"{label}: no profile rows for region {skeleton.region_label!r}")
    profiles = []
    for (month, kind), rec in sorted(days.items(), key=lambda kv: (kv[0][0], kv[0][1] != "weekday")):
        if len(rec["hours"]) != HOURS:
            raise InputError(f"{label}: month {month} {kind} has {len(rec['hours'])} hours, expected 24")
        hours = [rec["hours"][h] for h in range(HOURS)]
        col = {c: np.array([h[c] for h in hours]) for c in hours[0]}
        prices = PriceDecomposition(*(col[c] for c in tariff.PRICE_COLUMNS))
        weight = rec["weight"] if rec["weight"] is not None else float(counts[(month, kind)])
        profiles.append(RepresentativeDay(month, DayKind(kind), weight, col["load_kwh"], col["solar_cf"], prices))
    return skeleton.with_profiles(profiles, synthetic=False)


# -- key-value configuration ---------------------------------------------------------------


def load_config(path: PathLike) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment. Keys are dotted, units in the name."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (x.strip() for x in line.split("=", 1))
        out[key] = value
    return out


def apply_config(
    cfg: dict[str, str], catalog: TechnologyCatalog, econ: EconomicParams
) -> tuple[TechnologyCatalog, EconomicParams]:
    """Override catalog/economic parameters, e.g. ``pv.panel_cost_eur_per_kw = 300``.

    Battery keys are ``battery.<key>`` (all chemistries) or
    ``battery.<name>.<key>``; ``economics.discount_rate_fraction`` sets r.
    """
    pv, inv, ctl = {}, {}, {}
    batt_all, batt_named = {}, {}
    for key, value in cfg.items():
        try:
            v = float(value)
        except ValueError:
            raise InputError(f"config key {key!r}: not a number: {value!r}") from None
        comp, _, rest = key.partition(".")
        if comp == "economics" and rest == "discount_rate_fraction":
            econ = replace(econ, discount_rate=v)
        elif comp in ("pv", "inverter", "controller"):
            mapping = _COMPONENT_KEYS[comp]
            if rest not in mapping:
                raise InputError(f"unknown config key {key!r}")
            {"pv": pv, "inverter": inv, "controller": ctl}[comp][mapping[rest]] = v
        elif comp == "battery":
            name, _, sub = rest.rpartition(".")
            if sub not in _BATTERY_KEYS:
                raise InputError(f"unknown config key {key!r}")
            (batt_named.setdefault(name, {}) if name else batt_all)[_BATTERY_KEYS[sub]] = v
        else:
            raise InputError(f"unknown config key {key!r}")
    names = {b.name for b in catalog.batteries}
    for name in batt_named:
        if name not in names:
            raise InputError(f"config names unknown battery {name!r}")
    try:
        catalog = replace(
            catalog,
            pv=replace(catalog.pv, **pv),
            inverter=replace(catalog.inverter, **inv),
            controller=replace(catalog.controller, **ctl),
            batteries=tuple(replace(b, **batt_all, **batt_named.get(b.name, {})) for b in catalog.batteries),
        )
    except ValueError as exc:
        raise InputError(f"config: {exc}") from None
    return catalog, econ


# -- scenario serialization -----------------------------------------------------------------


def scenario_to_dict(s: BuildingScenario) -> dict:
    return {
        "region_label": s.region_label,
        "households": s.households,
        "floor_area": s.floor_area,
        "roof_area": s.roof_area,
        "annual_consumption_per_household": s.annual_consumption_per_household,
        "synthetic": s.synthetic,
        "annual_cf": s.annual_cf,
        "profiles": [
            {
                "month": d.month,
                "day_kind": d.day_kind.value,
                "weight": d.weight,
                "load": d.load.tolist(),
                "solar_cf": d.solar_cf.tolist(),
                "prices": {c: getattr(d.prices, c).tolist() for c in tariff.PRICE_COLUMNS},
            }
            for d in s.profiles
        ],
    }


def scenario_from_dict(data: dict) -> BuildingScenario:
    profiles = [
        RepresentativeDay(
            p["month"], DayKind(p["day_kind"]), p["weight"], p["load"], p["solar_cf"],
            PriceDecomposition(*(p["prices"][c] for c in tariff.PRICE_COLUMNS)),
        )
        for p in data["profiles"]
    ]
    return BuildingScenario(
        region_label=data["region_label"],
        households=data["households"],
        floor_area=data["floor_area"],
        roof_area=data["roof_area"],
        annual_consumption_per_household=data["annual_consumption_per_household"],
        profiles=tuple(profiles),
        synthetic=data.get("synthetic", False),
        annual_cf=data.get("annual_cf"),
    )
