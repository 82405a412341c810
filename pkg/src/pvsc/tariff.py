"""Import/export pricing under the regulated small-consumer tariff.

Imports pay the energy production price (TCU) plus the energy term of the
access tariff (TEU). Exports are valued at the market price (policy P2), or
at market price plus the avoided-losses component (P3), or not at all (P1).
The monthly compensation cap compares export value against the import value
at the full energy price (TCU + TEU); valuing imports at TCU only is
available as an option.
"""

from __future__ import annotations

import csv
from datetime import datetime
from pathlib import Path
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

from .model import PriceDecomposition, RemunerationPolicy

# share of low-voltage consumers per time-discrimination option
DEFAULT_SHARES = {"A": 0.7474, "DHA": 0.2519, "DHS": 0.0007}

# 2018 energy term of the access tariff, EUR/kWh, per discrimination period
TEU_2018 = {
    "A": (0.044027,),
    "DHA": (0.062012, 0.002215),  # peak, off-peak
    "DHS": (0.062012, 0.002879, 0.000886),  # peak, valley, super-valley
}

PRICE_COLUMNS = ("teu", "pmh", "sah", "oc", "perd_fraction")

PriceLike = Union[PriceDecomposition, np.ndarray, Sequence[float]]


def teu_schedule(option: str, month: int) -> np.ndarray:
    """Hourly TEU for one day of ``month`` under a discrimination option."""
    option = option.upper()
    values = TEU_2018[option]
    if option == "A":
        return np.full(24, values[0])
    hours = np.arange(24)
    if option == "DHA":
        summer = 4 <= month <= 10
        lo, hi = (13, 23) if summer else (12, 22)
        return np.where((hours >= lo) & (hours < hi), values[0], values[1])
    peak = (hours >= 13) & (hours < 23)
    super_valley = (hours >= 1) & (hours < 7)
    return np.where(peak, values[0], np.where(super_valley, values[2], values[1]))


def _blend_arrays(series: Sequence[np.ndarray], weights: Sequence[float]) -> np.ndarray:
    arrs = [np.asarray(s, dtype=float) for s in series]
    shape = arrs[0].shape
    for a in arrs[1:]:
        if a.shape != shape:
            raise ValueError(f"price series lengths differ: {[x.shape for x in arrs]}")
    out = np.zeros(shape)
    for w, a in zip(weights, arrs):
        out = out + w * a
    return out


def blend_average_building(
    prices_a: PriceLike,
    prices_dha: PriceLike,
    prices_dhs: PriceLike,
    shares: Mapping[str, float] = DEFAULT_SHARES,
):
    """Hour-wise convex combination of the three discrimination options.

    Works on plain price arrays or on :class:`PriceDecomposition` objects,
    in which case each component is blended separately.
    """
    w = [float(shares["A"]), float(shares["DHA"]), float(shares["DHS"])]
    if any(x < 0 for x in w) or abs(sum(w) - 1.0) > 1e-9:
        raise ValueError(f"shares must be non-negative and sum to 1, got {w}")
    parts = (prices_a, prices_dha, prices_dhs)
    if all(isinstance(p, PriceDecomposition) for p in parts):
        return PriceDecomposition(
            *(_blend_arrays([getattr(p, c) for p in parts], w) for c in PRICE_COLUMNS)
        )
    if any(isinstance(p, PriceDecomposition) for p in parts):
        raise TypeError("cannot mix PriceDecomposition and plain arrays")
    return _blend_arrays(parts, w)


def import_price(p: PriceDecomposition):
    return p.tcu + p.teu


def export_price(p: PriceDecomposition, policy: RemunerationPolicy):
    if policy is RemunerationPolicy.P1:
        return p.pmh * 0.0
    if policy is RemunerationPolicy.P2:
        return p.pmh
    return p.pmh + p.perd


def cap_price(p: PriceDecomposition, include_teu: bool = True):
    """Price at which imports are valued for the monthly compensation cap."""
    return p.tcu + p.teu if include_teu else p.tcu


def compensation_ratio(p: PriceDecomposition, policy: RemunerationPolicy):
    """kWh of imports paid for by one exported kWh."""
    return export_price(p, policy) / import_price(p)


def read_price_csv(path: Union[str, Path]) -> tuple[list[datetime], PriceDecomposition]:
    """Read an hourly price file (``timestamp,teu,pmh,sah,oc,perd_fraction``)."""
    path = Path(path)
    stamps, cols = [], {c: [] for c in PRICE_COLUMNS}
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for c in ("timestamp",) + PRICE_COLUMNS:
            if c not in header:
                raise ValueError(f"{path}: missing column {c!r}")
        for lineno, row in enumerate(reader, start=2):
            try:
                stamps.append(datetime.fromisoformat(row["timestamp"]))
            except ValueError:
                raise ValueError(f"{path}:{lineno}: bad timestamp {row['timestamp']!r}") from None
            for c in PRICE_COLUMNS:
                try:
                    v = float(row[c])
                except (TypeError, ValueError):
                    raise ValueError(f"{path}:{lineno}: field {c!r} is not a number: {row[c]!r}") from None
                if not np.isfinite(v) or v < 0:
                    raise ValueError(f"{path}:{lineno}: field {c!r} must be finite and >= 0, got {v}")
                cols[c].append(v)
    return stamps, PriceDecomposition(*(np.array(cols[c]) for c in PRICE_COLUMNS))


def write_price_csv(path: Union[str, Path], stamps: Iterable[datetime], prices: PriceDecomposition) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("timestamp",) + PRICE_COLUMNS)
        arrays = [np.atleast_1d(getattr(prices, c)) for c in PRICE_COLUMNS]
        for i, ts in enumerate(stamps):
            w.writerow([ts.isoformat(timespec="hours")] + [repr(float(a[i])) for a in arrays])


def representative_prices(stamps: Sequence[datetime], prices: PriceDecomposition) -> dict:
    """Average an hourly price year into ``{(month, day_kind): PriceDecomposition}``."""
    groups: dict = {}
    arrays = {c: np.atleast_1d(getattr(prices, c)) for c in PRICE_COLUMNS}
    for i, ts in enumerate(stamps):
        kind = "weekend" if ts.weekday() >= 5 else "weekday"
        groups.setdefault((ts.month, kind), [[] for _ in range(24)])[ts.hour].append(i)
    out = {}
    for key, hours in groups.items():
        if any(not h for h in hours):
            continue
        out[key] = PriceDecomposition(
            *(np.array([arrays[c][h].mean() for h in hours]) for c in PRICE_COLUMNS)
        )
    return out
