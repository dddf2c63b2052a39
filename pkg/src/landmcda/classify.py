"""Exact Jenks natural breaks and priority classification."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .geodata import CategoricalRaster, Legend, NumericRaster

_ORDINALS = ("First", "Second", "Third", "Fourth", "Fifth", "Sixth", "Seventh", "Eighth",
             "Ninth", "Tenth")

BOUNDARY_RULE = "right-closed: a value equal to a break belongs to the lower-valued class"


@dataclass(frozen=True)
class BreaksResult:
    k: int
    breaks: tuple[float, ...]
    sdam: float
    sdcm: float
    gvf: float
    lower: float
    upper: float

    def to_json(self) -> dict:
        return {"k": self.k, "breaks": list(self.breaks), "sdam": self.sdam, "sdcm": self.sdcm,
                "gvf": self.gvf, "min": self.lower, "max": self.upper}


def _clean(values) -> np.ndarray:
    v = np.asarray(values, dtype=np.float64).ravel()
    v = v[np.isfinite(v)]
    if v.size == 0:
        raise ValidationError("no values to classify")
    return v


def class_of(values, breaks: Sequence[float]) -> np.ndarray:
    """0-based ascending class of each value; ``v <= breaks[i]`` stays below."""
    return np.searchsorted(np.asarray(breaks, dtype=np.float64), values, side="left")


def _sdam(v):
    return float(np.sum((v - v.mean()) ** 2))


def _sdcm(v, breaks):
    cls = class_of(v, breaks)
    total = 0.0
    for c in range(len(breaks) + 1):
        part = v[cls == c]
        if part.size:
            total += float(np.sum((part - part.mean()) ** 2))
    return total


def gvf(values, breaks: Sequence[float]) -> float:
    """Goodness of variance fit, 1 - SDCM/SDAM (1 for constant data)."""
    v = _clean(values)
    b = list(breaks)
    if any(x >= y for x, y in zip(b, b[1:])):
        raise ValidationError("breaks must be strictly ascending")
    sdam = _sdam(v)
    if sdam == 0.0:
        return 1.0
    return 1.0 - _sdcm(v, b) / sdam


def _optimal_starts(x, w, k):
    """Start index of every class in an SDCM-optimal partition of sorted distinct ``x``.

    Suffix dynamic program over weighted prefix sums; among (near-)ties the
    partition with the earliest boundaries wins.
    """
    n = x.size
    cw = np.concatenate([[0.0], np.cumsum(w)])
    cx = np.concatenate([[0.0], np.cumsum(w * x)])
    cxx = np.concatenate([[0.0], np.cumsum(w * x * x)])

    def seg_cost(i, js):
        sw = cw[js] - cw[i]
        sx = cx[js] - cx[i]
        return np.maximum(cxx[js] - cxx[i] - sx * sx / sw, 0.0)

    # best[j][i]: minimal SDCM of x[i:] split into j classes
    best = np.full((k + 1, n + 1), np.inf)
    best[0][n] = 0.0
    for i in range(n):
        best[1][i] = seg_cost(i, np.array([n]))[0]
    tie = 64 * np.finfo(float).eps * max(float(cxx[n]), 1e-300)
    for j in range(2, k + 1):
        for i in range(n - j + 1):
            ends = np.arange(i + 1, n - j + 2)
            best[j][i] = np.min(seg_cost(i, ends) + best[j - 1][ends])

    starts = [0]
    i = 0
    for j in range(k, 1, -1):
        ends = np.arange(i + 1, n - j + 2)
        totals = seg_cost(i, ends) + best[j - 1][ends]
        i = int(ends[np.flatnonzero(totals <= totals.min() + tie)[0]])
        starts.append(i)
    return starts


def jenks_breaks(values, k: int) -> BreaksResult:
    """Exact Fisher-Jenks classification of ``values`` into ``k`` classes.

    Breaks are the upper values of the lower k-1 classes.  Non-finite values
    are ignored.
    """
    v = _clean(values)
    distinct, counts = np.unique(v, return_counts=True)
    if not 1 <= k <= distinct.size:
        raise ValidationError(f"k = {k} must lie in 1..{distinct.size} (distinct values)")
    # centring keeps the prefix-sum costs well conditioned
    centre = float(np.average(distinct, weights=counts))
    starts = _optimal_starts(distinct - centre, counts.astype(np.float64), k)
    breaks = tuple(float(distinct[s - 1]) for s in starts[1:])
    sdam = _sdam(v)
    sdcm = _sdcm(v, breaks)
    fit = 1.0 if sdam == 0.0 else 1.0 - sdcm / sdam
    return BreaksResult(k, breaks, sdam, sdcm, fit, float(distinct[0]), float(distinct[-1]))


def priority_legend(k: int) -> Legend:
    return Legend({i: (f"{_ORDINALS[i - 1]} Priority" if i <= len(_ORDINALS) else f"Priority {i}")
                   for i in range(1, k + 1)})


def classify_raster(raster: NumericRaster, breaks, order: str = "descending") -> CategoricalRaster:
    """Assign each cell a priority; with ``descending`` order the top class is 1."""
    if isinstance(breaks, BreaksResult):
        breaks = breaks.breaks
    breaks = tuple(float(b) for b in breaks)
    if any(x >= y for x, y in zip(breaks, breaks[1:])):
        raise ValidationError("breaks must be strictly ascending")
    if order not in ("descending", "ascending"):
        raise ValidationError("order must be 'descending' or 'ascending'")
    k = len(breaks) + 1
    header = raster.header
    nodata = float(header.nodata_value)
    if not nodata.is_integer() or 1 <= nodata <= k:
        header = header.with_nodata(-9999)
    cls = class_of(raster.cells, breaks)
    codes = (k - cls) if order == "descending" else (cls + 1)
    codes = np.where(raster.missing, int(header.nodata_value), codes)
    return CategoricalRaster(header, codes, priority_legend(k))


def class_areas(priority: CategoricalRaster) -> dict[str, dict]:
    """Cell count and hectares per priority class (cellsize in metres)."""
    cell_ha = priority.header.cell_area / 10_000.0
    return {label: {"cells": n, "hectares": n * cell_ha}
            for label, n in priority.label_counts().items()}


def evaluate_breaks(values, breaks: Sequence[float]) -> BreaksResult:
    """SDAM/SDCM/GVF of a given set of breaks (e.g. fixed by the analyst)."""
    v = _clean(values)
    breaks = tuple(float(b) for b in breaks)
    fit = gvf(v, breaks)
    return BreaksResult(len(breaks) + 1, breaks, _sdam(v), _sdcm(v, breaks), fit,
                        float(v.min()), float(v.max()))
