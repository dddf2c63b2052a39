"""Weighted linear overlay of class rasters into aspect and composite surfaces."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import ValidationError
from .geodata import (CategoricalRaster, NumericRaster, apply_legend_scores, assert_aligned,
                      union_missing)

WEIGHT_SUM_RANGE = (0.98, 1.02)


@dataclass(frozen=True)
class SubcriterionLayer:
    name: str
    raster: CategoricalRaster
    class_values: Mapping[str, float]

    def __post_init__(self):
        missing = [lab for lab in self.raster.legend.labels if lab not in self.class_values]
        if missing:
            raise ValidationError(f"layer {self.name!r}: no class value for {missing}")


@dataclass(frozen=True)
class AspectSurface:
    name: str
    raster: NumericRaster
    achievable: tuple[float, float]

    def __post_init__(self):
        vals = self.raster.valid_values()
        lo, hi = self.achievable
        slack = 1e-9 * max(1.0, abs(lo), abs(hi))
        if vals.size and (vals.min() < lo - slack or vals.max() > hi + slack):
            raise ValidationError(f"surface {self.name!r} leaves its achievable range")


def aspect_score(name: str, layers: Sequence[SubcriterionLayer],
                 scores: Mapping[str, float]) -> AspectSurface:
    """Cell value = sum over layers of score x class value of the cell's class."""
    if not layers:
        raise ValidationError(f"aspect {name!r} has no layers")
    assert_aligned([layer.raster.header for layer in layers])
    for layer in layers:
        if layer.name not in scores:
            raise ValidationError(f"no subcriterion score for layer {layer.name!r}")
    header = layers[0].raster.header
    total = np.zeros(header.shape)
    lo = hi = 0.0
    for layer in layers:
        weight = float(scores[layer.name])
        values = apply_legend_scores(layer.raster, layer.class_values)
        total = total + weight * values.cells
        present = [layer.class_values[lab] for lab in layer.raster.legend.labels]
        lo += min(weight * v for v in present)
        hi += max(weight * v for v in present)
    mask = union_missing([layer.raster for layer in layers])
    total[mask] = header.nodata_value
    return AspectSurface(name, NumericRaster(header, total), (lo, hi))


def check_weights(weights: Sequence[float], renormalize: bool = False) -> tuple[float, ...]:
    w = tuple(float(x) for x in weights)
    if any(x < 0 for x in w):
        raise ValidationError(f"overlay weights must be non-negative, got {w}")
    total = sum(w)
    lo, hi = WEIGHT_SUM_RANGE
    if renormalize:
        if total <= 0:
            raise ValidationError("overlay weights sum to zero")
        return tuple(x / total for x in w)
    if not lo - 1e-12 <= total <= hi + 1e-12:
        raise ValidationError(f"overlay weights sum to {total:.4f}, outside [{lo}, {hi}]")
    return w


def composite(surfaces: Sequence[NumericRaster], weights: Sequence[float],
              renormalize: bool = False) -> NumericRaster:
    """Per-cell weighted sum of surfaces; nodata in any input is nodata out."""
    if len(surfaces) != len(weights):
        raise ValidationError(f"{len(weights)} weights for {len(surfaces)} surfaces")
    rasters = [s.raster if isinstance(s, AspectSurface) else s for s in surfaces]
    assert_aligned([r.header for r in rasters])
    w = check_weights(weights, renormalize)
    header = rasters[0].header
    total = np.zeros(header.shape)
    for weight, r in zip(w, rasters):
        total = total + weight * r.cells
    total[union_missing(rasters)] = header.nodata_value
    return NumericRaster(header, total)


def sp_corn(s_eco, s_econ, s_soc, weights: Sequence[float],
            renormalize: bool = False) -> NumericRaster:
    """Composite of the ecological, economic and social surfaces."""
    if len(weights) != 3:
        raise ValidationError("sp_corn takes exactly three weights")
    return composite([s_eco, s_econ, s_soc], weights, renormalize)
