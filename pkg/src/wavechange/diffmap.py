"""Pixelwise difference maps between two co-registered rasters.

Every map follows the same orientation: brighter means more likely changed.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from wavechange.errors import DimensionMismatch
from wavechange.raster_io import GrayRaster

KINDS = ("minus", "ratio", "weighted", "dwt_fused")
DEFAULT_RATIO_EPS = 1.0 / 255.0


class WeightOutOfRange(ValueError):
    pass


@dataclass(frozen=True)
class DifferenceMap:
    raster: GrayRaster
    kind: str

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown difference map kind {self.kind!r}")

    @property
    def values(self) -> np.ndarray:
        return self.raster.values

    @property
    def shape(self):
        return self.raster.shape


def _check_pair(a, b):
    if a.shape != b.shape:
        raise DimensionMismatch(f"shape mismatch: {a.shape} vs {b.shape}")


def minus_map(a: GrayRaster, b: GrayRaster) -> DifferenceMap:
    _check_pair(a, b)
    return DifferenceMap(GrayRaster(np.abs(a.values - b.values)), "minus")


def ratio_map(a: GrayRaster, b: GrayRaster, eps: float = DEFAULT_RATIO_EPS) -> DifferenceMap:
    """1 - (min + eps) / (max + eps), so equal pixels give 0 and values stay in [0, 1)."""
    _check_pair(a, b)
    if not eps > 0:
        raise ValueError("eps must be positive")
    lo = np.minimum(a.values, b.values)
    hi = np.maximum(a.values, b.values)
    return DifferenceMap(GrayRaster(1.0 - (lo + eps) / (hi + eps)), "ratio")


def weighted_average_fuse(d1: DifferenceMap, d2: DifferenceMap, w: float = 0.5) -> DifferenceMap:
    _check_pair(d1, d2)
    if not 0.0 <= w <= 1.0:
        raise WeightOutOfRange(f"weight must lie in [0, 1], got {w}")
    if w == 1.0:
        out = d1.values
    elif w == 0.0:
        out = d2.values
    else:
        out = w * d1.values + (1.0 - w) * d2.values
        # rounding can push a blend a hair outside its endpoints
        out = np.clip(out, np.minimum(d1.values, d2.values), np.maximum(d1.values, d2.values))
    return DifferenceMap(GrayRaster(out), "weighted")
