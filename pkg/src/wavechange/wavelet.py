"""Orthonormal 2D Haar transform and frequency-band fusion of difference maps.

The transform is the separable "standard" decomposition: every row gets a
``levels``-deep 1D Haar transform, then every column does. At full depth
this is exactly ``H @ X @ H.T`` with the orthonormal Haar matrix ``H``.
Coefficients are laid out coarse-to-fine, so the approximation block sits
in the upper-left corner.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from wavechange.diffmap import DifferenceMap
from wavechange.errors import DimensionMismatch, ShapeMismatch
from wavechange.raster_io import GrayRaster, crop, pad_to_pow2, save_raster

SQRT2 = np.sqrt(2.0)


class NonPowerOfTwoLength(ValueError):
    pass


class NotSquare(ValueError):
    pass


class NotPowerOfTwo(ValueError):
    pass


class TooManyLevels(ValueError):
    pass


def _is_pow2(n: int) -> bool:
    return n >= 1 and not n & (n - 1)


def _log2(n: int) -> int:
    return n.bit_length() - 1


@dataclass(frozen=True, eq=False)
class WaveletPyramid:
    coeffs: np.ndarray
    levels: int

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.float64)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise NotSquare(f"coefficient grid must be square, got {c.shape}")
        if not _is_pow2(c.shape[0]):
            raise NotPowerOfTwo(f"side must be a power of two, got {c.shape[0]}")
        if not 1 <= self.levels <= _log2(c.shape[0]):
            raise TooManyLevels(f"levels={self.levels} invalid for side {c.shape[0]}")
        object.__setattr__(self, "coeffs", c)

    @property
    def side(self) -> int:
        return self.coeffs.shape[0]

    @property
    def approx_side(self) -> int:
        return self.side >> self.levels

    def approximation(self) -> np.ndarray:
        s = self.approx_side
        return self.coeffs[:s, :s]


@dataclass(frozen=True)
class BandSplit:
    """Fraction of the coefficient index range (per axis) that counts as low frequency."""

    boundary: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.boundary < 1.0:
            raise ValueError(f"boundary must lie in (0, 1), got {self.boundary}")


def _forward_last(x: np.ndarray, levels: int) -> np.ndarray:
    out = np.array(x, dtype=np.float64, copy=True)
    length = out.shape[-1]
    for _ in range(levels):
        seg = out[..., :length]
        even, odd = seg[..., 0::2], seg[..., 1::2]
        approx = (even + odd) / SQRT2
        detail = (even - odd) / SQRT2
        half = length // 2
        out[..., :half] = approx
        out[..., half:length] = detail
        length = half
    return out


def _inverse_last(x: np.ndarray, levels: int) -> np.ndarray:
    out = np.array(x, dtype=np.float64, copy=True)
    n = out.shape[-1]
    length = n >> (levels - 1)
    for _ in range(levels):
        half = length // 2
        approx = out[..., :half].copy()
        detail = out[..., half:length].copy()
        out[..., 0:length:2] = (approx + detail) / SQRT2
        out[..., 1:length:2] = (approx - detail) / SQRT2
        length *= 2
    return out


def _check_levels_1d(n: int, levels: int | None) -> int:
    if not _is_pow2(n):
        raise NonPowerOfTwoLength(f"length must be a power of two, got {n}")
    full = _log2(n)
    if levels is None:
        return full
    if not 0 <= levels <= full:
        raise TooManyLevels(f"levels={levels} invalid for length {n}")
    return levels


def haar_forward_1d(v, levels: int | None = None) -> np.ndarray:
    """Orthonormal multi-level Haar transform of a length-2^k vector.

    ``levels`` defaults to full depth. Output layout is
    ``[approx | coarsest detail | ... | finest detail]``.

    >>> haar_forward_1d([1.0, 1.0, 1.0, 1.0])
    array([2., 0., 0., 0.])
    """
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError("expected a 1D vector")
    levels = _check_levels_1d(v.shape[0], levels)
    if levels == 0:
        return v.copy()
    return _forward_last(v, levels)


def haar_inverse_1d(v, levels: int | None = None) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError("expected a 1D vector")
    levels = _check_levels_1d(v.shape[0], levels)
    if levels == 0:
        return v.copy()
    return _inverse_last(v, levels)


def _as_grid(x) -> np.ndarray:
    if isinstance(x, (GrayRaster, DifferenceMap)):
        return x.values
    return np.asarray(x, dtype=np.float64)


def dwt2(x, levels: int = 1, order: str = "rows") -> WaveletPyramid:
    """Forward 2D Haar transform of a square power-of-two grid.

    ``order`` picks which axis is transformed first ("rows" or "columns");
    the result is the same either way up to rounding.
    """
    grid = _as_grid(x)
    if grid.ndim != 2 or grid.shape[0] != grid.shape[1]:
        raise NotSquare(f"input must be square, got {grid.shape}")
    side = grid.shape[0]
    if not _is_pow2(side):
        raise NotPowerOfTwo(f"side must be a power of two, got {side}")
    if not 1 <= levels <= _log2(side):
        raise TooManyLevels(f"levels={levels} exceeds log2(side)={_log2(side)}")
    if order == "rows":
        out = _forward_last(grid, levels)
        out = _forward_last(out.T, levels).T
    elif order == "columns":
        out = _forward_last(grid.T, levels).T
        out = _forward_last(out, levels)
    else:
        raise ValueError(f"order must be 'rows' or 'columns', got {order!r}")
    return WaveletPyramid(np.ascontiguousarray(out), levels)


def idwt2(p: WaveletPyramid) -> np.ndarray:
    """Inverse of :func:`dwt2`. Returns a bare float grid; no clamping."""
    out = _inverse_last(p.coeffs.T, p.levels).T
    out = _inverse_last(out, p.levels)
    return np.ascontiguousarray(out)


def low_band_mask(side: int, split: BandSplit) -> np.ndarray:
    idx = np.arange(side)
    low = idx < split.boundary * side
    return low[:, None] & low[None, :]


def fuse_pyramids(p_minus: WaveletPyramid, p_ratio: WaveletPyramid, split: BandSplit = BandSplit()) -> WaveletPyramid:
    """Take the low-frequency block from ``p_minus`` and everything else from ``p_ratio``.

    Coefficient (r, c) is low frequency when both r and c are below
    ``split.boundary * side``. Coefficients are copied, never combined.
    """
    if p_minus.side != p_ratio.side or p_minus.levels != p_ratio.levels:
        raise ShapeMismatch(
            f"pyramids differ: side {p_minus.side}/{p_ratio.side}, levels {p_minus.levels}/{p_ratio.levels}"
        )
    mask = low_band_mask(p_minus.side, split)
    return WaveletPyramid(np.where(mask, p_minus.coeffs, p_ratio.coeffs), p_minus.levels)


def minmax_rescale(values: np.ndarray) -> np.ndarray:
    lo, hi = float(values.min()), float(values.max())
    if hi <= lo:
        return np.zeros_like(values, dtype=np.float64)
    return np.clip((values - lo) / (hi - lo), 0.0, 1.0)


def dwt_fuse_maps(
    d_minus: DifferenceMap,
    d_ratio: DifferenceMap,
    levels: int = 1,
    split: BandSplit = BandSplit(),
    clamp: bool = True,
    rescale: bool = True,
) -> DifferenceMap | np.ndarray:
    """Fuse a minus map and a ratio map in the Haar domain.

    Both maps are edge-padded to a power-of-two square, transformed, merged
    with :func:`fuse_pyramids`, inverted and cropped back. The result is then
    clamped to [0, 1] and min-max stretched. With ``clamp=False`` the raw
    cropped grid is returned as an ndarray (it may leave [0, 1]).
    """
    if d_minus.shape != d_ratio.shape:
        raise DimensionMismatch(f"shape mismatch: {d_minus.shape} vs {d_ratio.shape}")
    pm, record = pad_to_pow2(d_minus.raster)
    pr, _ = pad_to_pow2(d_ratio.raster)
    fused = fuse_pyramids(dwt2(pm, levels), dwt2(pr, levels), split)
    grid = crop(idwt2(fused), record)
    if not clamp:
        return grid
    grid = np.clip(grid, 0.0, 1.0)
    if rescale:
        grid = minmax_rescale(grid)
    return DifferenceMap(GrayRaster(grid), "dwt_fused")


def dump_pyramid(p: WaveletPyramid, path, fmt: str | None = None) -> None:
    """Write coefficients affinely mapped to [0, 1]. For eyeballing only; lossy."""
    save_raster(GrayRaster(minmax_rescale(p.coeffs)), path, fmt)
