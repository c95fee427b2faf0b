"""Seeded synthetic image pairs with exact ground truth.

The background is a smooth bilinear texture kept inside [0.2, 0.8], so a
shifted region can be clamped to [0, 1] without ever becoming equal to the
original pixel. That keeps the truth mask exact.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from wavechange.raster_io import GrayRaster
from wavechange.segment import ChangeMap

BACKGROUND_RANGE = (0.2, 0.8)
TEXTURE_GRID = 6


@dataclass(frozen=True)
class Shape:
    """Axis-aligned rectangle, or the ellipse inscribed in it for ``kind='disc'``.

    ``sign`` fixes the shift direction; ``None`` brightens dark regions and
    darkens bright ones.
    """

    kind: str
    x: int
    y: int
    w: int
    h: int
    sign: int | None = None

    def __post_init__(self):
        if self.kind not in ("rect", "disc"):
            raise ValueError(f"shape kind must be 'rect' or 'disc', got {self.kind!r}")
        if self.w < 1 or self.h < 1:
            raise ValueError("shape extent must be positive")
        if self.sign not in (None, 1, -1):
            raise ValueError("sign must be +1, -1 or None")

    def mask(self, height: int, width: int) -> np.ndarray:
        yy, xx = np.mgrid[0:height, 0:width]
        inside = (xx >= self.x) & (xx < self.x + self.w) & (yy >= self.y) & (yy < self.y + self.h)
        if self.kind == "disc":
            cx = self.x + (self.w - 1) / 2.0
            cy = self.y + (self.h - 1) / 2.0
            rx, ry = self.w / 2.0, self.h / 2.0
            inside &= ((xx - cx) / rx) ** 2 + ((yy - cy) / ry) ** 2 <= 1.0
        return inside


@dataclass(frozen=True)
class SceneSpec:
    width: int = 256
    height: int = 256
    seed: int = 0
    n_shapes: int = 2
    noise_sigma: float = 0.02
    contrast_delta: float = 0.5
    shapes: tuple[Shape, ...] | None = None

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("scene dimensions must be positive")
        if self.n_shapes < 0:
            raise ValueError("n_shapes must be non-negative")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be non-negative")
        if not 0 < self.contrast_delta <= 1:
            raise ValueError("contrast_delta must lie in (0, 1]")


def _upsample(grid: np.ndarray, height: int, width: int) -> np.ndarray:
    gy = np.linspace(0, grid.shape[0] - 1, height)
    gx = np.linspace(0, grid.shape[1] - 1, width)
    cols = np.array([np.interp(gx, np.arange(grid.shape[1]), row) for row in grid])
    return np.array([np.interp(gy, np.arange(grid.shape[0]), col) for col in cols.T]).T


def smooth_background(rng: np.random.Generator, height: int, width: int) -> np.ndarray:
    lo, hi = BACKGROUND_RANGE
    coarse = rng.uniform(lo, hi, size=(TEXTURE_GRID, TEXTURE_GRID))
    # interpolation is convex, so the result stays in [lo, hi]
    return _upsample(coarse, height, width)


def random_shapes(rng: np.random.Generator, spec: SceneSpec) -> list[Shape]:
    short = min(spec.width, spec.height)
    lo = max(2, int(0.1 * short))
    hi = max(lo + 1, int(0.3 * short))
    shapes = []
    for _ in range(spec.n_shapes):
        kind = "rect" if rng.random() < 0.5 else "disc"
        w = int(rng.integers(lo, hi + 1))
        h = w if kind == "disc" else int(rng.integers(lo, hi + 1))
        w, h = min(w, spec.width), min(h, spec.height)
        x = int(rng.integers(0, spec.width - w + 1))
        y = int(rng.integers(0, spec.height - h + 1))
        shapes.append(Shape(kind, x, y, w, h))
    return shapes


def render_clean(spec: SceneSpec, rng: np.random.Generator | None = None):
    """Noise-free scene: ``(a, b_unclamped, truth_mask)``.

    ``b_unclamped`` is ``a`` shifted by +/- contrast_delta inside the shapes;
    later shapes overwrite earlier ones rather than stacking.
    """
    if rng is None:
        rng = np.random.default_rng(spec.seed)
    a = smooth_background(rng, spec.height, spec.width)
    shapes = list(spec.shapes) if spec.shapes is not None else random_shapes(rng, spec)
    b = a.copy()
    truth = np.zeros(a.shape, dtype=bool)
    for shape in shapes:
        m = shape.mask(spec.height, spec.width)
        if not m.any():
            continue
        sign = shape.sign
        if sign is None:
            sign = 1 if a[m].mean() < 0.5 else -1
        b[m] = a[m] + sign * spec.contrast_delta
        truth |= m
    return a, b, truth


def generate_pair(spec: SceneSpec) -> tuple[GrayRaster, GrayRaster, ChangeMap]:
    rng = np.random.default_rng(spec.seed)
    a, b, truth = render_clean(spec, rng)
    b = np.clip(b, 0.0, 1.0)
    if spec.noise_sigma > 0:
        a = a + rng.normal(0.0, spec.noise_sigma, size=a.shape)
        b = b + rng.normal(0.0, spec.noise_sigma, size=b.shape)
    return GrayRaster.from_clipped(a), GrayRaster.from_clipped(b), ChangeMap(truth)


def add_salt_noise(raster: GrayRaster, fraction: float, seed=0) -> GrayRaster:
    """Flip a random ``fraction`` of pixels to the opposite extreme (dark -> 1, bright -> 0)."""
    if not 0 <= fraction <= 1:
        raise ValueError("fraction must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    values = raster.values.copy()
    n = int(round(fraction * values.size))
    idx = rng.choice(values.size, size=n, replace=False)
    flat = values.reshape(-1)
    flat[idx] = np.where(flat[idx] < 0.5, 1.0, 0.0)
    return GrayRaster(values)
