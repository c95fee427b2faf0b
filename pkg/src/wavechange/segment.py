"""Segmentors that turn a difference map into a binary change map.

Fuzzy c-means is the main route; Lloyd k-means and a 256-bin Otsu threshold
are the comparison baselines.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import accumulate
from typing import Callable

import numpy as np

from wavechange.errors import ShapeMismatch

OTSU_BINS = 256


class TooFewPoints(ValueError):
    pass


class NonFiniteInput(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ChangeMap:
    flags: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.flags, dtype=bool)
        if f.ndim != 2 or f.size == 0:
            raise ValueError(f"change map must be a non-empty 2D grid, got shape {f.shape}")
        f = f.copy()
        f.setflags(write=False)
        object.__setattr__(self, "flags", f)

    @property
    def width(self) -> int:
        return self.flags.shape[1]

    @property
    def height(self) -> int:
        return self.flags.shape[0]

    @property
    def shape(self):
        return self.flags.shape

    @property
    def change_fraction(self) -> float:
        return float(self.flags.mean())

    def __eq__(self, other):
        if not isinstance(other, ChangeMap):
            return NotImplemented
        return bool(np.array_equal(self.flags, other.flags))

    def to_raster(self):
        from wavechange.raster_io import GrayRaster

        return GrayRaster(self.flags.astype(np.float64))


@dataclass(frozen=True)
class FcmConfig:
    c: int = 6
    m: float = 2.0
    eps: float = 1e-5
    max_iter: int = 300
    seed: int = 0

    def __post_init__(self):
        if self.c < 2:
            raise ValueError("c must be at least 2")
        if not self.m > 1:
            raise ValueError("m must exceed 1")
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


@dataclass
class FcmResult:
    u: np.ndarray
    v: np.ndarray
    n_iter: int
    converged: bool
    objective: list = field(default_factory=list)

    def __iter__(self):
        # allows ``u, v = fcm(...)``
        return iter((self.u, self.v))


def _as_vector(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64).ravel()
    if not np.all(np.isfinite(x)):
        raise NonFiniteInput("input contains NaN or infinite values")
    return x


def update_centers(x, u, m, previous=None):
    """Weighted means of ``x`` with weights ``u**m``, one per column.

    A column with zero total weight keeps its previous center. The sum is
    taken relative to ``min(x)`` so a constant input yields that constant
    exactly.
    """
    w = u * u if m == 2 else u**m
    den = w.sum(axis=0)
    base = x.min()
    num = w.T @ (x - base)
    with np.errstate(invalid="ignore", divide="ignore"):
        v = base + num / den
    empty = den <= 0
    if np.any(empty):
        if previous is None:
            raise NonFiniteInput("cluster has zero total membership")
        v[empty] = previous[empty]
    return v


def update_memberships(x, v, m):
    """Membership update for fixed centers.

    A point sitting exactly on a center gets membership 1 in the lowest
    such cluster and 0 elsewhere.
    """
    d = np.abs(x[:, None] - v[None, :])
    dmin = d.min(axis=1, keepdims=True)
    exact = dmin[:, 0] == 0.0
    p = 2.0 / (m - 1.0)
    # scale by the row minimum so every ratio is <= 1 and nothing overflows
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.divide(dmin, d, out=d)
    r = r * r if p == 2 else r**p
    u = r / r.sum(axis=1, keepdims=True)
    if exact.any():
        rows = np.flatnonzero(exact)
        hit = np.abs(x[rows, None] - v[None, :]) == 0.0
        u[rows] = 0.0
        u[rows, hit.argmax(axis=1)] = 1.0
    return u


def fcm_objective(x, u, v, m) -> float:
    x = np.asarray(x, dtype=np.float64).ravel()
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64).ravel()
    if u.ndim != 2 or u.shape != (x.shape[0], v.shape[0]):
        raise ShapeMismatch(f"u has shape {u.shape}, expected ({x.shape[0]}, {v.shape[0]})")
    return float(np.sum(u**m * (x[:, None] - v[None, :]) ** 2))


def init_memberships(n: int, c: int, seed) -> np.ndarray:
    rng = np.random.default_rng(seed)
    u = rng.random((n, c))
    # random() is in [0, 1); avoid an all-zero row
    u += np.finfo(np.float64).tiny
    return u / u.sum(axis=1, keepdims=True)


def fcm(
    x,
    cfg: FcmConfig = FcmConfig(),
    callback: Callable[[int, np.ndarray, np.ndarray], None] | None = None,
    track_objective: bool = False,
) -> FcmResult:
    """Fuzzy c-means on a flat vector of intensities.

    Starts from a seeded random row-normalized membership matrix, then
    alternates center and membership updates until the Frobenius norm of the
    membership change is at most ``cfg.eps`` or ``cfg.max_iter`` is hit.
    ``callback(iteration, u, v)`` is called after every iteration; with
    ``track_objective`` the objective after each iteration is kept in
    ``result.objective``.
    """
    x = _as_vector(x)
    n = x.shape[0]
    if n < cfg.c:
        raise TooFewPoints(f"need at least c={cfg.c} points, got {n}")
    u = init_memberships(n, cfg.c, cfg.seed)
    v = None
    history = []
    converged = False
    it = 0
    while it < cfg.max_iter:
        it += 1
        v_new = update_centers(x, u, cfg.m, v)
        u_new = update_memberships(x, v_new, cfg.m)
        delta = float(np.linalg.norm(u - u_new))
        u, v = u_new, v_new
        if track_objective:
            history.append(fcm_objective(x, u, v, cfg.m))
        if callback is not None:
            callback(it, u, v)
        if delta <= cfg.eps:
            converged = True
            break
    return FcmResult(u=u, v=v, n_iter=it, converged=converged, objective=history)


def kmeans(x, k: int, seed=0, max_iter: int = 300):
    """Lloyd's algorithm in one dimension.

    Centers start at ``k`` distinct data points drawn with ``seed``. Ties in
    assignment go to the lower cluster index. An emptied cluster is moved to
    the point farthest from its current center.

    Returns ``(labels, centers)``.
    """
    x = _as_vector(x)
    n = x.shape[0]
    if k < 1:
        raise ValueError("k must be at least 1")
    if n < k:
        raise TooFewPoints(f"need at least k={k} points, got {n}")
    rng = np.random.default_rng(seed)
    centers = x[rng.choice(n, size=k, replace=False)].copy()
    labels = None
    for _ in range(max_iter):
        new = np.abs(x[:, None] - centers[None, :]).argmin(axis=1)
        counts = np.bincount(new, minlength=k)
        while np.any(counts == 0):
            j = int(np.flatnonzero(counts == 0)[0])
            # donors must keep at least one point
            dist = np.where(counts[new] > 1, np.abs(x - centers[new]), -1.0)
            far = int(dist.argmax())
            counts[new[far]] -= 1
            new[far] = j
            counts[j] += 1
            centers[j] = x[far]
        sums = np.bincount(new, weights=x, minlength=k)
        centers = sums / counts
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
    return labels, centers


def _otsu_scores(hist):
    """Exact (numerator, denominator) of the between-class score for each boundary.

    For boundary k (1..bins-1) class 0 holds bins < k. The score
    (S0*n1 - S1*n0)^2 / (n0*n1) is proportional to the between-class variance
    with bin indices as levels. Python ints keep comparisons exact.
    """
    counts = [int(c) for c in hist]
    moments = [i * c for i, c in enumerate(counts)]
    n_cum = list(accumulate(counts))
    s_cum = list(accumulate(moments))
    n_tot, s_tot = n_cum[-1], s_cum[-1]
    scores = []
    for k in range(1, len(counts)):
        n0, s0 = n_cum[k - 1], s_cum[k - 1]
        n1, s1 = n_tot - n0, s_tot - s0
        if n0 == 0 or n1 == 0:
            scores.append((0, 1))
        else:
            scores.append(((s0 * n1 - s1 * n0) ** 2, n0 * n1))
    return scores


def otsu_bins(x) -> np.ndarray:
    x = _as_vector(x)
    return np.minimum(np.floor(np.clip(x, 0.0, 1.0) * OTSU_BINS), OTSU_BINS - 1).astype(np.int64)


def otsu_threshold(x) -> float:
    """Otsu threshold over a 256-bin histogram of values in [0, 1].

    Candidates are the 255 interior bin boundaries ``k/256``; ties go to the
    lowest. Pixels ``>= threshold`` are "changed".
    """
    x = _as_vector(x)
    if x.size == 0:
        raise TooFewPoints("otsu needs at least one value")
    hist = np.bincount(otsu_bins(x), minlength=OTSU_BINS)
    best_k, best = 1, (0, 1)
    for k, (num, den) in enumerate(_otsu_scores(hist), start=1):
        if num * best[1] > best[0] * den:
            best_k, best = k, (num, den)
    return best_k / OTSU_BINS


def to_change_map(u, v, width: int, height: int) -> ChangeMap:
    """Mark a pixel changed when its strongest membership is the highest-center cluster.

    Membership ties favour the highest-center cluster; among equal centers the
    lowest index counts as the changed cluster.
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64).ravel()
    if u.ndim != 2 or u.shape[1] != v.shape[0] or u.shape[0] != width * height:
        raise ShapeMismatch(f"u {u.shape} / v {v.shape} inconsistent with {width}x{height}")
    top = int(np.argmax(v))
    flags = u[:, top] >= u.max(axis=1)
    return ChangeMap(flags.reshape(height, width))


def labels_to_change_map(labels, centers, width: int, height: int) -> ChangeMap:
    labels = np.asarray(labels).ravel()
    centers = np.asarray(centers, dtype=np.float64).ravel()
    if labels.shape[0] != width * height:
        raise ShapeMismatch(f"{labels.shape[0]} labels for a {width}x{height} map")
    if labels.size and (labels.min() < 0 or labels.max() >= centers.shape[0]):
        raise ShapeMismatch("label index outside the center vector")
    return ChangeMap((labels == int(np.argmax(centers))).reshape(height, width))


def threshold_change_map(values: np.ndarray, threshold: float) -> ChangeMap:
    return ChangeMap(np.asarray(values) >= threshold)


def segment_values(values: np.ndarray, method: str, *, fcm_cfg: FcmConfig = FcmConfig(), k: int = 6, seed=0, max_iter=300) -> ChangeMap:
    """Run one of ``otsu``, ``kmeans``, ``fcm`` on a 2D difference grid.

    A flat grid carries no change evidence and yields an all-unchanged map
    (the center tie-break would otherwise mark every pixel).
    """
    h, w = values.shape
    flat = values.ravel()
    if method not in ("otsu", "kmeans", "fcm"):
        raise ValueError(f"unknown segmentor {method!r}")
    if flat.size and flat.min() == flat.max():
        return ChangeMap(np.zeros((h, w), dtype=bool))
    if method == "otsu":
        # compare via the same binning as the histogram so >= threshold is exact
        return ChangeMap((otsu_bins(flat) >= round(otsu_threshold(flat) * OTSU_BINS)).reshape(h, w))
    if method == "kmeans":
        labels, centers = kmeans(flat, k, seed=seed, max_iter=max_iter)
        return labels_to_change_map(labels, centers, w, h)
    if method == "fcm":
        res = fcm(flat, fcm_cfg)
        return to_change_map(res.u, res.v, w, h)


def save_memberships(path, u, v) -> None:
    """Plain-text dump: the center vector on the first line, then one membership row per line."""
    with open(path, "w") as fh:
        fh.write(" ".join(repr(float(c)) for c in np.ravel(v)) + "\n")
        for row in np.asarray(u):
            fh.write(" ".join(repr(float(c)) for c in row) + "\n")


def load_memberships(path):
    with open(path) as fh:
        lines = [ln.split() for ln in fh if ln.strip()]
    v = np.array([float(t) for t in lines[0]])
    u = np.array([[float(t) for t in ln] for ln in lines[1:]])
    return u, v
