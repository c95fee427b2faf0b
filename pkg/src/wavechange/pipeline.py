"""End-to-end change detection: pair -> difference map -> segmentation -> report."""
from __future__ import annotations

import os
from dataclasses import dataclass, fields, replace

from wavechange.diffmap import DifferenceMap, minus_map, ratio_map, weighted_average_fuse
from wavechange.errors import DimensionMismatch, IoFailure
from wavechange.evaluate import EvalReport, format_csv, report
from wavechange.raster_io import GrayRaster, load_raster, load_truth, save_raster
from wavechange.segment import ChangeMap, FcmConfig, segment_values
from wavechange.wavelet import BandSplit, dwt_fuse_maps

FUSIONS = ("minus", "ratio", "weighted", "dwt")
SEGMENTORS = ("otsu", "kmeans", "fcm")


@dataclass(frozen=True)
class PipelineConfig:
    t1: str | None = None
    t2: str | None = None
    truth: str | None = None
    fusion: str = "dwt"
    weight: float = 0.5
    levels: int = 1
    split: float = 0.5
    segmentor: str = "fcm"
    clusters: int = 6
    fuzziness: float = 2.0
    eps: float = 1e-5
    max_iter: int = 300
    k: int | None = None
    out_dir: str = "out"
    seed: int = 0

    def __post_init__(self):
        if self.fusion not in FUSIONS:
            raise ValueError(f"fusion must be one of {FUSIONS}, got {self.fusion!r}")
        if self.segmentor not in SEGMENTORS:
            raise ValueError(f"segmentor must be one of {SEGMENTORS}, got {self.segmentor!r}")
        if not 0.0 <= self.weight <= 1.0:
            raise ValueError("weight must lie in [0, 1]")
        if self.levels < 1:
            raise ValueError("levels must be at least 1")
        if self.k is not None and self.k < 1:
            raise ValueError("k must be at least 1")
        BandSplit(self.split)
        self.fcm_config()

    def fcm_config(self) -> FcmConfig:
        return FcmConfig(c=self.clusters, m=self.fuzziness, eps=self.eps, max_iter=self.max_iter, seed=self.seed)

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]


def difference_map(a: GrayRaster, b: GrayRaster, cfg: PipelineConfig) -> DifferenceMap:
    if a.shape != b.shape:
        raise DimensionMismatch(f"t1 is {a.width}x{a.height} but t2 is {b.width}x{b.height}")
    if cfg.fusion == "minus":
        return minus_map(a, b)
    if cfg.fusion == "ratio":
        return ratio_map(a, b)
    dm, dr = minus_map(a, b), ratio_map(a, b)
    if cfg.fusion == "weighted":
        return weighted_average_fuse(dm, dr, cfg.weight)
    return dwt_fuse_maps(dm, dr, levels=cfg.levels, split=BandSplit(cfg.split))


def segment(dmap: DifferenceMap, cfg: PipelineConfig) -> ChangeMap:
    return segment_values(
        dmap.values,
        cfg.segmentor,
        fcm_cfg=cfg.fcm_config(),
        k=cfg.k if cfg.k is not None else cfg.clusters,
        seed=cfg.seed,
        max_iter=cfg.max_iter,
    )


def detect(a: GrayRaster, b: GrayRaster, cfg: PipelineConfig) -> tuple[DifferenceMap, ChangeMap]:
    dmap = difference_map(a, b, cfg)
    return dmap, segment(dmap, cfg)


def run(cfg: PipelineConfig) -> EvalReport | ChangeMap:
    """Load the pair, detect changes and write ``fused_diff.png``,
    ``change_map.png`` and, with a truth file, ``report.csv`` into ``cfg.out_dir``."""
    if not cfg.t1 or not cfg.t2:
        raise ValueError("both --t1 and --t2 are required")
    a, b = load_raster(cfg.t1), load_raster(cfg.t2)
    dmap, cmap = detect(a, b, cfg)
    os.makedirs(cfg.out_dir, exist_ok=True)
    save_raster(dmap.raster, os.path.join(cfg.out_dir, "fused_diff.png"))
    save_raster(cmap.to_raster(), os.path.join(cfg.out_dir, "change_map.png"))
    if not cfg.truth:
        return cmap
    truth = load_truth(cfg.truth)
    rep = report(cmap, truth, method=cfg.segmentor, test_id="1")
    _write_text(os.path.join(cfg.out_dir, "report.csv"), format_csv([rep]))
    return rep


def compare(cfg: PipelineConfig, test_sets, methods=SEGMENTORS) -> list[EvalReport]:
    """Score every segmentor on every ``(test_id, t1, t2, truth)`` set.

    The difference map is computed once per set with ``cfg``'s fusion mode.
    Rows are ordered by test set, then by ``methods``; everything lands in
    ``cfg.out_dir/report.csv``.
    """
    os.makedirs(cfg.out_dir, exist_ok=True)
    reports = []
    for test_id, t1, t2, truth_path in test_sets:
        a, b = load_raster(t1), load_raster(t2)
        truth = load_truth(truth_path)
        dmap = difference_map(a, b, cfg)
        save_raster(dmap.raster, os.path.join(cfg.out_dir, f"{test_id}_fused_diff.png"))
        for method in methods:
            cmap = segment(dmap, replace(cfg, segmentor=method))
            save_raster(cmap.to_raster(), os.path.join(cfg.out_dir, f"{test_id}_{method}_change_map.png"))
            reports.append(report(cmap, truth, method=method, test_id=str(test_id)))
    _write_text(os.path.join(cfg.out_dir, "report.csv"), format_csv(reports))
    return reports


def _write_text(path, text):
    try:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise IoFailure(f"{path}: {exc}") from exc
