"""Pixelwise scoring of a change map against ground truth."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from wavechange.errors import DimensionMismatch
from wavechange.segment import ChangeMap

CSV_HEADER = ("method", "test_set", "TP", "FP", "TN", "FN", "kappa", "degenerate")


class EmptyInput(ValueError):
    pass


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def swapped(self) -> "ConfusionCounts":
        """Counts after relabelling changed <-> unchanged in both maps."""
        return ConfusionCounts(tp=self.tn, fp=self.fn, tn=self.tp, fn=self.fp)

    def transposed(self) -> "ConfusionCounts":
        """Counts with the roles of map and truth exchanged."""
        return ConfusionCounts(tp=self.tp, fp=self.fn, tn=self.tn, fn=self.fp)


class Rates(NamedTuple):
    tpr: float
    fpr: float
    tnr: float
    fnr: float
    degenerate: bool


def _flags(m) -> np.ndarray:
    return m.flags if isinstance(m, ChangeMap) else np.asarray(m, dtype=bool)


def confusion(change_map, truth) -> ConfusionCounts:
    pred, ref = _flags(change_map), _flags(truth)
    if pred.shape != ref.shape:
        raise DimensionMismatch(f"map {pred.shape} vs truth {ref.shape}")
    tp = int(np.count_nonzero(pred & ref))
    fp = int(np.count_nonzero(pred & ~ref))
    fn = int(np.count_nonzero(~pred & ref))
    return ConfusionCounts(tp=tp, fp=fp, tn=pred.size - tp - fp - fn, fn=fn)


def rates(c: ConfusionCounts) -> Rates:
    """Per-class rates as reported in comparison tables.

    tpr/fnr are normalized by the truth positives, fpr/tnr by the truth
    negatives. An empty class gives zeros for its pair and sets ``degenerate``.
    """
    pos, neg = c.tp + c.fn, c.fp + c.tn
    tpr = c.tp / pos if pos else 0.0
    fnr = c.fn / pos if pos else 0.0
    fpr = c.fp / neg if neg else 0.0
    tnr = c.tn / neg if neg else 0.0
    return Rates(tpr, fpr, tnr, fnr, degenerate=not (pos and neg))


def _kappa_terms(c: ConfusionCounts):
    n = c.total
    if n == 0:
        raise EmptyInput("kappa of an empty comparison")
    agree = n * (c.tp + c.tn)
    chance = (c.tp + c.fp) * (c.tp + c.fn) + (c.fn + c.tn) * (c.fp + c.tn)
    return agree, chance, n * n


def kappa(c: ConfusionCounts) -> float:
    """Cohen's kappa for a 2x2 table, computed in exact integer arithmetic.

    Returns 0.0 when chance agreement is 1 (a single class in both margins).
    """
    agree, chance, n2 = _kappa_terms(c)
    if chance == n2:
        return 0.0
    return (agree - chance) / (n2 - chance)


def kappa_degenerate(c: ConfusionCounts) -> bool:
    _, chance, n2 = _kappa_terms(c)
    return chance == n2


@dataclass(frozen=True)
class EvalReport:
    counts: ConfusionCounts
    tpr: float
    fpr: float
    tnr: float
    fnr: float
    kappa: float
    degenerate: bool
    method: str = ""
    test_id: str = ""

    def csv_fields(self) -> list[str]:
        return [
            self.method,
            self.test_id,
            f"{self.tpr:.4f}",
            f"{self.fpr:.4f}",
            f"{self.tnr:.4f}",
            f"{self.fnr:.4f}",
            f"{self.kappa:.4f}",
            str(int(self.degenerate)),
        ]

    def to_keyvalue(self) -> str:
        c = self.counts
        pairs = [
            ("method", self.method),
            ("test_id", self.test_id),
            ("tp_count", c.tp),
            ("fp_count", c.fp),
            ("tn_count", c.tn),
            ("fn_count", c.fn),
            ("tpr", repr(self.tpr)),
            ("fpr", repr(self.fpr)),
            ("tnr", repr(self.tnr)),
            ("fnr", repr(self.fnr)),
            ("kappa", repr(self.kappa)),
            ("degenerate", int(self.degenerate)),
        ]
        return "".join(f"{k}={v}\n" for k, v in pairs)


def report(change_map, truth, method: str = "", test_id: str = "") -> EvalReport:
    counts = confusion(change_map, truth)
    r = rates(counts)
    return EvalReport(
        counts=counts,
        tpr=r.tpr,
        fpr=r.fpr,
        tnr=r.tnr,
        fnr=r.fnr,
        kappa=kappa(counts),
        degenerate=r.degenerate or kappa_degenerate(counts),
        method=method,
        test_id=test_id,
    )


def format_csv(reports, header: bool = True) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if header:
        writer.writerow(CSV_HEADER)
    for rep in reports:
        writer.writerow(rep.csv_fields())
    return buf.getvalue()


def parse_keyvalue(text: str) -> dict[str, str]:
    out = {}
    for line in text.splitlines():
        if line.strip():
            key, _, value = line.partition("=")
            out[key.strip()] = value.strip()
    return out
