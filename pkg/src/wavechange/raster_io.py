"""Grayscale raster container plus PGM/PNG I/O and power-of-two padding.

Intensities are always held as float64 in [0, 1], row-major with shape
(height, width).
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from wavechange.errors import CorruptImage, IoFailure, RecordMismatch, UnsupportedFormat

FORMATS = ("pgm", "png")


@dataclass(frozen=True, eq=False)
class GrayRaster:
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise ValueError(f"raster must be a non-empty 2D grid, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("raster contains non-finite values")
        if v.min() < 0.0 or v.max() > 1.0:
            raise ValueError(f"raster values must lie in [0, 1], got [{v.min()}, {v.max()}]")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @classmethod
    def from_clipped(cls, values) -> "GrayRaster":
        return cls(np.clip(np.asarray(values, dtype=np.float64), 0.0, 1.0))

    def __eq__(self, other):
        if not isinstance(other, GrayRaster):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self.values, other.values))

    def __repr__(self):
        return f"GrayRaster(width={self.width}, height={self.height})"


@dataclass(frozen=True)
class PadRecord:
    original_width: int
    original_height: int
    padded_side: int
    offset_x: int = 0
    offset_y: int = 0

    def __post_init__(self):
        side = self.padded_side
        if side < 1 or side & (side - 1):
            raise ValueError(f"padded_side must be a power of two, got {side}")
        if min(self.original_width, self.original_height) < 1:
            raise ValueError("original dimensions must be positive")
        if self.offset_x < 0 or self.offset_y < 0:
            raise ValueError("offsets must be non-negative")


def _infer_format(path, fmt):
    if fmt is None:
        fmt = Path(path).suffix.lower().lstrip(".")
    fmt = fmt.lower()
    if fmt not in FORMATS:
        raise UnsupportedFormat(f"{path}: unsupported format {fmt!r} (expected one of {FORMATS})")
    return fmt


def _read_pgm(path, data: bytes) -> np.ndarray:
    # header: magic, width, height, maxval separated by whitespace, '#' comments allowed
    tokens = []
    pos = 0
    n = len(data)
    while len(tokens) < 4:
        while pos < n and data[pos : pos + 1].isspace():
            pos += 1
        if pos < n and data[pos : pos + 1] == b"#":
            while pos < n and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not data[pos : pos + 1].isspace() and data[pos : pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise CorruptImage(f"{path}: truncated PGM header")
        tokens.append(data[start:pos])
    if tokens[0] != b"P5":
        if tokens[0] in (b"P1", b"P2", b"P3", b"P4", b"P6"):
            raise UnsupportedFormat(f"{path}: only binary PGM (P5) is supported, got {tokens[0].decode()}")
        raise CorruptImage(f"{path}: not a PGM file")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise CorruptImage(f"{path}: malformed PGM header") from None
    if width < 1 or height < 1 or not 1 <= maxval <= 65535:
        raise CorruptImage(f"{path}: invalid PGM dimensions or maxval")
    if pos >= n:
        raise CorruptImage(f"{path}: missing PGM pixel data")
    pos += 1  # single whitespace byte after maxval
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    need = width * height * dtype.itemsize
    if n - pos < need:
        raise CorruptImage(f"{path}: truncated PGM data ({n - pos} of {need} bytes)")
    raw = np.frombuffer(data, dtype=dtype, count=width * height, offset=pos)
    if raw.max(initial=0) > maxval:
        raise CorruptImage(f"{path}: sample exceeds maxval {maxval}")
    return raw.reshape(height, width).astype(np.float64) / maxval


def _read_png(path) -> np.ndarray:
    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            if mode == "P":
                im = im.convert("RGBA" if "transparency" in im.info else "RGB")
                mode = im.mode
            if mode == "1":
                return np.asarray(im, dtype=np.float64)
            if mode == "L":
                return np.asarray(im, dtype=np.float64) / 255.0
            if mode == "LA":
                return np.asarray(im, dtype=np.float64)[..., 0] / 255.0
            if mode in ("I;16", "I;16B", "I;16L", "I"):
                # Pillow reports 16-bit grayscale PNG as I;16 or I
                return np.asarray(im, dtype=np.float64) / 65535.0
            if mode in ("RGB", "RGBA"):
                arr = np.asarray(im, dtype=np.float64)[..., :3]
                return arr.mean(axis=2) / 255.0
            raise UnsupportedFormat(f"{path}: unsupported PNG mode {mode}")
    except (UnidentifiedImageError, SyntaxError, EOFError) as exc:
        raise CorruptImage(f"{path}: {exc}") from exc
    except OSError as exc:
        if isinstance(exc, FileNotFoundError):
            raise
        raise CorruptImage(f"{path}: {exc}") from exc


def load_raster(path, fmt: str | None = None) -> GrayRaster:
    """Read a PGM (P5, maxval up to 65535) or PNG file into a GrayRaster.

    Samples are divided by the source maximum code value. Color PNGs are
    reduced by the unweighted mean of their RGB channels.
    """
    fmt = _infer_format(path, fmt)
    if not os.path.isfile(path):
        raise FileNotFoundError(f"{path}: no such file")
    if fmt == "pgm":
        try:
            with open(path, "rb") as fh:
                data = fh.read()
        except OSError as exc:
            raise IoFailure(f"{path}: {exc}") from exc
        arr = _read_pgm(path, data)
    else:
        arr = _read_png(path)
    return GrayRaster(np.clip(arr, 0.0, 1.0))


def load_truth(path, fmt: str | None = None) -> np.ndarray:
    """Load a ground-truth image as a boolean mask, binarized at 0.5."""
    return load_raster(path, fmt).values >= 0.5


def quantize(values: np.ndarray, maxval: int = 255) -> np.ndarray:
    dtype = np.uint8 if maxval <= 255 else np.uint16
    return np.rint(np.clip(values, 0.0, 1.0) * maxval).astype(dtype)


def save_raster(raster: GrayRaster, path, fmt: str | None = None, bit_depth: int = 8) -> None:
    fmt = _infer_format(path, fmt)
    if bit_depth not in (8, 16):
        raise ValueError("bit_depth must be 8 or 16")
    if fmt == "png" and bit_depth != 8:
        raise UnsupportedFormat(f"{path}: PNG output is 8-bit only")
    maxval = 255 if bit_depth == 8 else 65535
    codes = quantize(raster.values, maxval)
    try:
        if fmt == "pgm":
            header = f"P5\n{raster.width} {raster.height}\n{maxval}\n".encode("ascii")
            body = codes.astype(">u2").tobytes() if maxval > 255 else codes.tobytes()
            with open(path, "wb") as fh:
                fh.write(header + body)
        else:
            Image.fromarray(codes, mode="L").save(path, format="PNG")
    except OSError as exc:
        raise IoFailure(f"{path}: {exc}") from exc


def next_pow2(n: int) -> int:
    return 1 << max(0, (n - 1).bit_length())


def pad_to_pow2(raster: GrayRaster) -> tuple[GrayRaster, PadRecord]:
    """Pad to the smallest power-of-two square, replicating edge pixels.

    Content is placed at offset (0, 0); the right and bottom borders copy the
    last column/row.
    """
    side = next_pow2(max(raster.width, raster.height))
    record = PadRecord(raster.width, raster.height, side, 0, 0)
    if raster.width == side and raster.height == side:
        return raster, record
    padded = np.pad(
        raster.values,
        ((0, side - raster.height), (0, side - raster.width)),
        mode="edge",
    )
    return GrayRaster(padded), record


def crop(raster, record: PadRecord):
    """Inverse of pad_to_pow2. Accepts a GrayRaster or a bare 2D array and
    returns the same kind."""
    values = raster.values if isinstance(raster, GrayRaster) else np.asarray(raster)
    h, w = values.shape
    if record.padded_side != h or record.padded_side != w:
        raise RecordMismatch(
            f"record side {record.padded_side} does not match raster {w}x{h}"
        )
    x1 = record.offset_x + record.original_width
    y1 = record.offset_y + record.original_height
    if x1 > w or y1 > h:
        raise RecordMismatch(f"record region ({x1}, {y1}) exceeds raster {w}x{h}")
    out = values[record.offset_y : y1, record.offset_x : x1]
    if isinstance(raster, GrayRaster):
        if out.shape == values.shape:
            return raster
        return GrayRaster(out)
    return out.copy()
