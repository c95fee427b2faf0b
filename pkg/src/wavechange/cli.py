"""Command line entry point.

Subcommands: ``run``, ``compare``, ``synth`` and ``dwt-roundtrip``. Any
option can also come from a ``--config`` file of ``key = value`` lines;
command-line flags override the file, which overrides built-in defaults.
"""
from __future__ import annotations

import argparse
import dataclasses
import os
import sys

import numpy as np

from wavechange import pipeline
from wavechange.errors import CorruptImage, IoFailure, NumericFailure, UnsupportedFormat
from wavechange.evaluate import format_csv
from wavechange.raster_io import load_raster, pad_to_pow2, save_raster
from wavechange.synthgen import SceneSpec, add_salt_noise, generate_pair
from wavechange.wavelet import dump_pyramid, dwt2, idwt2

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_NUMERIC = 0, 2, 3, 4
ROUNDTRIP_TOL = 1e-9


class ConfigError(ValueError):
    pass


def _opt(s):
    return None if s in ("", "none", "None") else s


PIPELINE_KEYS = {
    "t1": _opt,
    "t2": _opt,
    "truth": _opt,
    "fusion": str,
    "segmentor": str,
    "clusters": int,
    "fuzziness": float,
    "eps": float,
    "max_iter": int,
    "levels": int,
    "split": float,
    "weight": float,
    "seed": int,
    "out_dir": str,
    "k": int,
}

SCENE_KEYS = {
    "width": int,
    "height": int,
    "seed": int,
    "n_shapes": int,
    "noise_sigma": float,
    "contrast_delta": float,
    "salt": float,
    "id": str,
    "out_dir": str,
    "format": str,
}


def read_config(path) -> dict[str, str]:
    """Parse ``key = value`` lines. Blank lines and ``#`` comments are skipped."""
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise IoFailure(f"{path}: {exc}") from exc
    out = {}
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def merge_options(args: argparse.Namespace, keys: dict, defaults: dict) -> dict:
    merged = dict(defaults)
    if getattr(args, "config", None):
        for key, raw in read_config(args.config).items():
            if key not in keys:
                raise ConfigError(f"{args.config}: unknown key {key!r}")
            try:
                merged[key] = keys[key](raw)
            except ValueError:
                raise ConfigError(f"{args.config}: bad value for {key}: {raw!r}") from None
    for key in keys:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    return merged


def _pipeline_config(args) -> pipeline.PipelineConfig:
    defaults = {f.name: f.default for f in dataclasses.fields(pipeline.PipelineConfig)}
    opts = merge_options(args, PIPELINE_KEYS, defaults)
    try:
        return pipeline.PipelineConfig(**opts)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _add_pipeline_flags(p: argparse.ArgumentParser):
    # defaults live in PipelineConfig; None here means "not given"
    p.add_argument("--config", help="key = value file; flags override it")
    p.add_argument("--t1", help="first-date image (PGM or PNG)")
    p.add_argument("--t2", help="second-date image")
    p.add_argument("--truth", help="ground-truth change image, binarized at 0.5")
    p.add_argument("--fusion", choices=pipeline.FUSIONS)
    p.add_argument("--segmentor", choices=pipeline.SEGMENTORS)
    p.add_argument("--clusters", type=int, help="FCM cluster count (default 6); also k-means k unless --k")
    p.add_argument("--k", type=int, help="k-means cluster count")
    p.add_argument("--fuzziness", type=float, help="FCM exponent m (default 2)")
    p.add_argument("--eps", type=float, help="FCM convergence tolerance (default 1e-5)")
    p.add_argument("--max-iter", dest="max_iter", type=int)
    p.add_argument("--levels", type=int, help="Haar decomposition depth (default 1)")
    p.add_argument("--split", type=float, help="low-band boundary fraction (default 0.5)")
    p.add_argument("--weight", type=float, help="minus-map weight in weighted fusion (default 0.5)")
    p.add_argument("--seed", type=int)
    p.add_argument("--out-dir", dest="out_dir")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wavechange", description="Wavelet-fused change detection for grayscale image pairs.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="detect changes in one image pair")
    _add_pipeline_flags(p_run)

    p_cmp = sub.add_parser("compare", help="score several segmentors on several test sets")
    _add_pipeline_flags(p_cmp)
    p_cmp.add_argument(
        "--set",
        dest="sets",
        nargs=4,
        action="append",
        metavar=("ID", "T1", "T2", "TRUTH"),
        help="a test set; repeat for more",
    )
    p_cmp.add_argument("--methods", default=",".join(pipeline.SEGMENTORS))

    p_syn = sub.add_parser("synth", help="write a synthetic pair and its ground truth")
    p_syn.add_argument("--config")
    p_syn.add_argument("--id")
    p_syn.add_argument("--out-dir", dest="out_dir")
    p_syn.add_argument("--width", type=int)
    p_syn.add_argument("--height", type=int)
    p_syn.add_argument("--seed", type=int)
    p_syn.add_argument("--n-shapes", dest="n_shapes", type=int)
    p_syn.add_argument("--noise-sigma", dest="noise_sigma", type=float)
    p_syn.add_argument("--contrast-delta", dest="contrast_delta", type=float)
    p_syn.add_argument("--salt", type=float, help="fraction of t2 pixels flipped to the opposite extreme")
    p_syn.add_argument("--format", choices=("png", "pgm"))

    p_rt = sub.add_parser("dwt-roundtrip", help="check forward/inverse Haar reconstruction on an image")
    p_rt.add_argument("--t1", required=True)
    p_rt.add_argument("--levels", type=int, default=1)
    p_rt.add_argument("--dump", help="write the coefficient pyramid here (inspection only)")
    return parser


def cmd_run(args) -> int:
    cfg = _pipeline_config(args)
    for flag in ("t1", "t2"):
        if not getattr(cfg, flag):
            raise ConfigError(f"missing required flag --{flag}")
    result = pipeline.run(cfg)
    if isinstance(result, pipeline.EvalReport):
        sys.stdout.write(format_csv([result]))
    else:
        print(f"change_fraction={result.change_fraction:.4f}")
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = _pipeline_config(args)
    sets = [tuple(s) for s in args.sets or []]
    if cfg.t1 or cfg.t2 or cfg.truth:
        if not (cfg.t1 and cfg.t2 and cfg.truth):
            raise ConfigError("compare needs --t1, --t2 and --truth together (or --set)")
        sets.insert(0, ("1", cfg.t1, cfg.t2, cfg.truth))
    if not sets:
        raise ConfigError("compare needs at least one --set ID T1 T2 TRUTH")
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    bad = [m for m in methods if m not in pipeline.SEGMENTORS]
    if bad or not methods:
        raise ConfigError(f"unknown method(s) {bad}; choose from {pipeline.SEGMENTORS}")
    reports = pipeline.compare(cfg, sets, methods)
    sys.stdout.write(format_csv(reports))
    return EXIT_OK


def cmd_synth(args) -> int:
    spec_defaults = {f.name: f.default for f in dataclasses.fields(SceneSpec) if f.name != "shapes"}
    defaults = {**spec_defaults, "salt": 0.0, "id": "scene", "out_dir": ".", "format": "png"}
    opts = merge_options(args, SCENE_KEYS, defaults)
    salt, scene_id, out_dir, fmt = (opts.pop(k) for k in ("salt", "id", "out_dir", "format"))
    try:
        spec = SceneSpec(**opts)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    a, b, truth = generate_pair(spec)
    if salt:
        b = add_salt_noise(b, salt, seed=spec.seed)
    os.makedirs(out_dir, exist_ok=True)
    stem = os.path.join(out_dir, scene_id)
    save_raster(a, f"{stem}_t1.{fmt}")
    save_raster(b, f"{stem}_t2.{fmt}")
    save_raster(truth.to_raster(), f"{stem}_truth.{fmt}")
    print(f"{scene_id} change_fraction={truth.change_fraction:.4f}")
    return EXIT_OK


def cmd_roundtrip(args) -> int:
    raster = load_raster(args.t1)
    padded, _ = pad_to_pow2(raster)
    try:
        pyr = dwt2(padded, args.levels)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    err = float(np.max(np.abs(idwt2(pyr) - padded.values)))
    if args.dump:
        dump_pyramid(pyr, args.dump)
    print(f"side={pyr.side} levels={pyr.levels} max_abs_error={err:.3e}")
    if not err < ROUNDTRIP_TOL:
        raise NumericFailure(f"reconstruction error {err:.3e} exceeds {ROUNDTRIP_TOL:g}")
    return EXIT_OK


COMMANDS = {"run": cmd_run, "compare": cmd_compare, "synth": cmd_synth, "dwt-roundtrip": cmd_roundtrip}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (FileNotFoundError, IoFailure, CorruptImage, UnsupportedFormat) as exc:
        code, msg = EXIT_IO, exc
    except (NumericFailure, ArithmeticError) as exc:
        code, msg = EXIT_NUMERIC, exc
    except (ConfigError, ValueError) as exc:
        code, msg = EXIT_CONFIG, exc
    except OSError as exc:
        code, msg = EXIT_IO, exc
    print(f"wavechange: error: {msg}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
