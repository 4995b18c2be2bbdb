"""Command line interface: ``radialcal {calibrate,compare,undistort,synth}``.

Exit status is 0 on success, 1 on a calibration or data error and 2 on a
usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .calibration import FITTABLE_KINDS, calibrate, compare_models
from .distortion import model_from_kind, undistort_pixel
from .errors import CalibrationError
from .geometry import CameraIntrinsics
from .io import load_dataset, render_report, save_dataset, save_ground_truth, truth_path
from .optimizer import LmOptions
from .synth import SynthSpec, synth_views

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

DEFAULT_INTRINSICS = dict(alpha=832.5, beta=832.5, gamma=0.2, u0=304.0, v0=206.5)


def _grid(text):
    try:
        rows, cols = (int(x) for x in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must look like 8x8, got {text!r}")
    if rows < 2 or cols < 2:
        raise argparse.ArgumentTypeError("grid must be at least 2x2")
    return rows, cols


def _add_optimizer_flags(p):
    d = LmOptions()
    p.add_argument("--max-iters", type=int, default=d.max_iters, help="iteration cap (default %(default)s)")
    p.add_argument("--tolx", type=float, default=d.param_tol, help="step tolerance (default %(default)s)")
    p.add_argument("--tolfun", type=float, default=d.fn_tol, help="relative cost tolerance (default %(default)s)")


def _add_intrinsics_flags(p, defaults):
    for name in ("alpha", "beta", "gamma", "u0", "v0"):
        p.add_argument(f"--{name}", type=float, default=defaults.get(name), required=name not in defaults)


def _lm_options(args):
    return LmOptions(param_tol=args.tolx, fn_tol=args.tolfun, max_iters=args.max_iters)


def _intrinsics(args):
    return CameraIntrinsics(alpha=args.alpha, beta=args.beta, gamma=args.gamma, u0=args.u0, v0=args.v0)


def _emit(text, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="radialcal", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", help="calibrate one distortion model")
    p.add_argument("dataset")
    p.add_argument("--model", choices=FITTABLE_KINDS, default="quadcubic")
    p.add_argument("--out", help="report path (default: stdout)")
    _add_optimizer_flags(p)

    p = sub.add_parser("compare", help="fit all three models from a shared initialization")
    p.add_argument("dataset")
    p.add_argument("--out", help="report path (default: stdout)")
    _add_optimizer_flags(p)

    p = sub.add_parser("undistort", help="map distorted pixels to ideal pixels")
    p.add_argument("k1", type=float)
    p.add_argument("k2", type=float, nargs="?", default=0.0)
    p.add_argument("--model", choices=("poly24", "poly2", "quadcubic", "du"), default="quadcubic")
    _add_intrinsics_flags(p, {"gamma": 0.0})
    p.add_argument("--points", help="JSON list of [u, v] pairs, or a text file with one 'u v' per line")
    p.add_argument("--pixel", nargs=2, type=float, action="append", metavar=("U", "V"), default=[])

    p = sub.add_parser("synth", help="write a synthetic dataset and its ground truth")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise-sigma", type=float, default=0.0)
    p.add_argument("--views", type=int, default=5)
    p.add_argument("--grid", type=_grid, default=(8, 8))
    p.add_argument("--square-size", type=float, default=30.0)
    p.add_argument("--model", choices=("poly24", "poly2", "quadcubic"), default="quadcubic")
    p.add_argument("--k1", type=float, default=-0.12)
    p.add_argument("--k2", type=float, default=-0.14)
    p.add_argument("--depth", type=float, nargs=2, default=(3.0, 5.0), metavar=("MIN", "MAX"),
                   help="camera distance range in target widths")
    _add_intrinsics_flags(p, DEFAULT_INTRINSICS)
    return parser


def cmd_calibrate(args) -> int:
    dataset = load_dataset(args.dataset)
    res = calibrate(dataset, args.model, _lm_options(args))
    rms = [f"rms[{name}] = {v:.4f} px" for name, v in zip(dataset.names, res.per_view_rms)]
    rms.append(f"iterations = {res.iterations} ({res.termination})")
    text = render_report(
        [res], title=f"Calibration of {args.dataset}", extra_lines=rms, dataset=str(args.dataset)
    )
    _emit(text, args.out)
    return EXIT_OK


def cmd_compare(args) -> int:
    dataset = load_dataset(args.dataset)
    results = compare_models(dataset, FITTABLE_KINDS, _lm_options(args))
    # report order: #1 poly24, #2 poly2, #3 quadcubic
    ordered = [results[k] for k in FITTABLE_KINDS]
    text = render_report(
        ordered, title=f"Comparison of distortion models on {args.dataset}", dataset=str(args.dataset)
    )
    _emit(text, args.out)
    return EXIT_OK


def _read_points(path):
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError:
        data = [[float(x) for x in line.split()] for line in text.splitlines() if line.strip()]
    arr = np.asarray(data, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"{path}: expected a list of [u, v] pairs")
    return arr


def cmd_undistort(args) -> int:
    model = model_from_kind(args.model, [args.k1, args.k2])
    intr = _intrinsics(args)
    pixels = list(args.pixel)
    if args.points:
        pixels.extend(_read_points(args.points).tolist())
    if not pixels:
        raise ValueError("no pixels given; use --points or --pixel")
    status = EXIT_OK
    for u, v in pixels:
        try:
            uu, vv = (float(c) for c in undistort_pixel(model, intr, np.array([u, v])))
            print(f"{u!r} {v!r} -> {uu!r} {vv!r}")
        except CalibrationError as exc:
            print(f"{u!r} {v!r} -> error: {exc}")
            status = EXIT_FAILURE
    return status


def cmd_synth(args) -> int:
    rows, cols = args.grid
    spec = SynthSpec(
        intrinsics=_intrinsics(args),
        distortion=model_from_kind(args.model, [args.k1] if args.model == "poly2" else [args.k1, args.k2]),
        grid_rows=rows,
        grid_cols=cols,
        square_size=args.square_size,
        n_views=args.views,
        depth_range=tuple(args.depth),
        noise_sigma=args.noise_sigma,
        rng_seed=args.seed,
    )
    dataset, truth = synth_views(spec)
    save_dataset(dataset, args.out)
    save_ground_truth(truth, truth_path(args.out), noise_sigma=args.noise_sigma, seed=args.seed)
    print(f"wrote {args.out} ({dataset.n_views} views x {dataset.n_points} points), "
          f"ground truth J = {truth.final_j:.6g}")
    return EXIT_OK


COMMANDS = {
    "calibrate": cmd_calibrate,
    "compare": cmd_compare,
    "undistort": cmd_undistort,
    "synth": cmd_synth,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except CalibrationError as exc:
        print(f"radialcal {args.command}: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except (OSError, ValueError) as exc:
        print(f"radialcal {args.command}: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
