"""``elasinterp`` command line: run, compare, eval, bench."""

from __future__ import annotations

import argparse
import itertools
import json
import sys

from . import imgio
from .metrics import evaluate
from .pipeline import PipelineConfig, run_frame, run_stream

# flag -> PipelineConfig field
_OVERRIDES = {
    "mode": "mode",
    "s_delta": "s_delta",
    "epsilon": "epsilon",
    "c_const": "c_const",
    "d_max": "d_max",
    "step": "step",
    "grid_cell": "grid_cell",
    "k_candidates": "k_candidates",
}


def _config(args) -> PipelineConfig:
    overrides = {field: getattr(args, flag, None) for flag, field in _OVERRIDES.items()}
    if getattr(args, "staged", False):
        overrides["staging"] = "staged"
    if args.config:
        return PipelineConfig.from_file(args.config, **overrides)
    return PipelineConfig().replace(**overrides)


def _add_common(p, mode=True):
    p.add_argument("--config", help="key=value parameter file; flags override it")
    if mode:
        p.add_argument("--mode", choices=["original", "interpolated"])
    p.add_argument("--s-delta", type=int, dest="s_delta")
    p.add_argument("--epsilon", type=int)
    p.add_argument("--c-const", type=int, dest="c_const")
    p.add_argument("--d-max", type=int, dest="d_max")
    p.add_argument("--step", type=int)
    p.add_argument("--grid-cell", type=int, dest="grid_cell")
    p.add_argument("--k-candidates", type=int, dest="k_candidates")
    p.add_argument("--staged", action="store_true", help="use the staged double-buffered executor")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="elasinterp", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="compute a disparity map for one stereo pair")
    p.add_argument("left")
    p.add_argument("right")
    p.add_argument("out")
    p.add_argument("--format", choices=imgio.SAVE_FORMATS, default="png16")
    _add_common(p)

    p = sub.add_parser("compare", help="run both modes and score them against ground truth")
    p.add_argument("left")
    p.add_argument("right")
    p.add_argument("gt")
    p.add_argument("--thresh", type=float, default=1)
    p.add_argument("--gt-convention", choices=imgio.GT_CONVENTIONS, default="eightbit")
    p.add_argument("--json", action="store_true", help="emit JSON instead of a table")
    _add_common(p, mode=False)

    p = sub.add_parser("eval", help="score a saved disparity map against ground truth")
    p.add_argument("estimate")
    p.add_argument("gt")
    p.add_argument("--thresh", type=float, default=1)
    p.add_argument("--gt-convention", choices=imgio.GT_CONVENTIONS, default="eightbit")
    p.add_argument("--est-convention", choices=imgio.GT_CONVENTIONS, default="kitti256",
                   help="encoding of the estimate (png16 output is kitti256)")
    p.add_argument("--config")

    p = sub.add_parser("bench", help="serial vs staged throughput over a stream of pairs")
    p.add_argument("directory", help="directory holding *left* / *right* image pairs")
    p.add_argument("--frames", type=int, default=16)
    _add_common(p)
    return parser


def cmd_run(args) -> int:
    cfg = _config(args)
    left, right = imgio.load_gray(args.left), imgio.load_gray(args.right)
    dmap, stats = run_frame(left, right, cfg)
    imgio.save_disparity(dmap, args.out, args.format)
    print(json.dumps(stats.to_dict(), sort_keys=True))
    return 0


def cmd_compare(args) -> int:
    base = _config(args)
    left, right = imgio.load_gray(args.left), imgio.load_gray(args.right)
    gt = imgio.load_ground_truth(args.gt, args.gt_convention)
    rows = []
    for mode in ("original", "interpolated"):
        dmap, stats = run_frame(left, right, base.replace(mode=mode))
        rep = evaluate(dmap, gt, args.thresh)
        rows.append({"mode": mode, "eq1_error": rep.eq1_error,
                     "bad_pixel_error": rep.bad_pixel_error, "density": rep.density,
                     "latency": stats.latency})
    if args.json:
        print(json.dumps(rows, sort_keys=True))
    else:
        print(f"{'mode':<14}{'eq1_error':>12}{'bad_pixel':>12}{'density':>10}{'latency_s':>11}")
        for r in rows:
            print(f"{r['mode']:<14}{r['eq1_error']:>12.4%}{r['bad_pixel_error']:>12.4%}"
                  f"{r['density']:>10.3f}{r['latency']:>11.3f}")
    return 0


def cmd_eval(args) -> int:
    est = imgio.load_ground_truth(args.estimate, args.est_convention)
    gt = imgio.load_ground_truth(args.gt, args.gt_convention)
    rep = evaluate(est, gt, args.thresh)
    print(rep.to_text())
    print(rep.to_json())
    return 0


def cmd_bench(args) -> int:
    pairs = imgio.find_pairs(args.directory)
    if not pairs:
        raise FileNotFoundError(f"no left/right image pairs in {args.directory}")
    if args.frames < 1:
        raise ValueError("--frames must be >= 1")
    images = [(imgio.load_gray(l), imgio.load_gray(r)) for l, r in pairs]
    frames = list(itertools.islice(itertools.cycle(images), args.frames))
    cfg = _config(args)
    _, serial = run_stream(frames, cfg.replace(staging="serial"))
    _, staged = run_stream(frames, cfg.replace(staging="staged"))
    ratio = staged.fps / serial.fps if len(frames) > 1 else 1.0
    print(json.dumps({
        "frames": len(frames),
        "serial_fps": serial.fps,
        "staged_fps": staged.fps,
        "ratio": ratio,
        "stage_times": serial.stage_times,
        "latency": serial.latency,
    }, sort_keys=True))
    return 0


COMMANDS = {"run": cmd_run, "compare": cmd_compare, "eval": cmd_eval, "bench": cmd_bench}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (OSError, ValueError) as exc:
        print(f"elasinterp {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
