"""End-to-end frame processing in the original and interpolated modes.

A frame moves through five stage functions. ``serial`` runs them back to
back for each frame; ``staged`` gives every stage its own worker thread and
links neighbouring stages with a two-slot queue, so stage ``k`` can work on
frame ``i + 1`` while stage ``k + 1`` still holds frame ``i``. The heavy
kernels release the GIL, which is what lets the stages overlap.
"""

from __future__ import annotations

import dataclasses
import logging
import queue
import threading
import time
from dataclasses import dataclass, field, fields

import numpy as np

from .dense import DenseParams, dense_match, gap_interpolate, lr_consistency, median_filter
from .descriptor import build_descriptor_field, sobel
from .gridvec import build_grid_vector
from .imgio import check_gray
from .interp import InterpParams, interpolate_grid
from .mesh import DegenerateTriangulation, delaunay_triangulate, regular_triangulate
from .support import FilterParams, MatchParams, filter_supports, match_support, mirror_to_right

log = logging.getLogger(__name__)

MODES = ("original", "interpolated")
STAGINGS = ("serial", "staged")
HANDOFF_DEPTH = 2


@dataclass
class PipelineConfig:
    mode: str = "interpolated"
    staging: str = "serial"
    # support extraction
    d_max: int = 127
    tau_ratio: float = 0.9
    step: int = 5
    # filtering
    filter_window: int = 2
    d_tol: int = 5
    n_min: int = 2
    # interpolation
    s_delta: int = 50
    epsilon: int = 15
    c_const: int = 60
    # grid vector
    grid_cell: int = 20
    k_candidates: int = 20
    # dense matching and post-processing
    lambda_prior: float = 2.0
    delta_prior: int = 3
    t_prior: float = 10.0
    gap_max: int = 7
    lr_tol: int = 1

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.staging not in STAGINGS:
            raise ValueError(f"staging must be one of {STAGINGS}, got {self.staging!r}")
        self.match_params()
        self.dense_params()
        self.interp_params().validate(self.step, self.d_max)
        if self.k_candidates < 1 or self.grid_cell < 1:
            raise ValueError("grid vector needs k_candidates >= 1 and grid_cell >= 1")

    def match_params(self) -> MatchParams:
        return MatchParams(self.d_max, self.tau_ratio, self.step)

    def filter_params(self) -> FilterParams:
        return FilterParams(self.filter_window, self.d_tol, self.n_min)

    def interp_params(self) -> InterpParams:
        return InterpParams(self.s_delta, self.epsilon, self.c_const)

    def dense_params(self) -> DenseParams:
        return DenseParams(self.lambda_prior, self.delta_prior, self.t_prior,
                           self.gap_max, self.lr_tol)

    def replace(self, **overrides) -> "PipelineConfig":
        return dataclasses.replace(self, **{k: v for k, v in overrides.items() if v is not None})

    @classmethod
    def from_text(cls, text: str, **overrides) -> "PipelineConfig":
        """Parse flat ``key = value`` lines; ``#`` starts a comment."""
        types = {f.name: f.type for f in fields(cls)}
        values = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"config line {lineno}: expected key=value, got {line!r}")
            key, raw = (s.strip() for s in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in types:
                raise ValueError(f"config line {lineno}: unknown key {key!r}")
            kind = {"int": int, "float": float}.get(types[key], str)
            values[key] = kind(raw)
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    @classmethod
    def from_file(cls, path, **overrides) -> "PipelineConfig":
        with open(path) as f:
            return cls.from_text(f.read(), **overrides)


@dataclass
class FrameStats:
    stage_times: dict = field(default_factory=dict)  # seconds per stage, mean over frames
    latency: float = 0.0                              # mean end-to-end seconds per frame
    fps: float = 0.0
    frames: int = 0
    wall_time: float = 0.0
    warnings: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


# ---------------------------------------------------------------------------
# stages; each takes and returns the per-frame context dict
# ---------------------------------------------------------------------------

def _stage_descriptor(ctx):
    ctx["desc_left"] = build_descriptor_field(sobel(ctx.pop("left")))
    ctx["desc_right"] = build_descriptor_field(sobel(ctx.pop("right")))
    return ctx


def _stage_support(ctx):
    cfg = ctx["cfg"]
    raw = match_support(ctx["desc_left"], ctx["desc_right"], cfg.match_params())
    ctx["grid_left"] = filter_supports(raw, cfg.filter_params())
    ctx["grid_right"] = mirror_to_right(ctx["grid_left"], ctx["shape"][1])
    return ctx


def _prior_for(grid, cfg, shape, warnings, side):
    if cfg.mode == "interpolated":
        dense_grid = interpolate_grid(grid, cfg.interp_params())
        return regular_triangulate(dense_grid, shape=shape).prior_map(cfg.d_max)
    try:
        return delaunay_triangulate(grid.matched_points(), shape=shape).prior_map(cfg.d_max)
    except DegenerateTriangulation as exc:
        warnings.append(f"{side}: degenerate triangulation ({exc}); constant prior used")
        log.warning("%s view: %s; falling back to constant prior", side, exc)
        return np.full(shape, float(cfg.c_const))


def _stage_mesh(ctx):
    cfg, shape = ctx["cfg"], ctx["shape"]
    for side in ("left", "right"):
        grid = ctx[f"grid_{side}"]
        ctx[f"prior_{side}"] = _prior_for(grid, cfg, shape, ctx["warnings"], side)
        ctx[f"gv_{side}"] = build_grid_vector(grid, shape, cfg.grid_cell, cfg.k_candidates,
                                              cfg.d_max, cfg.c_const)
    return ctx


def _stage_dense_left(ctx):
    cfg = ctx["cfg"]
    ctx["disp_left"] = dense_match(ctx["desc_left"], ctx["desc_right"], ctx.pop("prior_left"),
                                   ctx["gv_left"], cfg.dense_params(), cfg.d_max, direction=-1)
    return ctx


def _stage_dense_right(ctx):
    cfg = ctx["cfg"]
    ctx["disp_right"] = dense_match(ctx.pop("desc_right"), ctx.pop("desc_left"),
                                    ctx.pop("prior_right"), ctx["gv_right"],
                                    cfg.dense_params(), cfg.d_max, direction=1)
    return ctx


def _stage_postprocess(ctx):
    p = ctx["cfg"].dense_params()
    d = lr_consistency(ctx.pop("disp_left"), ctx.pop("disp_right"), p.lr_tol)
    ctx["result"] = median_filter(gap_interpolate(d, p.gap_max))
    return ctx


STAGES = (
    ("descriptor", _stage_descriptor),
    ("support", _stage_support),
    ("mesh", _stage_mesh),
    ("dense_left", _stage_dense_left),
    ("dense_right", _stage_dense_right),
    ("postprocess", _stage_postprocess),
)


def _new_context(left, right, cfg):
    left, right = check_gray(left), check_gray(right)
    if left.shape != right.shape:
        raise ValueError(f"stereo pair dimensions differ: {left.shape} vs {right.shape}")
    return {"left": left, "right": right, "cfg": cfg, "shape": left.shape,
            "warnings": [], "times": {}, "t_start": time.perf_counter()}


def _run_stage(name, fn, ctx):
    t0 = time.perf_counter()
    ctx = fn(ctx)
    ctx["times"][name] = time.perf_counter() - t0
    return ctx


def _summarise(contexts, wall):
    n = len(contexts)
    stats = FrameStats(frames=n, wall_time=wall, fps=n / wall if wall > 0 else 0.0)
    if n:
        stats.stage_times = {name: sum(c["times"][name] for c in contexts) / n for name, _ in STAGES}
        stats.latency = sum(c["t_end"] - c["t_start"] for c in contexts) / n
        stats.warnings = [w for c in contexts for w in c["warnings"]]
    return stats


def run_frame(left: np.ndarray, right: np.ndarray, cfg: PipelineConfig | None = None):
    """Disparity map of the left view and the timing record for one pair."""
    cfg = cfg or PipelineConfig()
    outputs, stats = run_stream([(left, right)], cfg)
    return outputs[0], stats


def _serial(pairs, cfg):
    done = []
    for left, right in pairs:
        ctx = _new_context(left, right, cfg)
        for name, fn in STAGES:
            ctx = _run_stage(name, fn, ctx)
        ctx["t_end"] = time.perf_counter()
        done.append(ctx)
    return done


_STOP = object()


def _staged(pairs, cfg):
    queues = [queue.Queue(maxsize=HANDOFF_DEPTH) for _ in range(len(STAGES) + 1)]
    failure = []

    def feeder():
        try:
            for left, right in pairs:
                queues[0].put(_new_context(left, right, cfg))
        except BaseException as exc:  # surfaced to the caller below
            failure.append(exc)
        queues[0].put(_STOP)

    def worker(k, name, fn):
        src, dst = queues[k], queues[k + 1]
        while True:
            ctx = src.get()
            if ctx is _STOP:
                dst.put(_STOP)
                return
            if not failure:
                try:
                    ctx = _run_stage(name, fn, ctx)
                except BaseException as exc:
                    failure.append(exc)
                    continue
                dst.put(ctx)

    threads = [threading.Thread(target=feeder, name="feed", daemon=True)]
    threads += [threading.Thread(target=worker, args=(k, name, fn), name=name, daemon=True)
                for k, (name, fn) in enumerate(STAGES)]
    for t in threads:
        t.start()
    done = []
    while True:
        ctx = queues[-1].get()
        if ctx is _STOP:
            break
        ctx["t_end"] = time.perf_counter()
        done.append(ctx)
    for t in threads:
        t.join()
    if failure:
        raise failure[0]
    return done


def run_stream(pairs, cfg: PipelineConfig | None = None):
    """Process a sequence of ``(left, right)`` pairs; returns ``(maps, stats)``.

    Maps come back in input order and do not depend on ``cfg.staging``.
    """
    cfg = cfg or PipelineConfig()
    pairs = list(pairs)
    t0 = time.perf_counter()
    done = _staged(pairs, cfg) if cfg.staging == "staged" else _serial(pairs, cfg)
    stats = _summarise(done, time.perf_counter() - t0)
    return [c["result"] for c in done], stats
