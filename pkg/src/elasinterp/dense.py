"""Prior-guided dense matching and disparity post-processing.

The per-pixel energy is a surrogate: descriptor L1 distance plus a
truncated-linear pull toward the plane prior,

    E(d) = |desc_ref(q) - desc_other(q -/+ d)|_1 + lambda * min(|d - d0|, t_prior)

evaluated only on the prior band around ``d0`` and the grid-vector shortlist.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .descriptor import MARGIN, as_field
from .gridvec import GridVector
from .imgio import INVALID
from .mesh import TriangleMesh


@dataclass(frozen=True)
class DenseParams:
    lambda_prior: float = 2.0
    delta_prior: int = 3
    t_prior: float = 10.0
    gap_max: int = 7
    lr_tol: int = 1

    def __post_init__(self):
        if min(self.lambda_prior, self.t_prior, self.gap_max, self.lr_tol) < 0:
            raise ValueError("dense parameters must be non-negative")
        if self.delta_prior < 1:
            raise ValueError("delta_prior must be >= 1")


@numba.njit(cache=True, nogil=True)
def _dense_kernel(fl, fr, prior, gv_cand, gv_count, cell, d_max, lam, delta, t_prior,
                  direction, out):
    h, w = out.shape
    nd = d_max + 1
    seen = np.full(nd, -1, np.int64)
    cand = np.empty(nd, np.int64)
    for v in range(h):
        for u in range(w):
            out[v, u] = -1
    for v in range(MARGIN, h - MARGIN):
        for u in range(MARGIN, w - MARGIN):
            stamp = v * w + u
            # disparities whose matching pixel stays inside the descriptor-valid region
            if direction < 0:
                lim = min(d_max, u - MARGIN)
            else:
                lim = min(d_max, w - 1 - MARGIN - u)
            n = 0
            d0 = prior[v, u]
            has_prior = not np.isnan(d0)
            if has_prior:
                r = int(np.floor(d0 + 0.5))
                for d in range(max(0, r - delta), min(lim, r + delta) + 1):
                    if seen[d] != stamp:
                        seen[d] = stamp
                        cand[n] = d
                        n += 1
            my = v // cell
            mx = u // cell
            for k in range(gv_count[my, mx]):
                d = gv_cand[my, mx, k]
                if 0 <= d <= lim and seen[d] != stamp:
                    seen[d] = stamp
                    cand[n] = d
                    n += 1
            best = -1
            best_e = np.inf
            for c in range(n):
                d = cand[c]
                uo = u + direction * d
                s = 0
                for b in range(fl.shape[2]):
                    x = np.int32(fl[v, u, b]) - np.int32(fr[v, uo, b])
                    s += x if x >= 0 else -x
                e = float(s)
                if has_prior:
                    e += lam * min(abs(d - d0), t_prior)
                if e < best_e or (e == best_e and d < best):
                    best_e = e
                    best = d
            out[v, u] = best


def dense_match(desc_ref, desc_other, prior, gv: GridVector, params: DenseParams = DenseParams(),
                d_max: int = 127, direction: int = -1) -> np.ndarray:
    """Dense disparity for the reference view.

    ``prior`` is a :class:`TriangleMesh` or a precomputed prior map (NaN where
    uncovered). ``direction=-1`` matches a left reference against the right
    view (``u - d``); ``+1`` matches a right reference against the left view.
    """
    fl = as_field(desc_ref).data
    fr = as_field(desc_other).data
    h, w = fl.shape[:2]
    if isinstance(prior, TriangleMesh):
        prior = prior.prior_map(d_max)
    prior = np.ascontiguousarray(prior, dtype=np.float64)
    if prior.shape != (h, w) or fr.shape != fl.shape:
        raise ValueError("descriptor and prior dimensions disagree")
    out = np.empty((h, w), np.int16)
    _dense_kernel(fl, fr, prior, gv.candidates, gv.counts, gv.cell_size, d_max,
                  float(params.lambda_prior), int(params.delta_prior), float(params.t_prior),
                  int(direction), out)
    return out


def lr_consistency(left: np.ndarray, right: np.ndarray, lr_tol: int = 1) -> np.ndarray:
    """Keep ``left(q)`` only where the right map at ``q - left(q)`` agrees within ``lr_tol``."""
    h, w = left.shape
    uu = np.arange(w)[None, :] - left.astype(np.int64)
    valid = (left != INVALID) & (uu >= 0) & (uu < w)
    rv = right[np.arange(h)[:, None], np.clip(uu, 0, w - 1)]
    keep = valid & (rv != INVALID) & (np.abs(left.astype(np.int64) - rv) <= lr_tol)
    return np.where(keep, left, INVALID).astype(left.dtype)


@numba.njit(cache=True, nogil=True)
def _gap_kernel(src, gap_max, out):
    h, w = src.shape
    for v in range(h):
        u = 0
        while u < w:
            if src[v, u] != -1:
                u += 1
                continue
            start = u
            while u < w and src[v, u] == -1:
                u += 1
            if start > 0 and u < w and u - start <= gap_max:
                fill = min(src[v, start - 1], src[v, u])
                for x in range(start, u):
                    out[v, x] = fill


def gap_interpolate(dmap: np.ndarray, gap_max: int = 7) -> np.ndarray:
    """Fill short invalid runs inside a row with the smaller flanking disparity."""
    out = dmap.copy()
    _gap_kernel(dmap, gap_max, out)
    return out


@numba.njit(cache=True, nogil=True)
def _median_kernel(src, out):
    h, w = src.shape
    buf = np.empty(9, np.int64)
    for v in range(h):
        for u in range(w):
            if src[v, u] == -1:
                out[v, u] = -1
                continue
            n = 0
            for y in range(max(0, v - 1), min(h, v + 2)):
                for x in range(max(0, u - 1), min(w, u + 2)):
                    if src[y, x] != -1:
                        buf[n] = src[y, x]
                        n += 1
            # insertion sort of at most nine values
            for a in range(1, n):
                t = buf[a]
                b = a - 1
                while b >= 0 and buf[b] > t:
                    buf[b + 1] = buf[b]
                    b -= 1
                buf[b + 1] = t
            out[v, u] = buf[(n - 1) // 2]


def median_filter(dmap: np.ndarray) -> np.ndarray:
    """3x3 median over valid neighbours; invalid pixels stay invalid."""
    out = np.empty_like(dmap)
    _median_kernel(dmap, out)
    return out
