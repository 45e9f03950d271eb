"""Sparse support-point extraction on a regular lattice, and its filtering."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import IntEnum

import numba
import numpy as np

from .descriptor import MARGIN, as_field

EMPTY_D = -1


class Provenance(IntEnum):
    EMPTY = 0
    MATCHED = 1
    H_INTERP = 2
    V_INTERP = 3
    CONST = 4


@dataclass
class SupportGrid:
    """Lattice of support disparities.

    Cell ``[j, i]`` sits at pixel ``(origin[0] + i*step, origin[1] + j*step)``.
    ``disp`` is ``-1`` wherever ``prov`` is EMPTY.
    """

    step: int
    origin: tuple[int, int]
    disp: np.ndarray
    prov: np.ndarray

    @property
    def gw(self) -> int:
        return self.disp.shape[1]

    @property
    def gh(self) -> int:
        return self.disp.shape[0]

    def pixel(self, i: int, j: int) -> tuple[int, int]:
        return self.origin[0] + i * self.step, self.origin[1] + j * self.step

    def matched_points(self) -> np.ndarray:
        """``(n, 3)`` int array of ``(u, v, d)`` for MATCHED cells, row-major."""
        jj, ii = np.nonzero(self.prov == Provenance.MATCHED)
        u = self.origin[0] + ii * self.step
        v = self.origin[1] + jj * self.step
        return np.stack([u, v, self.disp[jj, ii]], axis=1).astype(np.int64)

    def count(self, prov: Provenance) -> int:
        return int(np.count_nonzero(self.prov == prov))

    def copy(self) -> "SupportGrid":
        return replace(self, disp=self.disp.copy(), prov=self.prov.copy())

    @classmethod
    def from_disparities(cls, disp, step: int = 5, origin=(MARGIN, MARGIN)) -> "SupportGrid":
        """Build a sparse grid from an array using -1 for empty cells."""
        disp = np.asarray(disp, dtype=np.int16)
        prov = np.where(disp >= 0, Provenance.MATCHED, Provenance.EMPTY).astype(np.uint8)
        return cls(step, tuple(origin), np.where(disp >= 0, disp, EMPTY_D).astype(np.int16), prov)


@dataclass(frozen=True)
class MatchParams:
    d_max: int = 127
    tau_ratio: float = 0.9
    step: int = 5

    def __post_init__(self):
        if not 0 <= self.d_max <= 255:
            raise ValueError("d_max must lie in [0, 255]")
        if self.step < 1:
            raise ValueError("lattice step must be >= 1")
        if not 0 < self.tau_ratio < 1:
            raise ValueError("tau_ratio must lie in (0, 1)")


@dataclass(frozen=True)
class FilterParams:
    window: int = 2
    d_tol: int = 5
    n_min: int = 2


def lattice_shape(width: int, height: int, step: int, origin=(MARGIN, MARGIN)) -> tuple[int, int]:
    """``(gh, gw)`` of the lattice covering the descriptor-valid region."""
    gw = (width - 1 - MARGIN - origin[0]) // step + 1
    gh = (height - 1 - MARGIN - origin[1]) // step + 1
    return gh, gw


@numba.njit(cache=True, nogil=True)
def _l1(a, b):
    s = 0
    for k in range(a.shape[0]):
        x = np.int32(a[k]) - np.int32(b[k])
        s += x if x >= 0 else -x
    return s


@numba.njit(cache=True, nogil=True)
def _match_kernel(fl, fr, d_max, tau, step, u0, v0, gh, gw, out):
    w = fl.shape[1]
    costs = np.empty(d_max + 1, np.int64)
    for j in range(gh):
        v = v0 + j * step
        for i in range(gw):
            u = u0 + i * step
            out[j, i] = -1
            n = min(d_max, u - 2) + 1
            best = 0
            for d in range(n):
                costs[d] = _l1(fl[v, u], fr[v, u - d])
                if costs[d] < costs[best]:
                    best = d
            second = -1
            for d in range(n):
                if abs(d - best) >= 2 and (second < 0 or costs[d] < second):
                    second = costs[d]
            if second >= 0 and costs[best] > tau * second:
                continue
            # right-to-left re-match from the chosen right pixel
            ur = u - best
            nb = min(d_max, w - 3 - ur) + 1
            bd = 0
            bc = _l1(fr[v, ur], fl[v, ur])
            for d in range(1, nb):
                c = _l1(fr[v, ur], fl[v, ur + d])
                if c < bc:
                    bc = c
                    bd = d
            if abs(bd - best) <= 1:
                out[j, i] = best


def match_support(desc_left, desc_right, params: MatchParams = MatchParams(),
                  origin=(MARGIN, MARGIN)) -> SupportGrid:
    """Match every lattice point over ``[0, d_max]`` by descriptor L1 cost.

    A point is accepted when its best cost passes the ratio test against the
    best candidate at least two disparities away, and re-matching from the
    right pixel lands within one pixel of the start. Ties go to the smaller
    disparity. Rejected points are EMPTY.
    """
    fl = as_field(desc_left).data
    fr = as_field(desc_right).data
    if fl.shape != fr.shape:
        raise ValueError("left and right descriptors differ in shape")
    h, w = fl.shape[:2]
    gh, gw = lattice_shape(w, h, params.step, origin)
    disp = np.empty((gh, gw), np.int16)
    _match_kernel(fl, fr, params.d_max, params.tau_ratio, params.step,
                  origin[0], origin[1], gh, gw, disp)
    return SupportGrid.from_disparities(disp, params.step, origin)


@numba.njit(cache=True, nogil=True)
def _implausible_kernel(src, window, d_tol, n_min, out):
    gh, gw = src.shape
    for j in range(gh):
        for i in range(gw):
            d = src[j, i]
            out[j, i] = d
            if d < 0:
                continue
            n = 0
            for jj in range(max(0, j - window), min(gh, j + window + 1)):
                for ii in range(max(0, i - window), min(gw, i + window + 1)):
                    if jj == j and ii == i:
                        continue
                    e = src[jj, ii]
                    if e >= 0 and abs(e - d) <= d_tol:
                        n += 1
            if n < n_min:
                out[j, i] = -1


@numba.njit(cache=True, nogil=True)
def _nearest(src, j, i, dj, di, window):
    gh, gw = src.shape
    for k in range(1, window + 1):
        jj = j + dj * k
        ii = i + di * k
        if jj < 0 or jj >= gh or ii < 0 or ii >= gw:
            return -1
        if src[jj, ii] >= 0:
            return src[jj, ii]
    return -1


@numba.njit(cache=True, nogil=True)
def _redundant_kernel(work, window):
    gh, gw = work.shape
    for j in range(gh):
        for i in range(gw):
            d = work[j, i]
            if d < 0:
                continue
            row = _nearest(work, j, i, 0, -1, window) == d and _nearest(work, j, i, 0, 1, window) == d
            col = _nearest(work, j, i, -1, 0, window) == d and _nearest(work, j, i, 1, 0, window) == d
            if row or col:
                work[j, i] = -1


def filter_supports(grid: SupportGrid, params: FilterParams = FilterParams(),
                    redundant: bool = True) -> SupportGrid:
    """Remove implausible, then redundant, MATCHED cells.

    Implausible: fewer than ``n_min`` other matched cells within ``window``
    cells (Chebyshev) agree to within ``d_tol``; judged on a snapshot of the
    input. Redundant: the nearest survivors on both sides along the row, or
    along the column, within ``window`` cells carry exactly the same
    disparity. Redundancy is decided in place in row-major order, so a cell
    removed earlier no longer counts as a neighbour; this keeps a thinned
    subset of a constant-disparity region instead of erasing it.
    """
    src = np.where(grid.prov == Provenance.MATCHED, grid.disp, EMPTY_D).astype(np.int16)
    mid = np.empty_like(src)
    _implausible_kernel(src, params.window, params.d_tol, params.n_min, mid)
    if redundant:
        _redundant_kernel(mid, params.window)
    return SupportGrid.from_disparities(mid, grid.step, grid.origin)


def mirror_to_right(grid: SupportGrid, width: int) -> SupportGrid:
    """Re-home MATCHED supports into the right view's lattice.

    A support at ``(u, v, d)`` moves to ``u - d`` and is snapped to the
    nearest lattice column; on collisions the larger disparity (nearer
    surface) wins.
    """
    out = np.full_like(grid.disp, EMPTY_D)
    pts = grid.matched_points()
    if len(pts):
        i = np.floor((pts[:, 0] - pts[:, 2] - grid.origin[0]) / grid.step + 0.5).astype(np.int64)
        j = (pts[:, 1] - grid.origin[1]) // grid.step
        keep = (i >= 0) & (i < grid.gw)
        np.maximum.at(out, (j[keep], i[keep]), pts[keep, 2].astype(np.int16))
    return SupportGrid.from_disparities(out, grid.step, grid.origin)
