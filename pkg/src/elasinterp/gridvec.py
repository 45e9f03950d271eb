"""Per macro-cell shortlists of candidate disparities."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .support import SupportGrid


@dataclass
class GridVector:
    cell_size: int
    candidates: np.ndarray   # (mh, mw, k) int16, ascending, padded with -1
    counts: np.ndarray       # (mh, mw) number of valid entries

    def at(self, u: int, v: int) -> list[int]:
        my, mx = v // self.cell_size, u // self.cell_size
        return self.candidates[my, mx, : self.counts[my, mx]].tolist()


def build_grid_vector(grid: SupportGrid, shape, cell_size: int = 20, k: int = 20,
                      d_max: int = 127, c_const: int = 60) -> GridVector:
    """Pool MATCHED supports from each macro-cell and its 8 neighbours.

    Every support ``d`` votes for ``d-1, d, d+1`` (clamped to the range). A
    cell keeps at most ``k`` candidates, preferring the most-voted values and
    then the smaller disparity. Cells with nothing to pool get ``c_const``.
    """
    return grid_vector_from_points(grid.matched_points(), shape, cell_size, k, d_max, c_const)


def grid_vector_from_points(points, shape, cell_size: int = 20, k: int = 20,
                            d_max: int = 127, c_const: int = 60) -> GridVector:
    """Same pooling for an ``(n, 3)`` array of ``(u, v, d)`` supports, in any order."""
    h, w = shape
    mh, mw = -(-h // cell_size), -(-w // cell_size)
    nd = d_max + 1
    hist = np.zeros((mh + 2, mw + 2, nd), np.int64)
    pts = np.asarray(points, np.int64).reshape(-1, 3)
    if len(pts):
        np.add.at(hist, (pts[:, 1] // cell_size + 1, pts[:, 0] // cell_size + 1,
                         np.clip(pts[:, 2], 0, d_max)), 1)
    pooled = sum(hist[1 + dy:mh + 1 + dy, 1 + dx:mw + 1 + dx]
                 for dy in (-1, 0, 1) for dx in (-1, 0, 1))
    votes = pooled.copy()
    votes[..., 1:] += pooled[..., :-1]
    votes[..., :-1] += pooled[..., 1:]

    # rank: more votes first, then smaller disparity
    key = votes * nd + (nd - 1 - np.arange(nd))
    order = np.argsort(-key, axis=-1, kind="stable")[..., :k]
    chosen = np.take_along_axis(votes, order, axis=-1) > 0
    cand = np.where(chosen, order, np.iinfo(np.int16).max)
    cand = np.sort(cand, axis=-1)
    counts = chosen.sum(axis=-1)
    cand = np.where(np.arange(cand.shape[-1]) < counts[..., None], cand, -1).astype(np.int16)
    empty = counts == 0
    cand[empty, 0] = c_const
    counts[empty] = 1
    if cand.shape[-1] < k:
        pad = np.full((mh, mw, k - cand.shape[-1]), -1, np.int16)
        cand = np.concatenate([cand, pad], axis=-1)
    return GridVector(cell_size, cand, counts.astype(np.int64))
