"""Fill every vacant lattice cell so the support grid becomes dense.

Each EMPTY cell looks for the nearest MATCHED cell on each side along its
row; if both exist within ``s_delta`` pixels the pair decides the value.
Otherwise the same search runs along the column, and failing that the cell
receives ``c_const``. A pair within ``epsilon`` of each other is averaged,
otherwise the smaller (farther) disparity is taken. Only MATCHED cells are
ever read, so the result does not depend on the order cells are visited.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .support import Provenance, SupportGrid

_MATCHED = int(Provenance.MATCHED)
_H = int(Provenance.H_INTERP)
_V = int(Provenance.V_INTERP)
_C = int(Provenance.CONST)


@dataclass(frozen=True)
class InterpParams:
    s_delta: int = 50
    epsilon: int = 15
    c_const: int = 60

    def validate(self, step: int, d_max: int) -> None:
        if self.s_delta < step:
            raise ValueError(f"s_delta={self.s_delta} cannot reach a neighbour at step {step}")
        if not 0 <= self.c_const <= d_max:
            raise ValueError(f"c_const={self.c_const} outside [0, {d_max}]")


@numba.njit(cache=True, nogil=True)
def _pair_value(a, b, eps):
    if abs(a - b) <= eps:
        return (a + b + 1) // 2
    return min(a, b)


@numba.njit(cache=True, nogil=True)
def _interp_kernel(disp, prov, reach, eps, c_const, out_d, out_p):
    gh, gw = disp.shape
    for j in range(gh):
        for i in range(gw):
            if prov[j, i] == _MATCHED:
                out_d[j, i] = disp[j, i]
                out_p[j, i] = _MATCHED
                continue
            a = -1
            b = -1
            for k in range(1, reach + 1):
                if i - k < 0:
                    break
                if prov[j, i - k] == _MATCHED:
                    a = disp[j, i - k]
                    break
            if a >= 0:
                for k in range(1, reach + 1):
                    if i + k >= gw:
                        break
                    if prov[j, i + k] == _MATCHED:
                        b = disp[j, i + k]
                        break
            if a >= 0 and b >= 0:
                out_d[j, i] = _pair_value(a, b, eps)
                out_p[j, i] = _H
                continue
            a = -1
            b = -1
            for k in range(1, reach + 1):
                if j - k < 0:
                    break
                if prov[j - k, i] == _MATCHED:
                    a = disp[j - k, i]
                    break
            if a >= 0:
                for k in range(1, reach + 1):
                    if j + k >= gh:
                        break
                    if prov[j + k, i] == _MATCHED:
                        b = disp[j + k, i]
                        break
            if a >= 0 and b >= 0:
                out_d[j, i] = _pair_value(a, b, eps)
                out_p[j, i] = _V
            else:
                out_d[j, i] = c_const
                out_p[j, i] = _C


def search_reach(s_delta: int, step: int) -> int:
    """Lattice neighbours per side strictly closer than ``s_delta`` pixels."""
    return max(0, (s_delta - 1) // step)


def interpolate_grid(grid: SupportGrid, params: InterpParams = InterpParams()) -> SupportGrid:
    out_d = np.empty_like(grid.disp)
    out_p = np.empty_like(grid.prov)
    _interp_kernel(grid.disp, grid.prov, search_reach(params.s_delta, grid.step),
                   params.epsilon, params.c_const, out_d, out_p)
    return SupportGrid(grid.step, grid.origin, out_d, out_p)
