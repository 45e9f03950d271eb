"""Piecewise-planar disparity priors over triangulated support points."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numba
import numpy as np

from .support import SupportGrid, Provenance


class DegenerateTriangulation(ValueError):
    """Too few, or only collinear, support points to triangulate."""


@dataclass
class TriangleMesh:
    vertices: np.ndarray            # (n, 3) float64: u, v, d
    triangles: np.ndarray           # (t, 3) int64 vertex indices, counter-clockwise in (u, v)
    planes: np.ndarray              # (t, 3) float64: d = a*u + b*v + c
    regular: Optional[tuple] = None  # (step, u0, v0, gw, gh) for lattice meshes
    shape: Optional[tuple] = None    # (height, width) of the image the mesh covers
    _raster: Optional[np.ndarray] = field(default=None, repr=False)

    def triangle_raster(self) -> np.ndarray:
        """Per-pixel containing-triangle index, -1 outside the mesh.

        Pixels on an edge shared by two triangles go to the lower index.
        """
        if self.shape is None:
            raise ValueError("mesh has no image shape; cannot rasterise")
        if self._raster is None:
            h, w = self.shape
            if self.regular is not None:
                self._raster = _regular_raster(self.regular, w, h)
            else:
                self._raster = np.full((h, w), -1, np.int64)
                _rasterize(self.vertices[:, :2], self.triangles, self._raster)
        return self._raster

    def prior_map(self, d_max: int) -> np.ndarray:
        """Prior disparity for every pixel (NaN outside coverage), clamped to [0, d_max]."""
        h, w = self.shape
        vv, uu = np.mgrid[0:h, 0:w]
        d = self.evaluate(self.triangle_raster(), uu, vv)
        return np.clip(d, 0.0, float(d_max))

    def evaluate(self, tid, u, v) -> np.ndarray:
        """Linear interpolation of vertex disparities inside triangles ``tid`` (-1 gives NaN).

        Barycentric weights are used rather than the plane coefficients so a
        query on a vertex returns that vertex's disparity exactly.
        """
        tid = np.asarray(tid)
        inside = tid >= 0
        tri = self.triangles[np.where(inside, tid, 0)]
        a, b, c = (self.vertices[tri[..., k]] for k in range(3))
        u = np.asarray(u, np.float64)
        v = np.asarray(v, np.float64)

        def cross(p, q, x, y):
            return (q[..., 0] - p[..., 0]) * (y - p[..., 1]) - (q[..., 1] - p[..., 1]) * (x - p[..., 0])

        area = cross(a, b, c[..., 0], c[..., 1])
        wa = cross(b, c, u, v) / area
        wb = cross(c, a, u, v) / area
        wc = cross(a, b, u, v) / area
        d = wa * a[..., 2] + wb * b[..., 2] + wc * c[..., 2]
        return np.where(inside, d, np.nan)


def _solve_planes(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    if len(triangles) == 0:
        return np.zeros((0, 3))
    p = vertices[triangles]                      # (t, 3, 3)
    a = np.concatenate([p[..., :2], np.ones(p.shape[:2] + (1,))], axis=-1)
    return np.linalg.solve(a, p[..., 2:3])[..., 0]


def regular_triangulate(grid: SupportGrid, shape=None) -> TriangleMesh:
    """Split each lattice square along its top-left to bottom-right diagonal."""
    gh, gw = grid.gh, grid.gw
    if gh < 2 or gw < 2:
        raise DegenerateTriangulation(f"lattice {gw}x{gh} is smaller than 2x2")
    if np.any(grid.prov == Provenance.EMPTY):
        raise ValueError("regular triangulation needs a dense (interpolated) grid")
    jj, ii = np.mgrid[0:gh, 0:gw]
    verts = np.stack([grid.origin[0] + ii * grid.step, grid.origin[1] + jj * grid.step,
                      grid.disp], axis=-1).reshape(-1, 3).astype(np.float64)
    idx = np.arange(gh * gw).reshape(gh, gw)
    tl, tr = idx[:-1, :-1].ravel(), idx[:-1, 1:].ravel()
    bl, br = idx[1:, :-1].ravel(), idx[1:, 1:].ravel()
    tris = np.empty((2 * tl.size, 3), np.int64)
    tris[0::2] = np.stack([tl, tr, br], axis=1)
    tris[1::2] = np.stack([tl, br, bl], axis=1)
    planes = _solve_planes(verts, tris)
    return TriangleMesh(verts, tris, planes,
                        regular=(grid.step, grid.origin[0], grid.origin[1], gw, gh), shape=shape)


def _regular_locate(regular, u, v):
    step, u0, v0, gw, gh = regular
    fu = (np.asarray(u, np.float64) - u0) / step
    fv = (np.asarray(v, np.float64) - v0) / step
    inside = (fu >= 0) & (fv >= 0) & (fu <= gw - 1) & (fv <= gh - 1)
    i = np.clip(np.floor(fu), 0, gw - 2).astype(np.int64)
    j = np.clip(np.floor(fv), 0, gh - 2).astype(np.int64)
    upper = (fu - i) >= (fv - j)
    tid = 2 * (j * (gw - 1) + i) + np.where(upper, 0, 1)
    return np.where(inside, tid, -1)


def _regular_raster(regular, w, h):
    vv, uu = np.mgrid[0:h, 0:w]
    return _regular_locate(regular, uu, vv)


@numba.njit(cache=True, nogil=True)
def _rasterize(xy, tris, out):
    h, w = out.shape
    for t in range(tris.shape[0] - 1, -1, -1):
        ax, ay = xy[tris[t, 0], 0], xy[tris[t, 0], 1]
        bx, by = xy[tris[t, 1], 0], xy[tris[t, 1], 1]
        cx, cy = xy[tris[t, 2], 0], xy[tris[t, 2], 1]
        area = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
        if area == 0:
            continue
        s = 1.0 if area > 0 else -1.0
        u_lo = max(0, int(math.ceil(min(ax, bx, cx))))
        u_hi = min(w - 1, int(math.floor(max(ax, bx, cx))))
        v_lo = max(0, int(math.ceil(min(ay, by, cy))))
        v_hi = min(h - 1, int(math.floor(max(ay, by, cy))))
        for v in range(v_lo, v_hi + 1):
            for u in range(u_lo, u_hi + 1):
                e0 = s * ((bx - ax) * (v - ay) - (by - ay) * (u - ax))
                e1 = s * ((cx - bx) * (v - by) - (cy - by) * (u - bx))
                e2 = s * ((ax - cx) * (v - cy) - (ay - cy) * (u - cx))
                if e0 >= 0 and e1 >= 0 and e2 >= 0:
                    out[v, u] = t


def prior_disparity(mesh: TriangleMesh, u, v, d_max: int = 255) -> Optional[float]:
    """Plane prior at pixel ``(u, v)``; ``None`` outside the mesh."""
    if mesh.regular is not None:
        t = int(_regular_locate(mesh.regular, u, v))
    else:
        raster = mesh.triangle_raster()
        h, w = raster.shape
        if not (0 <= v < h and 0 <= u < w):
            return None
        t = int(raster[v, u])
    if t < 0:
        return None
    return float(min(max(mesh.evaluate(t, u, v), 0.0), float(d_max)))


# ---------------------------------------------------------------------------
# Bowyer-Watson
# ---------------------------------------------------------------------------

def _exact(x):
    if isinstance(x, (int, np.integer)):
        return int(x)
    x = float(x)
    return int(x) if x.is_integer() else Fraction(x)


def _orient(a, b, c):
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _incircle(a, b, c, p):
    """Positive when ``p`` is strictly inside the circumcircle of CCW ``abc``."""
    adx, ady = a[0] - p[0], a[1] - p[1]
    bdx, bdy = b[0] - p[0], b[1] - p[1]
    cdx, cdy = c[0] - p[0], c[1] - p[1]
    return ((adx * adx + ady * ady) * (bdx * cdy - cdx * bdy)
            + (bdx * bdx + bdy * bdy) * (cdx * ady - adx * cdy)
            + (cdx * cdx + cdy * cdy) * (adx * bdy - bdx * ady))


# Integer coordinates with a span below this keep every predicate term of the
# int64 kernel under 2**56, so its arithmetic is exact.
_INT_SPAN = 8192


@numba.njit(cache=True, nogil=True)
def _orient_i(xy, a, b, px, py):
    return (xy[b, 0] - xy[a, 0]) * (py - xy[a, 1]) - (xy[b, 1] - xy[a, 1]) * (px - xy[a, 0])


@numba.njit(cache=True, nogil=True)
def _conflict_i(xy, ghost, verts, t, px, py):
    """Does ``p`` invalidate triangle ``t``? Ghost triangles ``(a, b, inf)``
    conflict when ``p`` lies strictly beyond edge ``ab`` or inside it."""
    for k in range(3):
        if verts[t, k] == ghost:
            a, b = verts[t, (k + 1) % 3], verts[t, (k + 2) % 3]
            o = _orient_i(xy, a, b, px, py)
            if o != 0:
                return o > 0
            return (px - xy[a, 0]) * (px - xy[b, 0]) + (py - xy[a, 1]) * (py - xy[b, 1]) < 0
    a, b, c = verts[t, 0], verts[t, 1], verts[t, 2]
    adx, ady = xy[a, 0] - px, xy[a, 1] - py
    bdx, bdy = xy[b, 0] - px, xy[b, 1] - py
    cdx, cdy = xy[c, 0] - px, xy[c, 1] - py
    det = ((adx * adx + ady * ady) * (bdx * cdy - cdx * bdy)
           + (bdx * bdx + bdy * bdy) * (cdx * ady - adx * cdy)
           + (cdx * cdx + cdy * cdy) * (adx * bdy - bdx * ady))
    return det > 0


@numba.njit(cache=True, nogil=True)
def _bw_int(xy, order):
    """Bowyer-Watson over int64 points with one vertex at infinity.

    ``order`` lists the insertion sequence; its first three entries must be
    distinct and non-collinear. Returns the finite triangles, CCW.
    """
    n = xy.shape[0]
    ghost = n
    cap = 8 * n + 16
    verts = np.empty((cap, 3), np.int64)
    nbrs = np.empty((cap, 3), np.int64)
    alive = np.zeros(cap, np.bool_)
    mark = np.full(cap, -1, np.int64)
    by_start = np.full(n + 1, -1, np.int64)
    by_end = np.full(n + 1, -1, np.int64)

    a, b, c = order[0], order[1], order[2]
    if _orient_i(xy, a, b, xy[c, 0], xy[c, 1]) < 0:
        b, c = c, b
    verts[0] = (a, b, c)
    verts[1] = (c, b, ghost)
    verts[2] = (a, c, ghost)
    verts[3] = (b, a, ghost)
    for t in range(4):
        # each neighbour sits opposite the vertex it does not share
        for k in range(3):
            e0, e1 = verts[t, (k + 1) % 3], verts[t, (k + 2) % 3]
            for u in range(4):
                if u != t:
                    vs = verts[u]
                    if (vs[0] == e0 or vs[1] == e0 or vs[2] == e0) and \
                            (vs[0] == e1 or vs[1] == e1 or vs[2] == e1):
                        nbrs[t, k] = u
    alive[:4] = True
    ntri = 4
    last = 0

    for q in range(3, order.shape[0]):
        pi = order[q]
        px, py = xy[pi, 0], xy[pi, 1]
        t = last
        while True:
            moved = False
            for k in range(3):
                if _orient_i(xy, verts[t, (k + 1) % 3], verts[t, (k + 2) % 3], px, py) < 0:
                    t = nbrs[t, k]
                    moved = True
                    break
            if not moved or verts[t, 0] == ghost or verts[t, 1] == ghost or verts[t, 2] == ghost:
                break
        dup = False
        for k in range(3):
            vk = verts[t, k]
            if vk != ghost and xy[vk, 0] == px and xy[vk, 1] == py:
                dup = True
        if dup:
            continue

        cavity = [t]
        mark[t] = q
        head = 0
        while head < len(cavity):
            s = cavity[head]
            head += 1
            for k in range(3):
                nb = nbrs[s, k]
                if mark[nb] != q and _conflict_i(xy, ghost, verts, nb, px, py):
                    mark[nb] = q
                    cavity.append(nb)

        if ntri + 3 * len(cavity) > cap:
            cap = 2 * (ntri + 3 * len(cavity))
            verts2 = np.empty((cap, 3), np.int64)
            nbrs2 = np.empty((cap, 3), np.int64)
            alive2 = np.zeros(cap, np.bool_)
            mark2 = np.full(cap, -1, np.int64)
            verts2[:ntri] = verts[:ntri]
            nbrs2[:ntri] = nbrs[:ntri]
            alive2[:ntri] = alive[:ntri]
            mark2[:ntri] = mark[:ntri]
            verts, nbrs, alive, mark = verts2, nbrs2, alive2, mark2

        cavity.sort()
        first = ntri
        for s in cavity:
            alive[s] = False
            for k in range(3):
                nb = nbrs[s, k]
                if mark[nb] == q:
                    continue
                ea, eb = verts[s, (k + 1) % 3], verts[s, (k + 2) % 3]
                ti = ntri
                ntri += 1
                verts[ti] = (pi, ea, eb)
                nbrs[ti] = (nb, -1, -1)
                alive[ti] = True
                for m in range(3):
                    if nbrs[nb, m] == s:
                        nbrs[nb, m] = ti
                by_start[ea] = ti
                by_end[eb] = ti
        for ti in range(first, ntri):
            ea, eb = verts[ti, 1], verts[ti, 2]
            nbrs[ti, 1] = by_start[eb]
            nbrs[ti, 2] = by_end[ea]
            if last < first and ea != ghost and eb != ghost:
                last = ti

    count = 0
    for t in range(ntri):
        if alive[t] and verts[t, 0] != ghost and verts[t, 1] != ghost and verts[t, 2] != ghost:
            count += 1
    out = np.empty((count, 3), np.int64)
    count = 0
    for t in range(ntri):
        if alive[t] and verts[t, 0] != ghost and verts[t, 1] != ghost and verts[t, 2] != ghost:
            out[count] = verts[t]
            count += 1
    return out


def _int_start(xy: np.ndarray):
    """Insertion order starting with the first non-degenerate triple, or None."""
    n = len(xy)
    i1 = next((k for k in range(1, n) if (xy[k] != xy[0]).any()), None)
    if i1 is None:
        return None
    e = xy[i1] - xy[0]
    rest = xy - xy[0]
    o = e[0] * rest[:, 1] - e[1] * rest[:, 0]
    nz = np.nonzero(o)[0]
    if len(nz) == 0:
        return None
    i2 = int(nz[0])
    others = [k for k in range(n) if k not in (0, i1, i2)]
    return np.array([0, i1, i2] + others, np.int64)


def bowyer_watson(points) -> list[tuple[int, int, int]]:
    """Delaunay triangles (CCW index triples) of 2-D points, exact predicates.

    Points are inserted in the given order; exact duplicates are skipped.
    Cocircular configurations keep whichever triangles were created first.
    Integer inputs of moderate extent take a compiled int64 path that treats
    the outside of the hull through a vertex at infinity; other inputs use
    rational arithmetic and a large enclosing triangle.
    """
    xy = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    if len(xy) >= 3 and np.all(np.mod(xy, 1) == 0) and np.ptp(xy, axis=0).max() < _INT_SPAN:
        xy = xy.astype(np.int64)
        order = _int_start(xy)
        if order is None:
            return []
        return [tuple(int(k) for k in t) for t in _bw_int(xy - xy.min(axis=0), order)]
    pts = [(_exact(x), _exact(y)) for x, y in points]
    n = len(pts)
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    cx = (math.floor(min(xs)) + math.ceil(max(xs))) // 2
    cy = (math.floor(min(ys)) + math.ceil(max(ys))) // 2
    m = 1000 * (math.ceil(max(max(xs) - min(xs), max(ys) - min(ys))) + 1)
    pts += [(cx - 3 * m, cy - 3 * m), (cx + 3 * m, cy - 3 * m), (cx, cy + 3 * m)]

    verts = [[n, n + 1, n + 2]]          # CCW (y up or down does not matter for consistency)
    if _orient(*(pts[k] for k in verts[0])) < 0:
        verts[0] = [n, n + 2, n + 1]
    nbrs = [[-1, -1, -1]]
    alive = [True]
    last = 0

    for pi in range(n):
        p = pts[pi]
        # visibility walk to the containing triangle
        t = last
        while True:
            tv = verts[t]
            for k in range(3):
                a, b = pts[tv[(k + 1) % 3]], pts[tv[(k + 2) % 3]]
                if _orient(a, b, p) < 0:
                    t = nbrs[t][k]
                    break
            else:
                break
        if any(pts[k] == p for k in verts[t]):
            continue
        cavity = {t}
        stack = [t]
        while stack:
            s = stack.pop()
            for nb in nbrs[s]:
                if nb >= 0 and nb not in cavity:
                    a, b, c = (pts[k] for k in verts[nb])
                    if _incircle(a, b, c, p) > 0:
                        cavity.add(nb)
                        stack.append(nb)
        new = []
        by_start, by_end = {}, {}
        for s in sorted(cavity):
            alive[s] = False
            sv = verts[s]
            for k in range(3):
                nb = nbrs[s][k]
                if nb in cavity:
                    continue
                a, b = sv[(k + 1) % 3], sv[(k + 2) % 3]
                ti = len(verts)
                verts.append([pi, a, b])
                nbrs.append([nb, -1, -1])
                alive.append(True)
                if nb >= 0:
                    nbrs[nb][nbrs[nb].index(s)] = ti
                by_start[a] = ti
                by_end[b] = ti
                new.append(ti)
        for ti in new:
            _, a, b = verts[ti]
            nbrs[ti][1] = by_start[b]
            nbrs[ti][2] = by_end[a]
        last = new[0]

    return [tuple(verts[t]) for t in range(len(verts))
            if alive[t] and max(verts[t]) < n]


def delaunay_triangulate(points, shape=None) -> TriangleMesh:
    """Delaunay mesh over ``(u, v, d)`` supports.

    When ``shape = (height, width)`` is given, the four image corners are
    appended with the disparity of their nearest support so the mesh spans
    the whole frame.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if len(pts) < 3:
        raise DegenerateTriangulation(f"need at least 3 support points, got {len(pts)}")
    if _all_collinear(pts[:, :2]):
        raise DegenerateTriangulation("support points are collinear")
    if shape is not None:
        h, w = shape
        corners = np.array([[0, 0], [w - 1, 0], [0, h - 1], [w - 1, h - 1]], np.float64)
        d2 = ((corners[:, None, :] - pts[None, :, :2]) ** 2).sum(-1)
        cd = pts[np.argmin(d2, axis=1), 2]
        pts = np.vstack([pts, np.column_stack([corners, cd])])
    coords = [(int(x) if x.is_integer() else x, int(y) if y.is_integer() else y)
              for x, y in pts[:, :2].tolist()]
    tris = np.array(bowyer_watson(coords), dtype=np.int64).reshape(-1, 3)
    planes = _solve_planes(pts, tris)
    return TriangleMesh(pts, tris, planes, shape=shape)


def _all_collinear(xy: np.ndarray) -> bool:
    a = (_exact(xy[0, 0]), _exact(xy[0, 1]))
    for k in range(1, len(xy)):
        b = (_exact(xy[k, 0]), _exact(xy[k, 1]))
        if b != a:
            break
    else:
        return True
    return all(_orient(a, b, (_exact(x), _exact(y))) == 0 for x, y in xy)


def write_off(mesh: TriangleMesh, path) -> None:
    """Dump the mesh as OFF text with ``(u, v, d)`` vertex coordinates."""
    with open(path, "w") as f:
        f.write("OFF\n%d %d 0\n" % (len(mesh.vertices), len(mesh.triangles)))
        for u, v, d in mesh.vertices:
            f.write(f"{u:.6g} {v:.6g} {d:.6g}\n")
        for a, b, c in mesh.triangles:
            f.write(f"3 {a} {b} {c}\n")
