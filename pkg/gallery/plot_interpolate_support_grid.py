"""
Filling a sparse support grid
=============================

Sparse support matches leave holes wherever the matcher was not confident.
The interpolated variant closes every hole with a horizontal pass, then a
vertical pass, then a constant, so the grid can be split into a regular mesh
instead of a Delaunay one.

The first part uses the small-figure parameters: a 5 px search limit, a
disparity tolerance of 3 and a constant of 0. The second part runs the
reference parameters (50 px, 15, 60) on a real image pair.
"""

import numpy as np

from elasinterp.interp import InterpParams, interpolate_grid
from elasinterp.support import Provenance, SupportGrid

letters = {Provenance.MATCHED: "M", Provenance.H_INTERP: "H",
           Provenance.V_INTERP: "V", Provenance.CONST: "C"}


def show(grid):
    print(grid.disp)
    for row in grid.prov:
        print(" ".join(letters[Provenance(p)] for p in row))


###############################################################################
# A hand-made grid. -1 marks cells without a match.

disp = np.array([
    [12, -1, 14, -1, -1, -1],
    [-1, -1, -1, -1, 30, -1],
    [20, -1, 21, -1, 22, -1],
    [-1, -1, -1, -1, -1, -1],
    [-1, -1, 26, -1, 40, -1],
    [-1, -1, -1, -1, -1, -1],
])
params = InterpParams(s_delta=5, epsilon=3, c_const=0)

###############################################################################
# The search limit is in pixels and strict. On a 5 px lattice the nearest
# neighbour is exactly 5 px away, so nothing qualifies and every hole gets
# the constant.

show(interpolate_grid(SupportGrid.from_disparities(disp, step=5), params))

###############################################################################
# On a 1 px lattice the same limit reaches four cells to each side.

show(interpolate_grid(SupportGrid.from_disparities(disp, step=1), params))

# Row 0 cell 1 sits between 12 and 14: they agree within 3, so the rounded
# mean 13 is used. Row 2 cell 3 sits between 21 and 22 and the mean rounds
# up to 22. Row 4 cell 3 sees 26 and 40, too far apart, so the smaller value
# 26 (the farther surface) is taken. Column fills only read matched cells,
# never values written by the row pass.

###############################################################################
# The same fill on a real pair. The supports come from the full matcher and
# filter, the reference parameters drive the fill.

try:
    from skimage import data
except ImportError:           # the rest needs the bundled Middlebury pair
    raise SystemExit(0)

from elasinterp.descriptor import build_descriptor_field, sobel
from elasinterp.imgio import rgb_to_gray
from elasinterp.mesh import regular_triangulate
from elasinterp.support import filter_supports, match_support

left, right, _ = data.stereo_motorcycle()
left, right = rgb_to_gray(left), rgb_to_gray(right)
fl, fr = build_descriptor_field(sobel(left)), build_descriptor_field(sobel(right))
grid = filter_supports(match_support(fl, fr))
filled = interpolate_grid(grid, InterpParams(50, 15, 60))

total = filled.gw * filled.gh
for p in (Provenance.MATCHED, Provenance.H_INTERP, Provenance.V_INTERP, Provenance.CONST):
    print(f"{p.name:<9} {filled.count(p):6d} cells ({filled.count(p) / total:.1%})")

mesh = regular_triangulate(filled, shape=left.shape)
print(f"regular mesh: {len(mesh.triangles)} triangles over a {filled.gw}x{filled.gh} lattice")

try:
    import matplotlib.pyplot as plt
except ImportError:
    raise SystemExit(0)

fig, ax = plt.subplots(1, 2, figsize=(10, 4))
ax[0].imshow(np.where(grid.disp >= 0, grid.disp, np.nan), cmap="viridis")
ax[0].set_title("filtered supports")
ax[1].imshow(filled.disp, cmap="viridis")
ax[1].set_title("after filling")
plt.show()
