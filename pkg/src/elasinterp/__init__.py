"""ELAS-style stereo matching with an interpolated, regularly triangulated support grid."""

from .descriptor import (DescriptorField, SobelPair, build_descriptor_field, descriptor_at,
                         memory_footprint, sobel)
from .dense import DenseParams, dense_match, gap_interpolate, lr_consistency, median_filter
from .gridvec import GridVector, build_grid_vector
from .imgio import INVALID, load_ground_truth, load_gray, save_disparity
from .interp import InterpParams, interpolate_grid
from .mesh import (DegenerateTriangulation, TriangleMesh, delaunay_triangulate, prior_disparity,
                   regular_triangulate)
from .metrics import ErrorReport, bad_pixel_error, eq1_error, evaluate
from .pipeline import FrameStats, PipelineConfig, run_frame, run_stream
from .support import (FilterParams, MatchParams, Provenance, SupportGrid, filter_supports,
                      match_support)

__version__ = "0.1.0"
