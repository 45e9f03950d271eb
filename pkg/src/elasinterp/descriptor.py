"""Sobel responses and 16-byte pixel descriptors.

Two storage layouts are offered. :class:`SobelPair` keeps only the two 8-bit
Sobel planes (2 bytes/pixel) and assembles descriptors on demand;
:class:`DescriptorField` materialises all 16 bytes for every pixel. Both give
identical descriptors, the lazy one at an eighth of the memory.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DESCRIPTOR_BYTES = 16
MARGIN = 2

# (du, dv) relative to the described pixel; du runs along columns.
HORIZ_OFFSETS = (
    (-2, 0), (-1, -1), (-1, 0), (-1, 1),
    (0, -2), (0, -1), (0, 0), (0, 1), (0, 2),
    (1, -1), (1, 0), (1, 1),
)
VERT_OFFSETS = ((0, -1), (-1, 0), (0, 1), (1, 0))


def sobel_raw(img: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Raw 3x3 Sobel responses as ``int32``; the 1-pixel frame is zero.

    The horizontal kernel rows are ``[1 0 -1; 2 0 -2; 1 0 -1]`` applied as a
    correlation (left column minus right column); the vertical one is its
    transpose (top row minus bottom row).
    """
    x = np.asarray(img).astype(np.int32)
    h, w = x.shape
    horiz = np.zeros((h, w), np.int32)
    vert = np.zeros((h, w), np.int32)
    left = x[:-2, :-2] + 2 * x[1:-1, :-2] + x[2:, :-2]
    right = x[:-2, 2:] + 2 * x[1:-1, 2:] + x[2:, 2:]
    top = x[:-2, :-2] + 2 * x[:-2, 1:-1] + x[:-2, 2:]
    bottom = x[2:, :-2] + 2 * x[2:, 1:-1] + x[2:, 2:]
    horiz[1:-1, 1:-1] = left - right
    vert[1:-1, 1:-1] = top - bottom
    return horiz, vert


def encode_response(raw: np.ndarray) -> np.ndarray:
    """Map raw responses to bytes: ``clamp(trunc(r / 4) + 128, 0, 255)``."""
    q = np.sign(raw) * (np.abs(raw) // 4)
    return np.clip(q + 128, 0, 255).astype(np.uint8)


@dataclass(frozen=True)
class SobelPair:
    horiz: np.ndarray
    vert: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.horiz.shape

    @property
    def nbytes(self) -> int:
        return self.horiz.nbytes + self.vert.nbytes

    def descriptor_at(self, u: int, v: int) -> np.ndarray:
        return descriptor_at(self, u, v)


def sobel(img: np.ndarray) -> SobelPair:
    horiz, vert = sobel_raw(img)
    return SobelPair(encode_response(horiz), encode_response(vert))


def _check_margin(shape, u, v):
    h, w = shape
    if not (MARGIN <= u < w - MARGIN and MARGIN <= v < h - MARGIN):
        raise IndexError(f"pixel ({u}, {v}) lies inside the {MARGIN}-pixel border")


def descriptor_at(sob: SobelPair, u: int, v: int) -> np.ndarray:
    """Assemble the 16-byte descriptor of pixel ``(u, v)`` from the Sobel planes."""
    _check_margin(sob.shape, u, v)
    out = np.empty(DESCRIPTOR_BYTES, np.uint8)
    for k, (du, dv) in enumerate(HORIZ_OFFSETS):
        out[k] = sob.horiz[v + dv, u + du]
    for k, (du, dv) in enumerate(VERT_OFFSETS, start=len(HORIZ_OFFSETS)):
        out[k] = sob.vert[v + dv, u + du]
    return out


@dataclass(frozen=True)
class DescriptorField:
    """Dense ``(h, w, 16)`` descriptor array; the border frame is filled with 128."""

    data: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape[:2]

    @property
    def nbytes(self) -> int:
        return self.data.nbytes

    def descriptor_at(self, u: int, v: int) -> np.ndarray:
        _check_margin(self.shape, u, v)
        return self.data[v, u]


def build_descriptor_field(sob: SobelPair) -> DescriptorField:
    h, w = sob.shape
    data = np.full((h, w, DESCRIPTOR_BYTES), 128, np.uint8)
    inner = (slice(MARGIN, h - MARGIN), slice(MARGIN, w - MARGIN))
    planes = [(sob.horiz, o) for o in HORIZ_OFFSETS] + [(sob.vert, o) for o in VERT_OFFSETS]
    for k, (plane, (du, dv)) in enumerate(planes):
        data[inner[0], inner[1], k] = plane[MARGIN + dv:h - MARGIN + dv, MARGIN + du:w - MARGIN + du]
    return DescriptorField(data)


def as_field(desc) -> DescriptorField:
    """Accept either layout; lazy planes are assembled at the point of use."""
    if isinstance(desc, DescriptorField):
        return desc
    if isinstance(desc, SobelPair):
        return build_descriptor_field(desc)
    raise TypeError(f"expected SobelPair or DescriptorField, got {type(desc).__name__}")


def memory_footprint(width: int, height: int) -> dict:
    """Bytes needed by the precomputed and lazy layouts for one image."""
    dense = DESCRIPTOR_BYTES * width * height
    lazy = 2 * width * height
    return {"precomputed": dense, "lazy": lazy, "ratio": dense / lazy}
