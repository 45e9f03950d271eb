"""Image and disparity-map I/O.

Images are plain ``numpy`` arrays: a gray image is a 2-D ``uint8`` array
indexed ``[v, u]`` (row, column). Disparity maps are 2-D ``int16`` arrays in
which :data:`INVALID` marks pixels without a disparity.
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np
from PIL import Image

INVALID = -1
MIN_SIZE = 16

GT_CONVENTIONS = ("eightbit", "kitti256")
SAVE_FORMATS = ("png16", "pfm", "png8")


class ImageFormatError(ValueError):
    """Raised for files that cannot be decoded into the expected raster."""


def check_gray(img: np.ndarray, min_size: int = MIN_SIZE) -> np.ndarray:
    img = np.asarray(img)
    if img.ndim != 2 or img.dtype != np.uint8:
        raise ImageFormatError(f"expected 2-D uint8 image, got {img.dtype} {img.shape}")
    h, w = img.shape
    if w < min_size or h < min_size:
        raise ImageFormatError(f"image {w}x{h} is below the {min_size}x{min_size} minimum")
    return img


def rgb_to_gray(rgb: np.ndarray) -> np.ndarray:
    """Integer luma ``(77 R + 150 G + 29 B) >> 8``."""
    rgb = rgb.astype(np.uint32)
    y = (77 * rgb[..., 0] + 150 * rgb[..., 1] + 29 * rgb[..., 2]) >> 8
    return y.astype(np.uint8)


def _read_pnm_header(f):
    tokens = []
    while len(tokens) < 4:
        line = f.readline()
        if not line:
            raise ImageFormatError("truncated PGM header")
        line = line.split(b"#", 1)[0]
        tokens.extend(line.split())
    return tokens


def _load_pgm(path) -> np.ndarray:
    with open(path, "rb") as f:
        tokens = _read_pnm_header(f)
        if tokens[0] != b"P5":
            raise ImageFormatError(f"{path}: only binary P5 PGM is supported")
        w, h, maxval = (int(t) for t in tokens[1:4])
        if maxval > 255:
            raise ImageFormatError(f"{path}: 16-bit PGM is not supported")
        data = f.read(w * h)
    if len(data) != w * h:
        raise ImageFormatError(f"{path}: expected {w * h} pixel bytes, got {len(data)}")
    return np.frombuffer(data, dtype=np.uint8).reshape(h, w).copy()


def _is_pgm(path) -> bool:
    with open(path, "rb") as f:
        return f.read(2) == b"P5"


def _is_pfm(path) -> bool:
    with open(path, "rb") as f:
        return f.read(2) in (b"Pf", b"PF")


def load_gray(path, min_size: int = MIN_SIZE) -> np.ndarray:
    """Load an 8-bit grayscale image from a P5 PGM or an 8-bit PNG.

    RGB(A) PNGs are reduced to gray with integer luma weights; alpha is ignored.
    """
    path = os.fspath(path)
    if not os.path.isfile(path):
        raise FileNotFoundError(path)
    if _is_pgm(path):
        img = _load_pgm(path)
    else:
        try:
            pil = Image.open(path)
            pil.load()
        except Exception as exc:  # PIL raises a zoo of types
            raise ImageFormatError(f"{path}: unreadable image ({exc})") from exc
        if pil.mode == "L":
            img = np.asarray(pil, dtype=np.uint8)
        elif pil.mode in ("RGB", "RGBA"):
            img = rgb_to_gray(np.asarray(pil)[..., :3])
        elif pil.mode == "P":
            img = rgb_to_gray(np.asarray(pil.convert("RGB")))
        else:
            raise ImageFormatError(f"{path}: unsupported bit depth / mode {pil.mode!r}")
    return check_gray(np.ascontiguousarray(img), min_size=min_size)


def _load_pfm(path) -> np.ndarray:
    with open(path, "rb") as f:
        kind = f.readline().strip()
        if kind != b"Pf":
            raise ImageFormatError(f"{path}: only single-channel PFM is supported")
        w, h = (int(t) for t in f.readline().split())
        scale = float(f.readline().strip())
        dtype = "<f4" if scale < 0 else ">f4"
        data = np.frombuffer(f.read(4 * w * h), dtype=dtype)
    if data.size != w * h:
        raise ImageFormatError(f"{path}: truncated PFM payload")
    # PFM scanlines run bottom to top
    return data.reshape(h, w)[::-1].astype(np.float64)


def _to_disparity(values: np.ndarray, valid: np.ndarray) -> np.ndarray:
    out = np.full(values.shape, INVALID, dtype=np.int16)
    d = np.clip(np.floor(values[valid] + 0.5), 0, 255)
    out[valid] = d.astype(np.int16)
    return out


def load_ground_truth(path, convention: str = "eightbit") -> np.ndarray:
    """Load a ground-truth (or previously saved) disparity map.

    ``eightbit``: the 8-bit sample is the disparity. ``kitti256``: a 16-bit
    PNG with disparity = sample / 256 and 0 meaning invalid. PFM files are
    recognised by their magic bytes regardless of convention; negative or
    non-finite samples are invalid.
    """
    if convention not in GT_CONVENTIONS:
        raise ValueError(f"unknown ground-truth convention {convention!r}")
    path = os.fspath(path)
    if not os.path.isfile(path):
        raise FileNotFoundError(path)
    if _is_pfm(path):
        raw = _load_pfm(path)
        valid = np.isfinite(raw) & (raw >= 0)
        return _to_disparity(np.where(valid, raw, 0.0), valid)
    if _is_pgm(path):
        arr = _load_pgm(path)
    else:
        try:
            pil = Image.open(path)
            pil.load()
        except Exception as exc:
            raise ImageFormatError(f"{path}: unreadable disparity image ({exc})") from exc
        arr = np.asarray(pil)
    if arr.ndim != 2:
        raise ImageFormatError(f"{path}: ground truth must be single-channel")
    if convention == "eightbit":
        if arr.dtype != np.uint8:
            raise ImageFormatError(f"{path}: eightbit convention needs an 8-bit image")
        return arr.astype(np.int16)
    if arr.dtype == np.uint8 or arr.max(initial=0) > 65535:
        raise ImageFormatError(f"{path}: kitti256 convention needs a 16-bit PNG")
    arr = arr.astype(np.float64)
    valid = arr > 0
    return _to_disparity(arr / 256.0, valid)


def save_disparity(dmap: np.ndarray, path, format: str = "png16") -> None:
    """Write a disparity map as ``png16`` (value*256), ``pfm`` or ``png8``."""
    dmap = np.asarray(dmap)
    valid = dmap != INVALID
    path = os.fspath(path)
    if format == "png16":
        out = np.where(valid, dmap.astype(np.int32) * 256, 0).astype(np.uint16)
        Image.fromarray(out).save(path, format="PNG")
    elif format == "png8":
        out = np.where(valid, dmap, 0).astype(np.uint8)
        Image.fromarray(out).save(path, format="PNG")
    elif format == "pfm":
        h, w = dmap.shape
        out = np.where(valid, dmap, -1).astype("<f4")[::-1]
        with open(path, "wb") as f:
            f.write(b"Pf\n%d %d\n-1.0\n" % (w, h))
            f.write(out.tobytes())
    else:
        raise ValueError(f"unknown disparity format {format!r}")


def save_pgm(img: np.ndarray, path) -> None:
    img = np.asarray(img, dtype=np.uint8)
    h, w = img.shape
    with open(path, "wb") as f:
        f.write(b"P5\n%d %d\n255\n" % (w, h))
        f.write(np.ascontiguousarray(img).tobytes())


def find_pairs(directory) -> list[tuple[Path, Path]]:
    """Pair up ``*left*`` / ``*right*`` image files in a directory."""
    directory = Path(directory)
    pairs = []
    for left in sorted(directory.iterdir()):
        if "left" not in left.name or left.suffix.lower() not in (".png", ".pgm"):
            continue
        right = left.with_name(left.name.replace("left", "right"))
        if right.exists():
            pairs.append((left, right))
    return pairs
