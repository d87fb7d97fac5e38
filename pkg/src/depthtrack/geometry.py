"""Bounding-box and mask primitives: conversions, IoU, RLE codec.

Boxes are stored left/top/width/height (MOT convention); the center form
(u, v, s, r) only appears at the Kalman filter boundary.  Masks are
COCO-style uncompressed RLE: column-major pixel order, alternating
background/foreground runs, starting with a (possibly zero-length)
background run.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class MaskError(ValueError):
    """Raised when a mask violates its RLE invariants."""


@dataclass(frozen=True)
class BBox:
    left: float
    top: float
    width: float
    height: float

    def __post_init__(self):
        if self.width < 0 or self.height < 0:
            raise ValueError("box width/height must be non-negative")

    @property
    def right(self) -> float:
        return self.left + self.width

    @property
    def bottom(self) -> float:
        return self.top + self.height

    @property
    def area(self) -> float:
        return self.width * self.height

    def center(self) -> tuple[float, float]:
        return self.left + self.width / 2.0, self.top + self.height / 2.0


@dataclass(frozen=True)
class Mask:
    width: int
    height: int
    runs: tuple[int, ...]

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise MaskError("mask dimensions must be positive")
        runs = tuple(int(r) for r in self.runs)
        object.__setattr__(self, "runs", runs)
        if any(r < 0 for r in runs):
            raise MaskError("run lengths must be non-negative")
        if sum(runs) != self.width * self.height:
            raise MaskError(
                f"run sum {sum(runs)} != {self.width}x{self.height} pixels"
            )

    @property
    def foreground_area(self) -> int:
        return sum(self.runs[1::2])


def bbox_iou(a: BBox, b: BBox) -> float:
    """Intersection-over-union of two boxes; 0 when the union is empty."""
    iw = min(a.right, b.right) - max(a.left, b.left)
    ih = min(a.bottom, b.bottom) - max(a.top, b.top)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    union = a.area + b.area - inter
    if union <= 0:
        return 0.0
    return inter / union


def _run_starts(mask: Mask):
    """Yield (start, end, is_foreground) pixel intervals in column-major order."""
    pos = 0
    for i, r in enumerate(mask.runs):
        if r:
            yield pos, pos + r, bool(i & 1)
        pos += r


def mask_iou(a: Mask, b: Mask) -> float:
    """Mask IoU computed directly on the run-length encoding.

    Walks the two run lists in lockstep counting overlapping foreground
    pixels; never materializes the bitmaps.
    """
    if a.width != b.width or a.height != b.height:
        raise MaskError(
            f"mask dimensions differ: {a.width}x{a.height} vs {b.width}x{b.height}"
        )
    area_a = a.foreground_area
    area_b = b.foreground_area
    if area_a == 0 and area_b == 0:
        return 0.0
    inter = 0
    ia = iter(_run_starts(a))
    ib = iter(_run_starts(b))
    ra = next(ia, None)
    rb = next(ib, None)
    while ra is not None and rb is not None:
        lo = max(ra[0], rb[0])
        hi = min(ra[1], rb[1])
        if hi > lo and ra[2] and rb[2]:
            inter += hi - lo
        if ra[1] <= rb[1]:
            ra = next(ia, None)
        else:
            rb = next(ib, None)
    union = area_a + area_b - inter
    return inter / union if union else 0.0


def rle_encode(bitmap: np.ndarray) -> Mask:
    """Encode a boolean (H, W) grid as a column-major RLE mask."""
    grid = np.asarray(bitmap, dtype=bool)
    if grid.ndim != 2:
        raise ValueError("bitmap must be a 2D grid")
    h, w = grid.shape
    flat = grid.T.ravel()  # column-major pixel order
    runs: list[int] = []
    if flat.size == 0:
        raise ValueError("bitmap must be non-empty")
    change = np.flatnonzero(np.diff(flat.astype(np.int8)))
    bounds = np.concatenate(([0], change + 1, [flat.size]))
    lengths = np.diff(bounds).tolist()
    if flat[0]:
        runs.append(0)
    runs.extend(lengths)
    return Mask(width=w, height=h, runs=tuple(runs))


def rle_decode(mask: Mask) -> np.ndarray:
    """Decode a mask back to a boolean (H, W) grid."""
    flat = np.zeros(mask.width * mask.height, dtype=bool)
    for lo, hi, fg in _run_starts(mask):
        if fg:
            flat[lo:hi] = True
    return flat.reshape((mask.width, mask.height)).T


def empty_mask(width: int, height: int) -> Mask:
    return Mask(width=width, height=height, runs=(width * height,))


def bbox_center_form(b: BBox) -> tuple[float, float, float, float]:
    """Convert LTWH to (u, v, s, r): center, scale (area), aspect ratio.

    Degenerate boxes (zero height) get r = 0 so the round trip through
    bbox_from_center_form stays well defined.
    """
    u = b.left + b.width / 2.0
    v = b.top + b.height / 2.0
    s = b.width * b.height
    r = b.width / b.height if b.height > 0 else 0.0
    return u, v, s, r


def bbox_from_center_form(u: float, v: float, s: float, r: float) -> BBox:
    """Inverse of bbox_center_form; s = 0 yields a zero-size box at (u, v)."""
    if s < 0:
        raise ValueError("scale s must be non-negative")
    if s == 0:
        return BBox(left=u, top=v, width=0.0, height=0.0)
    if r <= 0:
        raise ValueError("aspect ratio r must be positive")
    w = float(np.sqrt(s * r))
    h = float(np.sqrt(s / r))
    return BBox(left=u - w / 2.0, top=v - h / 2.0, width=w, height=h)
