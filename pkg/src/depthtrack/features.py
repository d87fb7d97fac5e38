"""Appearance embedding bank and depth-histogram descriptors.

Embeddings are unit-norm vectors maintained per track by a
confidence-weighted exponential moving average.  Depth descriptors are
L1-normalized histograms of the valid depth values inside a box, binned
on a scale shared by every object in the frame so that absolute depth
differences survive the comparison.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import BBox


@dataclass(frozen=True)
class EmaConfig:
    smoothing: float = 0.95   # fixed EMA floor (coefficient at confidence 1)
    thresh: float = 0.6       # detection threshold feeding the dynamic coefficient

    def __post_init__(self):
        if not (0.0 <= self.thresh < 1.0):
            raise ValueError("thresh must be in [0, 1)")
        if not (0.0 <= self.smoothing <= 1.0):
            raise ValueError("smoothing must be in [0, 1]")


@dataclass(frozen=True)
class DepthMap:
    width: int
    height: int
    depth: np.ndarray  # (height, width) meters, 0 = invalid

    def __post_init__(self):
        d = np.asarray(self.depth, dtype=float)
        if d.shape != (self.height, self.width):
            raise ValueError("depth grid shape must match (height, width)")
        object.__setattr__(self, "depth", d)


def normalize(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    return v / n if n > 0 else v


def ema_coefficient(c: float, cfg: EmaConfig) -> float:
    """Dynamic EMA coefficient: 1 at the detection threshold, the floor at c=1.

    Confidences below the threshold clamp to it, so low-confidence
    detections leave the stored embedding untouched.
    """
    c = min(max(c, cfg.thresh), 1.0)
    t = cfg.smoothing
    return t + (1.0 - t) * (1.0 - (c - cfg.thresh) / (1.0 - cfg.thresh))


def ema_update(old: np.ndarray, new: np.ndarray, c: float, cfg: EmaConfig) -> np.ndarray:
    """Blend the stored embedding toward a new one, renormalizing to unit L2."""
    coef = ema_coefficient(c, cfg)
    raw = coef * np.asarray(old, dtype=float) + (1.0 - coef) * np.asarray(new, dtype=float)
    n = np.linalg.norm(raw)
    if n == 0:
        return np.asarray(old, dtype=float)
    return raw / n


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.shape != b.shape:
        raise ValueError("vectors must share a dimension")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0
    return float(a @ b / (na * nb))


def frame_depth_range(dmap: DepthMap) -> tuple[float, float]:
    """(min, max) over valid pixels; (0, 1) when degenerate or empty."""
    valid = dmap.depth[dmap.depth > 0]
    if valid.size == 0:
        return 0.0, 1.0
    lo = float(valid.min())
    hi = float(valid.max())
    if lo == hi:
        return 0.0, 1.0
    return lo, hi


def build_depth_histogram(dmap: DepthMap, box: BBox, bins: int,
                          value_range: tuple[float, float],
                          mask: np.ndarray | None = None) -> np.ndarray:
    """Histogram of valid depths inside the box, L1-normalized.

    The box is clipped to the frame; values clamp into the binning range.
    Returns an all-zero vector when no valid pixel falls inside.  An
    optional boolean mask (frame-sized) restricts the pixels further.
    """
    lo, hi = value_range
    if not lo < hi:
        raise ValueError("range lo must be < hi")
    if bins < 2:
        raise ValueError("need at least 2 bins")
    x0 = max(int(np.floor(box.left)), 0)
    y0 = max(int(np.floor(box.top)), 0)
    x1 = min(int(np.ceil(box.left + box.width)), dmap.width)
    y1 = min(int(np.ceil(box.top + box.height)), dmap.height)
    if x0 >= x1 or y0 >= y1:
        return np.zeros(bins)
    patch = dmap.depth[y0:y1, x0:x1]
    keep = patch > 0
    if mask is not None:
        keep &= np.asarray(mask, dtype=bool)[y0:y1, x0:x1]
    values = patch[keep]
    if values.size == 0:
        return np.zeros(bins)
    values = np.clip(values, lo, hi)
    counts, _ = np.histogram(values, bins=bins, range=(lo, hi))
    return counts / counts.sum()
