"""Pluggable perception backends.

Three registries — depth, segmentation, re-id — keyed by name from
AdapterConfig.  The builtin backends are classical and dependency-light
so the adapter runs without an ML runtime; model-based backends plug in
through the same registration calls.
"""

from __future__ import annotations

from typing import Callable

import numpy as np
from skimage.filters import threshold_otsu

from .io import DEPTH_MAX_M, DetBox

DEPTH_BACKENDS: dict[str, Callable] = {}
SEG_BACKENDS: dict[str, Callable] = {}
REID_BACKENDS: dict[str, Callable] = {}


def register(registry: dict[str, Callable], name: str):
    def deco(fn):
        registry[name] = fn
        return fn
    return deco


def get_backend(registry: dict[str, Callable], name: str) -> Callable:
    try:
        return registry[name]
    except KeyError:
        known = ", ".join(sorted(registry))
        raise ValueError(f"unknown backend {name!r}; available: {known}") \
            from None


def _luminance(rgb: np.ndarray) -> np.ndarray:
    return rgb @ np.array([0.2126, 0.7152, 0.0722])


def _clip_box(box: DetBox, width: int, height: int):
    """Integer pixel window of the box clipped to the image, or None."""
    x0 = max(0, int(np.floor(box.left)))
    y0 = max(0, int(np.floor(box.top)))
    x1 = min(width, int(np.ceil(box.left + box.width)))
    y1 = min(height, int(np.ceil(box.top + box.height)))
    if x0 >= x1 or y0 >= y1:
        return None
    return x0, y0, x1, y1


# --- depth -------------------------------------------------------------------

@register(DEPTH_BACKENDS, "luminance")
def depth_from_luminance(rgb: np.ndarray) -> np.ndarray:
    """Pseudo-depth: brighter pixels read as nearer.

    A stand-in for a monocular depth model with the same contract — a
    dense per-pixel map in meters.
    """
    lum = _luminance(rgb)
    near, far = 1.0, 50.0
    return near + (far - near) * (1.0 - lum)


# --- segmentation ------------------------------------------------------------

@register(SEG_BACKENDS, "otsu")
def segment_otsu(rgb: np.ndarray, box: DetBox) -> np.ndarray | None:
    """Foreground mask inside the box prompt; full-frame boolean grid.

    The crop is split by Otsu's threshold; the class containing the
    crop center is taken as the object.  Degenerate (constant) crops
    fall back to the whole box.  Returns None when the box lies fully
    outside the image — the caller treats that as propagation failure.
    """
    height, width = rgb.shape[:2]
    window = _clip_box(box, width, height)
    if window is None:
        return None
    x0, y0, x1, y1 = window
    crop = _luminance(rgb[y0:y1, x0:x1])
    grid = np.zeros((height, width), dtype=bool)
    if crop.max() - crop.min() < 1e-9:
        grid[y0:y1, x0:x1] = True
        return grid
    thresh = threshold_otsu(crop)
    bright = crop >= thresh
    cy, cx = (y1 - y0) // 2, (x1 - x0) // 2
    fg = bright if bright[cy, cx] else ~bright
    grid[y0:y1, x0:x1] = fg
    return grid


# --- re-identification -------------------------------------------------------

@register(REID_BACKENDS, "colorhist")
def embed_colorhist(rgb: np.ndarray, box: DetBox, dim: int) -> np.ndarray | None:
    """Unit-norm color-histogram descriptor of the box crop.

    Returns None when the crop lies fully outside the image.
    """
    height, width = rgb.shape[:2]
    window = _clip_box(box, width, height)
    if window is None:
        return None
    x0, y0, x1, y1 = window
    crop = rgb[y0:y1, x0:x1]
    bins = [dim // 3 + (1 if c < dim % 3 else 0) for c in range(3)]
    parts = [np.histogram(crop[..., c], bins=bins[c], range=(0.0, 1.0))[0]
             for c in range(3)]
    vec = np.concatenate(parts).astype(float)
    norm = np.linalg.norm(vec)
    if norm == 0.0:
        vec[0] = 1.0
        norm = 1.0
    return vec / norm
