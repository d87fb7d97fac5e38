"""Cue score matrices and the fused match matrix.

Four cues feed association: the hierarchical alignment score (box IoU
amplified exponentially by mask IoU), a motion-direction consistency
score, depth-histogram cosine similarity, and appearance-embedding
cosine similarity.  Their weighted sum is negated into a cost matrix for
the linear solver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DIRECTION_EPS = 1e-3  # px; displacements below this carry no direction


@dataclass(frozen=True)
class ScoreMatrix:
    values: np.ndarray  # (n_obs, n_trk)
    cue: str

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2:
            raise ValueError("score matrix must be 2D")
        object.__setattr__(self, "values", v)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


@dataclass(frozen=True)
class ScoreWeights:
    w_has: float = 1.0
    w_ang: float = 0.2
    w_depth: float = 1.0
    w_emb: float = 1.0

    def __post_init__(self):
        for name in ("w_has", "w_ang", "w_depth", "w_emb"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


def has_score(iou_bbox: float, iou_seg: float) -> float:
    """Box IoU multiplied by exp(mask IoU).

    With no segmentation evidence (iou_seg = 0) this degrades to the
    plain box IoU; at full mask agreement it amplifies it by e.
    """
    return iou_bbox * math.exp(iou_seg)


def angular_score(history: list[tuple[float, float]],
                  det_center: tuple[float, float],
                  det_conf: float) -> float:
    """Direction consistency between a track's recent motion and a detection.

    Compares the track's last displacement against the displacement from
    its last center to the detection; collinear continuation scores the
    full detection confidence, a reversal scores 0.  Tracks with fewer
    than two observed centers, or degenerate displacements, score 0.
    """
    if len(history) < 2:
        return 0.0
    p1 = np.asarray(history[-2], dtype=float)
    p2 = np.asarray(history[-1], dtype=float)
    d = np.asarray(det_center, dtype=float)
    v1 = p2 - p1
    v2 = d - p2
    n1 = np.linalg.norm(v1)
    n2 = np.linalg.norm(v2)
    if n1 < DIRECTION_EPS or n2 < DIRECTION_EPS:
        return 0.0
    cos_theta = np.clip(v1 @ v2 / (n1 * n2), -1.0, 1.0)
    theta = math.acos(cos_theta)
    return det_conf * (1.0 - theta / math.pi)


def build_match_matrix(has: ScoreMatrix, ang: ScoreMatrix, depth: ScoreMatrix,
                       emb: ScoreMatrix, w: ScoreWeights) -> ScoreMatrix:
    """Weighted elementwise sum of the four cue matrices."""
    shape = has.shape
    for m in (ang, depth, emb):
        if m.shape != shape:
            raise ValueError(f"cue matrix shapes differ: {m.shape} vs {shape}")
    total = (w.w_has * has.values + w.w_ang * ang.values
             + w.w_depth * depth.values + w.w_emb * emb.values)
    return ScoreMatrix(values=total, cue="match")


def negate_to_cost(m: ScoreMatrix) -> ScoreMatrix:
    return ScoreMatrix(values=-m.values, cue=m.cue)
