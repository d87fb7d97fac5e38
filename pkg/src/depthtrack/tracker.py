"""Two-stage, confidence-gated association pipeline and track lifecycle.

Stage 1 matches high-confidence detections to every live track with the
fused four-cue score (location, direction, depth, appearance).  Stage 2
gives leftover and low-confidence detections a second chance against the
remaining tracks on plain box IoU.  Matched tracks that skipped frames
are repaired by the observation-centric re-update; unmatched
high-confidence detections start tentative tracks.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kalman
from .features import (
    DepthMap,
    EmaConfig,
    build_depth_histogram,
    cosine_similarity,
    ema_update,
    frame_depth_range,
)
from .geometry import BBox, Mask, MaskError, bbox_center_form, bbox_from_center_form, bbox_iou, mask_iou
from .assignment import solve
from .io_formats import MotRow, SequenceBundle
from .scoring import ScoreMatrix, ScoreWeights, angular_score, build_match_matrix

LOCATION_CUES = ("has", "bbox", "mask")


@dataclass(frozen=True)
class Detection:
    bbox: BBox
    conf: float
    embedding: np.ndarray | None = None
    self_mask: Mask | None = None
    back_mask: Mask | None = None

    def __post_init__(self):
        if not 0.0 <= self.conf <= 1.0:
            raise ValueError(f"confidence must be in [0, 1], got {self.conf}")


@dataclass(frozen=True)
class TrackerConfig:
    det_high_thresh: float = 0.6
    det_low_thresh: float = 0.1
    stage2_iou_thresh: float = 0.3
    match_accept_thresh: float = 0.1
    max_age: int = 30
    min_hits: int = 3
    location_cue: str = "has"   # has | bbox | mask
    gate_emb_thresh: float = 0.25  # pairs with IoU 0 and emb below this are forbidden
    depth_bins: int = 48
    ema: EmaConfig = field(default_factory=EmaConfig)
    weights: ScoreWeights = field(default_factory=ScoreWeights)

    def __post_init__(self):
        if not 0.0 <= self.det_low_thresh < self.det_high_thresh <= 1.0:
            raise ValueError("need 0 <= det_low_thresh < det_high_thresh <= 1")
        if self.location_cue not in LOCATION_CUES:
            raise ValueError(f"location_cue must be one of {LOCATION_CUES}")

    def to_mapping(self) -> dict[str, str]:
        return {
            "det_high_thresh": repr(self.det_high_thresh),
            "det_low_thresh": repr(self.det_low_thresh),
            "stage2_iou_thresh": repr(self.stage2_iou_thresh),
            "match_accept_thresh": repr(self.match_accept_thresh),
            "max_age": str(self.max_age),
            "min_hits": str(self.min_hits),
            "location_cue": self.location_cue,
            "gate_emb_thresh": repr(self.gate_emb_thresh),
            "depth_bins": str(self.depth_bins),
            "ema_smoothing": repr(self.ema.smoothing),
            "ema_thresh": repr(self.ema.thresh),
            "w_has": repr(self.weights.w_has),
            "w_ang": repr(self.weights.w_ang),
            "w_depth": repr(self.weights.w_depth),
            "w_emb": repr(self.weights.w_emb),
        }

    @classmethod
    def from_mapping(cls, mapping: dict[str, str]) -> "TrackerConfig":
        float_keys = {"det_high_thresh", "det_low_thresh", "stage2_iou_thresh",
                      "match_accept_thresh", "gate_emb_thresh"}
        int_keys = {"max_age", "min_hits", "depth_bins"}
        kwargs: dict = {}
        ema_kwargs: dict = {}
        weight_kwargs: dict = {}
        for key, value in mapping.items():
            try:
                if key in float_keys:
                    kwargs[key] = float(value)
                elif key in int_keys:
                    kwargs[key] = int(value)
                elif key == "location_cue":
                    kwargs[key] = value
                elif key == "ema_smoothing":
                    ema_kwargs["smoothing"] = float(value)
                elif key == "ema_thresh":
                    ema_kwargs["thresh"] = float(value)
                elif key in ("w_has", "w_ang", "w_depth", "w_emb"):
                    weight_kwargs[key] = float(value)
                else:
                    raise ValueError(f"unknown config key: {key}")
            except ValueError as e:
                if "unknown config key" in str(e):
                    raise
                raise ValueError(f"bad value for config key {key}: {value}") from None
        if ema_kwargs:
            kwargs["ema"] = EmaConfig(**ema_kwargs)
        if weight_kwargs:
            kwargs["weights"] = ScoreWeights(**weight_kwargs)
        return cls(**kwargs)


class Track:
    """One tracklet: Kalman state, features, lifecycle counters."""

    def __init__(self, track_id: int, det: Detection, frame: int,
                 model: kalman.KFModel):
        z = np.array(bbox_center_form(det.bbox))
        self.id = track_id
        self.kf = kalman.initial_state(z)
        self.checkpoint = self.kf  # post-update state at last matched frame
        self.last_obs = kalman.Observation(z=z, frame=frame)
        self.centers: list[tuple[float, float]] = [det.bbox.center()]
        self.embedding: np.ndarray | None = (
            None if det.embedding is None else np.asarray(det.embedding, dtype=float))
        self.depth_hist: np.ndarray | None = None
        self.self_mask: Mask | None = det.self_mask
        self.status = "tentative"
        self.hits = 1
        self.age_since_update = 0
        self._model = model
        self._predicted = False

    def predict(self) -> None:
        self.kf = kalman.predict(self.kf, self._model)
        self._predicted = True

    def predicted_bbox(self) -> BBox:
        x = self.kf.x
        s = max(x[2], 0.0)
        r = x[3] if x[3] > 0 else 1.0
        if s == 0:
            return BBox(left=x[0], top=x[1], width=0.0, height=0.0)
        return bbox_from_center_form(x[0], x[1], s, r)

    def mark_matched(self, det: Detection, frame: int, min_hits: int) -> None:
        z = kalman.Observation(z=np.array(bbox_center_form(det.bbox)), frame=frame)
        if self.age_since_update > 1:
            # Lost for >= 2 frames: repair over the virtual trajectory from
            # the checkpoint instead of updating the drifted live state.
            self.kf = kalman.oru_reupdate(self.checkpoint, self.last_obs, z,
                                          self._model)
        else:
            self.kf = kalman.update(self.kf, z, self._model)
        self.checkpoint = self.kf
        self.last_obs = z
        self.centers.append(det.bbox.center())
        if len(self.centers) > 2:
            self.centers = self.centers[-2:]
        self.hits += 1
        self.age_since_update = 0
        if self.status == "tentative" and (self.hits >= min_hits or frame <= min_hits):
            self.status = "confirmed"
        if self.status == "lost":
            self.status = "confirmed"
        self._predicted = False

    def mark_missed(self) -> None:
        self.age_since_update += 1
        if self.status == "confirmed":
            self.status = "lost"
        self._predicted = False


class Tracker:
    def __init__(self, config: TrackerConfig | None = None,
                 model: kalman.KFModel | None = None):
        self.config = config or TrackerConfig()
        self.model = model or kalman.KFModel()
        self.tracks: list[Track] = []
        self._next_id = 1
        self._last_frame: int | None = None
        self.mask_warnings = 0

    # --- cue matrices --------------------------------------------------------

    def mask_iou_matrix(self, tracks: list[Track], dets: list[Detection],
                        frame: int) -> ScoreMatrix:
        """Seg-IoU cue: track self-mask vs detection back-mask in frame t-1.

        Only tracks last seen exactly at the previous frame have a mask in
        those coordinates; everything else scores 0 so the hierarchical
        score degrades to plain box IoU.
        """
        m = np.zeros((len(dets), len(tracks)))
        for j, trk in enumerate(tracks):
            if trk.self_mask is None or trk.last_obs.frame != frame - 1:
                continue
            for i, det in enumerate(dets):
                if det.back_mask is None:
                    continue
                try:
                    m[i, j] = mask_iou(trk.self_mask, det.back_mask)
                except MaskError:
                    self.mask_warnings += 1
        return ScoreMatrix(values=m, cue="seg")

    def _stage1_matrices(self, tracks: list[Track], dets: list[Detection],
                         frame: int, det_hists: list[np.ndarray | None]):
        n, k = len(dets), len(tracks)
        iou = np.zeros((n, k))
        boxes = [t.predicted_bbox() for t in tracks]
        for i, det in enumerate(dets):
            for j in range(k):
                iou[i, j] = bbox_iou(det.bbox, boxes[j])
        seg = self.mask_iou_matrix(tracks, dets, frame)

        cue = self.config.location_cue
        if cue == "has":
            loc = iou * np.exp(seg.values)
        elif cue == "bbox":
            loc = iou.copy()
        else:  # mask
            loc = seg.values.copy()

        ang = np.zeros((n, k))
        for i, det in enumerate(dets):
            center = det.bbox.center()
            for j, trk in enumerate(tracks):
                ang[i, j] = angular_score(trk.centers, center, det.conf)

        depth = np.zeros((n, k))
        for i, h in enumerate(det_hists):
            if h is None or not h.any():
                continue
            for j, trk in enumerate(tracks):
                if trk.depth_hist is not None and trk.depth_hist.any():
                    depth[i, j] = cosine_similarity(h, trk.depth_hist)

        emb = np.zeros((n, k))
        for i, det in enumerate(dets):
            if det.embedding is None:
                continue
            for j, trk in enumerate(tracks):
                if trk.embedding is not None:
                    emb[i, j] = cosine_similarity(det.embedding, trk.embedding)

        match = build_match_matrix(
            ScoreMatrix(values=loc, cue=cue),
            ScoreMatrix(values=ang, cue="ang"),
            ScoreMatrix(values=depth, cue="depth"),
            ScoreMatrix(values=emb, cue="emb"),
            self.config.weights,
        )
        # Spatially impossible pairs without appearance support are forbidden:
        # depth alone must not bridge zero-overlap matches.
        forbidden = {
            (i, j)
            for i in range(n) for j in range(k)
            if iou[i, j] == 0.0 and emb[i, j] < self.config.gate_emb_thresh
        }
        return match, forbidden

    # --- stepping ------------------------------------------------------------

    def step(self, frame: int, detections: list[Detection],
             depth_map: DepthMap | None = None) -> list[tuple[int, BBox]]:
        if self._last_frame is not None and frame <= self._last_frame:
            raise ValueError(
                f"frame indices must increase: {frame} after {self._last_frame}")
        self._last_frame = frame
        cfg = self.config

        for trk in self.tracks:
            trk.predict()

        det_hists: list[np.ndarray | None] = [None] * len(detections)
        if depth_map is not None:
            rng = frame_depth_range(depth_map)
            for i, det in enumerate(detections):
                det_hists[i] = build_depth_histogram(
                    depth_map, det.bbox, cfg.depth_bins, rng)

        high = [i for i, d in enumerate(detections) if d.conf > cfg.det_high_thresh]
        low = [i for i, d in enumerate(detections)
               if cfg.det_low_thresh < d.conf <= cfg.det_high_thresh]

        # Stage 1: high-confidence detections vs all live tracks, fused score.
        matched_dets: dict[int, Track] = {}
        matched_tracks: set[int] = set()
        if high and self.tracks:
            dets1 = [detections[i] for i in high]
            hists1 = [det_hists[i] for i in high]
            match, forbidden = self._stage1_matrices(self.tracks, dets1, frame, hists1)
            result = solve(-match.values, forbidden)
            for r, c in result.pairs:
                if match.values[r, c] >= cfg.match_accept_thresh:
                    matched_dets[high[r]] = self.tracks[c]
                    matched_tracks.add(id(self.tracks[c]))

        # Stage 2: leftovers plus low-confidence detections, box IoU only.
        stage2_dets = [i for i in high if i not in matched_dets] + low
        stage2_tracks = [t for t in self.tracks if id(t) not in matched_tracks]
        if stage2_dets and stage2_tracks:
            boxes = [t.predicted_bbox() for t in stage2_tracks]
            iou = np.zeros((len(stage2_dets), len(stage2_tracks)))
            for r, di in enumerate(stage2_dets):
                for c, box in enumerate(boxes):
                    iou[r, c] = bbox_iou(detections[di].bbox, box)
            forbidden = {(r, c) for r in range(iou.shape[0])
                         for c in range(iou.shape[1]) if iou[r, c] == 0.0}
            result = solve(-iou, forbidden)
            for r, c in result.pairs:
                if iou[r, c] >= cfg.stage2_iou_thresh:
                    matched_dets[stage2_dets[r]] = stage2_tracks[c]
                    matched_tracks.add(id(stage2_tracks[c]))

        # Apply matches.
        for di, trk in matched_dets.items():
            det = detections[di]
            trk.mark_matched(det, frame, cfg.min_hits)
            if det.embedding is not None:
                if trk.embedding is None:
                    trk.embedding = np.asarray(det.embedding, dtype=float)
                else:
                    trk.embedding = ema_update(trk.embedding, det.embedding,
                                               det.conf, cfg.ema)
            if det_hists[di] is not None and det_hists[di].any():
                trk.depth_hist = det_hists[di]
            if det.self_mask is not None:
                trk.self_mask = det.self_mask

        # Births: unmatched high-confidence detections.
        for i in high:
            if i not in matched_dets:
                trk = Track(self._next_id, detections[i], frame, self.model)
                trk.depth_hist = det_hists[i]
                self._next_id += 1
                if frame <= cfg.min_hits:
                    trk.status = "confirmed"
                self.tracks.append(trk)

        # Aging and pruning.
        for trk in self.tracks:
            if trk.last_obs.frame != frame:
                trk.mark_missed()
        self.tracks = [t for t in self.tracks
                       if t.age_since_update <= self.config.max_age]

        # Emit confirmed tracks matched this frame.
        out = []
        for trk in self.tracks:
            if trk.last_obs.frame == frame and trk.status == "confirmed":
                out.append((trk.id, trk.predicted_bbox()))
        out.sort(key=lambda p: p[0])
        return out


def detections_from_bundle(bundle: SequenceBundle, frame: int) -> list[Detection]:
    dets = []
    for idx, row in enumerate(bundle.detections.get(frame, [])):
        dets.append(Detection(
            bbox=BBox(row.left, row.top, row.width, row.height),
            conf=min(max(row.conf, 0.0), 1.0),
            embedding=bundle.embeddings.get((frame, idx)),
            self_mask=bundle.self_masks.get((frame, idx)),
            back_mask=bundle.back_masks.get((frame, idx)),
        ))
    return dets


def run_sequence(bundle: SequenceBundle,
                 config: TrackerConfig | None = None) -> list[MotRow]:
    """Track a whole sequence; rows sorted by (frame, id), deterministic."""
    tracker = Tracker(config)
    rows: list[MotRow] = []
    for frame in range(1, bundle.frames + 1):
        dets = detections_from_bundle(bundle, frame)
        outputs = tracker.step(frame, dets, bundle.depth_maps.get(frame))
        for track_id, box in outputs:
            rows.append(MotRow(frame=frame, track_id=track_id,
                               left=box.left, top=box.top,
                               width=box.width, height=box.height, conf=1.0))
    rows.sort(key=lambda r: (r.frame, r.track_id))
    return rows
