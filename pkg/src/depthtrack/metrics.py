"""CLEAR-MOT and identity-matching evaluation: MOTA, IDF1, ID switches.

Per-frame correspondence keeps the previous frame's (gt, pred) pairing
alive whenever its overlap still clears the threshold, then assigns the
remainder optimally (maximum matches, then maximum total IoU).  IDF1
comes from one global bipartite matching between ground-truth and
predicted identities maximizing the number of per-frame box matches.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .assignment import solve
from .geometry import BBox, bbox_iou
from .io_formats import MotRow


@dataclass
class EvalReport:
    mota: float
    idf1: float
    idsw: int
    fp: int
    fn: int
    gt_count: int
    frame_matches: dict[int, list[tuple[int, int]]] = field(default_factory=dict)


def _by_frame(rows: list[MotRow]) -> dict[int, list[MotRow]]:
    out: dict[int, list[MotRow]] = {}
    for r in rows:
        out.setdefault(r.frame, []).append(r)
    return out


def _box(row: MotRow) -> BBox:
    return BBox(row.left, row.top, row.width, row.height)


def evaluate(gt: list[MotRow], pred: list[MotRow],
             iou_thresh: float = 0.5) -> EvalReport:
    if not gt:
        raise ValueError("empty ground truth: MOTA undefined")
    gt_frames = _by_frame(gt)
    pred_frames = _by_frame(pred)
    frames = sorted(set(gt_frames) | set(pred_frames))

    fp = fn = idsw = 0
    gt_count = len(gt)
    last_match: dict[int, int] = {}  # gt id -> pred id of its last match
    prev_pairs: dict[int, int] = {}  # gt id -> pred id matched in previous frame
    frame_matches: dict[int, list[tuple[int, int]]] = {}

    # Identity overlap counts for IDF1.
    overlap: dict[tuple[int, int], int] = {}
    gt_sizes: dict[int, int] = {}
    pred_sizes: dict[int, int] = {}
    for r in gt:
        gt_sizes[r.track_id] = gt_sizes.get(r.track_id, 0) + 1
    for r in pred:
        pred_sizes[r.track_id] = pred_sizes.get(r.track_id, 0) + 1

    for frame in frames:
        g = gt_frames.get(frame, [])
        p = pred_frames.get(frame, [])
        iou = np.zeros((len(g), len(p)))
        for i, gr in enumerate(g):
            for j, pr in enumerate(p):
                iou[i, j] = bbox_iou(_box(gr), _box(pr))

        # Identity overlap counts are threshold-based and independent of the
        # CLEAR correspondence below.
        for i, gr in enumerate(g):
            for j, pr in enumerate(p):
                if iou[i, j] >= iou_thresh:
                    key = (gr.track_id, pr.track_id)
                    overlap[key] = overlap.get(key, 0) + 1

        matches: list[tuple[int, int]] = []  # (gt row idx, pred row idx)
        used_g: set[int] = set()
        used_p: set[int] = set()
        # Carry over last frame's pairings first (stabilizes idsw counting).
        pred_index = {pr.track_id: j for j, pr in enumerate(p)}
        for i, gr in enumerate(g):
            pid = prev_pairs.get(gr.track_id)
            if pid is None or pid not in pred_index:
                continue
            j = pred_index[pid]
            if j not in used_p and iou[i, j] >= iou_thresh:
                matches.append((i, j))
                used_g.add(i)
                used_p.add(j)
        # Optimal assignment on the remainder: max matches, then max IoU.
        rest_g = [i for i in range(len(g)) if i not in used_g]
        rest_p = [j for j in range(len(p)) if j not in used_p]
        if rest_g and rest_p:
            sub = iou[np.ix_(rest_g, rest_p)]
            forbidden = {(r, c) for r in range(len(rest_g))
                         for c in range(len(rest_p)) if sub[r, c] < iou_thresh}
            result = solve(-sub, forbidden)
            for r, c in result.pairs:
                matches.append((rest_g[r], rest_p[c]))

        fp += len(p) - len(matches)
        fn += len(g) - len(matches)
        frame_matches[frame] = [(g[i].track_id, p[j].track_id) for i, j in matches]
        prev_pairs = {}
        for i, j in matches:
            gid = g[i].track_id
            pid = p[j].track_id
            if gid in last_match and last_match[gid] != pid:
                idsw += 1
            last_match[gid] = pid
            prev_pairs[gid] = pid

    mota = 1.0 - (fn + fp + idsw) / gt_count
    idf1 = _idf1(overlap, gt_sizes, pred_sizes)
    return EvalReport(mota=mota, idf1=idf1, idsw=idsw, fp=fp, fn=fn,
                      gt_count=gt_count, frame_matches=frame_matches)


def _idf1(overlap: dict[tuple[int, int], int], gt_sizes: dict[int, int],
          pred_sizes: dict[int, int]) -> float:
    n_gt = sum(gt_sizes.values())
    n_pred = sum(pred_sizes.values())
    if n_gt + n_pred == 0:
        return 0.0
    gids = sorted(gt_sizes)
    pids = sorted(pred_sizes)
    if not gids or not pids or not overlap:
        return 0.0
    gain = np.zeros((len(gids), len(pids)))
    for (gid, pid), count in overlap.items():
        gain[gids.index(gid), pids.index(pid)] = count
    # Zero-gain pairs cost nothing, so a plain min-cost matching on the
    # negated gains maximizes the total overlap (IDTP).
    result = solve(-gain)
    idtp = int(-result.total_cost)
    return 2.0 * idtp / (n_gt + n_pred)


def report_csv_row(name: str, report: EvalReport) -> str:
    return (f"{name},{report.mota:.6f},{report.idf1:.6f},"
            f"{report.idsw},{report.fp},{report.fn}")


REPORT_CSV_HEADER = "sequence,MOTA,IDF1,IDSW,FP,FN"
