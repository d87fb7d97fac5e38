"""Evaluation metrics: hand-computed micro-cases, invariances, IDF1 oracle."""

import itertools

import numpy as np
import pytest

from depthtrack.io_formats import MotRow
from depthtrack.metrics import REPORT_CSV_HEADER, evaluate, report_csv_row


def _row(frame, tid, left=0.0, top=0.0, w=10.0, h=10.0):
    return MotRow(frame, tid, left, top, w, h, 1.0)


def _single_object_gt(frames=10):
    return [_row(f, 1) for f in range(1, frames + 1)]


class TestMicroCases:
    def test_perfect_tracking(self):
        gt = _single_object_gt()
        report = evaluate(gt, [_row(f, 7) for f in range(1, 11)])
        assert report.mota == 1.0
        assert report.idf1 == 1.0
        assert report.idsw == 0
        assert report.fp == 0 and report.fn == 0

    def test_hand_computed_id_switch(self):
        # Single object over 10 frames; the predicted id changes once at
        # frame 7, all boxes exact: idsw 1, MOTA 0.9, IDF1 0.6.
        gt = _single_object_gt()
        pred = [_row(f, 1) for f in range(1, 7)] + \
               [_row(f, 2) for f in range(7, 11)]
        report = evaluate(gt, pred)
        assert report.idsw == 1
        assert report.mota == pytest.approx(0.9, abs=1e-12)
        assert report.idf1 == pytest.approx(0.6, abs=1e-12)

    def test_empty_pred(self):
        report = evaluate(_single_object_gt(), [])
        assert report.mota == 0.0
        assert report.idf1 == 0.0
        assert report.fn == 10

    def test_empty_gt_error(self):
        with pytest.raises(ValueError, match="empty ground truth"):
            evaluate([], [_row(1, 1)])

    def test_mota_invariant(self):
        gt = _single_object_gt()
        pred = [_row(f, 1) for f in range(1, 6)] + [_row(6, 2, left=100.0)]
        report = evaluate(gt, pred)
        assert report.mota == pytest.approx(
            1.0 - (report.fn + report.fp + report.idsw) / report.gt_count)


class TestInvariances:
    @staticmethod
    def _random_tables(seed):
        rng = np.random.default_rng(seed)
        gt, pred = [], []
        for frame in range(1, 9):
            for tid in range(1, 5):
                if rng.random() < 0.8:
                    gt.append(_row(frame, tid, left=20.0 * tid))
            for tid in range(1, 5):
                if rng.random() < 0.8:
                    slot = int(rng.integers(1, 5))
                    pred.append(_row(frame, tid, left=20.0 * slot))
        return gt, pred

    @pytest.mark.parametrize("seed", range(20))
    def test_pred_relabeling_invariance(self, seed):
        gt, pred = self._random_tables(seed)
        rng = np.random.default_rng(seed + 1000)
        perm = dict(zip(range(1, 5), rng.permutation(range(101, 105))))
        relabeled = [MotRow(r.frame, int(perm[r.track_id]), r.left, r.top,
                            r.width, r.height, r.conf) for r in pred]
        a = evaluate(gt, pred)
        b = evaluate(gt, relabeled)
        assert (a.mota, a.idf1, a.idsw, a.fp, a.fn) == \
               (b.mota, b.idf1, b.idsw, b.fp, b.fn)

    def test_spurious_box_adds_one_fp(self):
        gt = _single_object_gt()
        pred = [_row(f, 1) for f in range(1, 11)]
        base = evaluate(gt, pred)
        noisy = pred + [_row(5, 99, left=500.0)]
        report = evaluate(gt, noisy)
        assert report.fp == base.fp + 1
        assert report.mota == pytest.approx(base.mota - 1 / report.gt_count)


def _brute_idf1(gt, pred, iou_thresh=0.5):
    """Enumerate injective id mappings to maximize IDTP (<= 5 ids/side)."""
    from depthtrack.geometry import BBox, bbox_iou
    overlap = {}
    by_frame_gt, by_frame_pred = {}, {}
    for r in gt:
        by_frame_gt.setdefault(r.frame, []).append(r)
    for r in pred:
        by_frame_pred.setdefault(r.frame, []).append(r)
    for frame, rows in by_frame_gt.items():
        for g in rows:
            for p in by_frame_pred.get(frame, []):
                iou = bbox_iou(BBox(g.left, g.top, g.width, g.height),
                               BBox(p.left, p.top, p.width, p.height))
                if iou >= iou_thresh:
                    key = (g.track_id, p.track_id)
                    overlap[key] = overlap.get(key, 0) + 1
    gids = sorted({r.track_id for r in gt})
    pids = sorted({r.track_id for r in pred})
    best = 0
    k = min(len(gids), len(pids))
    for subset in itertools.permutations(pids, k):
        total = sum(overlap.get((g, p), 0) for g, p in zip(gids, subset))
        best = max(best, total)
    denom = len(gt) + len(pred)
    return 2 * best / denom if denom else 0.0


class TestIdf1Oracle:
    @pytest.mark.parametrize("seed", range(30))
    def test_against_brute_force(self, seed):
        rng = np.random.default_rng(seed)
        gt, pred = [], []
        for frame in range(1, 7):
            for tid in range(1, int(rng.integers(2, 6))):
                if rng.random() < 0.8:
                    gt.append(_row(frame, tid, left=15.0 * tid))
            for tid in range(1, int(rng.integers(2, 6))):
                if rng.random() < 0.8:
                    slot = int(rng.integers(1, 6))
                    pred.append(_row(frame, tid, left=15.0 * slot))
        if not gt:
            return
        report = evaluate(gt, pred)
        assert report.idf1 == pytest.approx(_brute_idf1(gt, pred), abs=1e-12)


class TestReportCsv:
    def test_header_and_row(self):
        report = evaluate(_single_object_gt(), _single_object_gt())
        assert REPORT_CSV_HEADER == "sequence,MOTA,IDF1,IDSW,FP,FN"
        assert report_csv_row("seq", report) == "seq,1.000000,1.000000,0,0,0"
