import math

import numpy as np
import pytest

from depthtrack.scoring import (
    ScoreMatrix,
    ScoreWeights,
    angular_score,
    build_match_matrix,
    has_score,
    negate_to_cost,
)


class TestHasScore:
    def test_corner(self):
        assert has_score(1.0, 1.0) == pytest.approx(math.e, abs=1e-12)

    def test_no_seg_degrades_to_bbox(self):
        for x in (0.0, 0.2, 0.5, 1.0):
            assert has_score(x, 0.0) == x

    def test_half_ln2(self):
        assert has_score(0.5, math.log(2)) == pytest.approx(1.0, abs=1e-12)

    def test_zero_bbox_flat_edge(self):
        for seg in (0.0, 0.5, 1.0):
            assert has_score(0.0, seg) == 0.0

    def test_monotone(self):
        rng = np.random.default_rng(4)
        for _ in range(100):
            b, s = rng.uniform(0.01, 1.0, 2)
            eps = 1e-4
            assert has_score(b + eps, s) > has_score(b, s)
            assert has_score(b, s + eps) > has_score(b, s)

    def test_derivative_equals_itself(self):
        # d/dseg [b * exp(seg)] = b * exp(seg): finite differences
        rng = np.random.default_rng(8)
        step = 1e-6
        for _ in range(20):
            b = rng.uniform(0.05, 1.0)
            s = rng.uniform(0.0, 1.0 - step)
            fd = (has_score(b, s + step) - has_score(b, s - step)) / (2 * step)
            assert fd == pytest.approx(has_score(b, s), rel=1e-6)


class TestAngularScore:
    def test_collinear(self):
        assert angular_score([(0, 0), (1, 0)], (2, 0), 1.0) == pytest.approx(1.0)

    def test_reversal(self):
        assert angular_score([(0, 0), (1, 0)], (0, 0), 1.0) == pytest.approx(0.0)

    def test_perpendicular(self):
        assert angular_score([(0, 0), (1, 0)], (1, 1), 0.8) == pytest.approx(0.4)

    def test_short_history(self):
        assert angular_score([(0, 0)], (5, 5), 1.0) == 0.0
        assert angular_score([], (5, 5), 1.0) == 0.0

    def test_degenerate_displacement(self):
        assert angular_score([(1, 1), (1, 1)], (5, 5), 1.0) == 0.0
        assert angular_score([(0, 0), (1, 0)], (1, 0), 1.0) == 0.0

    def test_range_and_rotation_invariance(self):
        rng = np.random.default_rng(6)
        for _ in range(100):
            pts = rng.uniform(-10, 10, size=(3, 2))
            c = rng.uniform(0, 1)
            v = angular_score([tuple(pts[0]), tuple(pts[1])], tuple(pts[2]), c)
            assert 0.0 <= v <= c + 1e-12
            theta = rng.uniform(0, 2 * math.pi)
            R = np.array([[math.cos(theta), -math.sin(theta)],
                          [math.sin(theta), math.cos(theta)]])
            rot = pts @ R.T
            v2 = angular_score([tuple(rot[0]), tuple(rot[1])], tuple(rot[2]), c)
            assert v2 == pytest.approx(v, abs=1e-9)


def mat(values, cue="x"):
    return ScoreMatrix(values=np.array(values, dtype=float), cue=cue)


class TestMatchMatrix:
    def test_all_zero(self):
        z = mat(np.zeros((2, 3)))
        out = build_match_matrix(z, z, z, z, ScoreWeights())
        assert not out.values.any()

    def test_unit_weight_sum(self):
        w = ScoreWeights(w_has=1, w_ang=1, w_depth=1, w_emb=1)
        out = build_match_matrix(mat([[0.5]]), mat([[0.1]]), mat([[0.9]]),
                                 mat([[0.7]]), w)
        assert out.values[0, 0] == pytest.approx(2.2, abs=1e-12)

    def test_linearity_in_depth_weight(self):
        rng = np.random.default_rng(3)
        cues = [mat(rng.uniform(0, 1, (3, 3))) for _ in range(4)]
        w1 = ScoreWeights(w_depth=1.0)
        w2 = ScoreWeights(w_depth=2.0)
        m1 = build_match_matrix(*cues, w1).values
        m2 = build_match_matrix(*cues, w2).values
        assert np.allclose(m2 - m1, cues[2].values)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            build_match_matrix(mat(np.zeros((2, 2))), mat(np.zeros((2, 3))),
                               mat(np.zeros((2, 2))), mat(np.zeros((2, 2))),
                               ScoreWeights())


class TestNegate:
    def test_negation(self):
        out = negate_to_cost(mat([[1, 2], [3, 4]], cue="match"))
        assert np.array_equal(out.values, [[-1, -2], [-3, -4]])
        assert out.cue == "match"

    def test_zero(self):
        z = mat(np.zeros((2, 2)))
        assert not negate_to_cost(z).values.any()

    def test_involution(self):
        m = mat([[1.25, -2.5], [0.0, 4.75]])
        assert np.array_equal(negate_to_cost(negate_to_cost(m)).values, m.values)
