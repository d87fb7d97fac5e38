import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from depthtrack.features import (
    DepthMap,
    EmaConfig,
    build_depth_histogram,
    cosine_similarity,
    ema_coefficient,
    ema_update,
    frame_depth_range,
    normalize,
)
from depthtrack.geometry import BBox


class TestEmaCoefficient:
    def test_full_confidence_hits_floor(self):
        assert ema_coefficient(1.0, EmaConfig()) == pytest.approx(0.95, abs=0)

    def test_threshold_confidence_is_one(self):
        assert ema_coefficient(0.6, EmaConfig()) == pytest.approx(1.0, abs=0)

    def test_mid_confidence(self):
        # 0.95 + 0.05 * (1 - 0.5)
        assert ema_coefficient(0.8, EmaConfig()) == pytest.approx(0.975, abs=1e-15)

    def test_below_threshold_clamps(self):
        assert ema_coefficient(0.2, EmaConfig()) == 1.0

    @given(st.floats(0.6, 1.0), st.floats(0.6, 1.0))
    def test_monotone_decreasing(self, c1, c2):
        cfg = EmaConfig()
        lo, hi = sorted((c1, c2))
        assert ema_coefficient(lo, cfg) >= ema_coefficient(hi, cfg)


class TestEmaUpdate:
    def test_identical_is_idempotent(self):
        cfg = EmaConfig()
        e = normalize(np.array([1.0, 2.0, 3.0]))
        out = ema_update(e, e, 0.9, cfg)
        assert np.allclose(out, e, atol=1e-12)

    def test_threshold_keeps_old(self):
        cfg = EmaConfig()
        old = normalize(np.array([1.0, 0.0]))
        new = normalize(np.array([0.0, 1.0]))
        assert np.allclose(ema_update(old, new, cfg.thresh, cfg), old, atol=1e-12)

    def test_orthonormal_blend(self):
        cfg = EmaConfig()
        old = np.array([1.0, 0.0])
        new = np.array([0.0, 1.0])
        out = ema_update(old, new, 1.0, cfg)
        n = np.sqrt(0.95**2 + 0.05**2)
        assert np.allclose(out, [0.95 / n, 0.05 / n], atol=1e-5)
        assert np.allclose(out, [0.99863, 0.05256], atol=1e-4)

    def test_zero_raw_returns_old(self):
        cfg = EmaConfig(smoothing=0.5)
        old = np.array([1.0, 0.0])
        out = ema_update(old, -old, 1.0, cfg)
        assert np.array_equal(out, old)

    def test_output_unit_norm(self):
        rng = np.random.default_rng(1)
        cfg = EmaConfig()
        for _ in range(100):
            old = normalize(rng.normal(size=8))
            new = normalize(rng.normal(size=8))
            out = ema_update(old, new, rng.uniform(0.6, 1.0), cfg)
            assert abs(np.linalg.norm(out) - 1.0) < 1e-6


class TestCosine:
    def test_identity(self):
        a = np.array([1.0, 2.0])
        assert cosine_similarity(a, a) == pytest.approx(1.0, abs=1e-12)

    def test_disjoint_support(self):
        assert cosine_similarity([1, 0, 0], [0, 0.5, 0.5]) == 0.0

    def test_45_degrees(self):
        assert cosine_similarity([1, 0], [1, 1]) == pytest.approx(0.707107, abs=1e-6)

    def test_zero_norm(self):
        assert cosine_similarity([0, 0], [1, 1]) == 0.0

    def test_scale_invariance_and_symmetry(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            a = rng.normal(size=5)
            b = rng.normal(size=5)
            alpha = rng.uniform(0.1, 10)
            assert cosine_similarity(a, b) == pytest.approx(cosine_similarity(b, a), abs=1e-12)
            assert cosine_similarity(alpha * a, b) == pytest.approx(
                cosine_similarity(a, b), abs=1e-9)


def flat_map(value, w=20, h=20):
    return DepthMap(width=w, height=h, depth=np.full((h, w), value, dtype=float))


class TestDepthRange:
    def test_constant_falls_back(self):
        assert frame_depth_range(flat_map(3.0)) == (0.0, 1.0)

    def test_min_max(self):
        d = np.full((4, 4), 1.5)
        d[2, 2] = 42.0
        assert frame_depth_range(DepthMap(width=4, height=4, depth=d)) == (1.5, 42.0)

    def test_all_invalid(self):
        assert frame_depth_range(flat_map(0.0)) == (0.0, 1.0)


class TestDepthHistogram:
    def test_uniform_one_hot(self):
        h = build_depth_histogram(flat_map(5.0), BBox(2, 2, 10, 10), 10, (0, 10))
        expected = np.zeros(10)
        expected[5] = 1.0
        assert np.array_equal(h, expected)

    def test_two_plane_split(self):
        d = np.zeros((10, 20))
        d[:, :10] = 2.0
        d[:, 10:] = 8.0
        m = DepthMap(width=20, height=10, depth=d)
        h = build_depth_histogram(m, BBox(0, 0, 20, 10), 10, (0, 10))
        assert h[2] == pytest.approx(0.5)
        assert h[8] == pytest.approx(0.5)
        assert h.sum() == pytest.approx(1.0, abs=1e-9)

    def test_box_outside_frame(self):
        h = build_depth_histogram(flat_map(5.0), BBox(100, 100, 10, 10), 10, (0, 10))
        assert not h.any()

    def test_invalid_pixels_excluded(self):
        h = build_depth_histogram(flat_map(0.0), BBox(0, 0, 5, 5), 8, (0, 10))
        assert not h.any()

    def test_mass_conservation(self):
        rng = np.random.default_rng(9)
        for _ in range(50):
            d = rng.uniform(0.5, 20.0, size=(16, 16))
            m = DepthMap(width=16, height=16, depth=d)
            box = BBox(*rng.uniform(0, 8, 2), *rng.uniform(1, 8, 2))
            h = build_depth_histogram(m, box, 12, frame_depth_range(m))
            assert h.sum() == pytest.approx(1.0, abs=1e-9)

    def test_depth_discrimination(self):
        d = np.zeros((10, 20))
        d[:, :10] = 3.0
        d[:, 10:] = 12.0
        m = DepthMap(width=20, height=10, depth=d)
        rng_f = frame_depth_range(m)
        near = build_depth_histogram(m, BBox(0, 0, 10, 10), 48, rng_f)
        far = build_depth_histogram(m, BBox(10, 0, 10, 10), 48, rng_f)
        assert cosine_similarity(near, far) == 0.0
        assert cosine_similarity(near, near) == pytest.approx(1.0, abs=1e-12)
