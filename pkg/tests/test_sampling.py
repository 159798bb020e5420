import numpy as np
import pytest

from schwarzpinn.sampling import Rect, grid_shape, latin_hypercube, segment_lhs
from schwarzpinn.sampling import test_grid as make_test_grid

UNIT = Rect((0.0, 0.0), (1.0, 1.0))


class TestLatinHypercube:
    def test_stratification(self):
        pts = latin_hypercube(4, UNIT, seed=0)
        for axis in range(2):
            strata = np.sort(np.floor(pts[:, axis] * 4).astype(int))
            assert np.array_equal(strata, [0, 1, 2, 3])

    def test_stratification_large(self):
        n = 137
        pts = latin_hypercube(n, Rect((-2.0, 5.0), (3.0, 6.0)), seed=9)
        lo = np.array([-2.0, 5.0])
        ext = np.array([5.0, 1.0])
        for axis in range(2):
            u = (pts[:, axis] - lo[axis]) / ext[axis]
            assert np.array_equal(np.sort(np.floor(u * n).astype(int)),
                                  np.arange(n))

    def test_single_point_inside(self):
        pts = latin_hypercube(1, Rect((2.0, -1.0), (3.0, 4.0)), seed=5)
        assert pts.shape == (1, 2)
        assert 2.0 <= pts[0, 0] <= 3.0 and -1.0 <= pts[0, 1] <= 4.0

    def test_mean_near_midpoint(self):
        pts = latin_hypercube(1000, UNIT, seed=42)
        assert np.all(np.abs(pts.mean(axis=0) - 0.5) < 0.02)

    def test_deterministic(self):
        a = latin_hypercube(20, UNIT, seed=3)
        b = latin_hypercube(20, UNIT, seed=3)
        assert np.array_equal(a, b)

    def test_rejects_degenerate(self):
        with pytest.raises(ValueError):
            latin_hypercube(4, Rect((0.0, 0.0), (0.0, 1.0)), seed=0)
        with pytest.raises(ValueError):
            latin_hypercube(0, UNIT, seed=0)


class TestSegmentLhs:
    def test_fixed_coordinate(self):
        pts = segment_lhs(3, (2.0, 0.0), (2.0, 1.0), seed=0)
        assert np.all(pts[:, 0] == 2.0)
        assert np.all((0 <= pts[:, 1]) & (pts[:, 1] <= 1))

    def test_strata_on_free_axis(self):
        n = 8
        pts = segment_lhs(n, (0.0, 3.0), (4.0, 3.0), seed=1)
        u = pts[:, 0] / 4.0
        assert np.array_equal(np.sort(np.floor(u * n).astype(int)),
                              np.arange(n))

    def test_deterministic(self):
        a = segment_lhs(5, (0.0, 0.0), (0.0, 2.0), seed=7)
        b = segment_lhs(5, (0.0, 0.0), (0.0, 2.0), seed=7)
        assert np.array_equal(a, b)

    def test_rejects_diagonal_segment(self):
        with pytest.raises(ValueError):
            segment_lhs(3, (0.0, 0.0), (1.0, 1.0), seed=0)


class TestTestGrid:
    def test_four_points_are_corners(self):
        pts = make_test_grid(UNIT, 4)
        corners = {(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)}
        assert {tuple(p) for p in pts} == corners

    def test_large_grid_rule(self):
        # aspect-matched tiling: cols = floor(sqrt(n * aspect)), capped total
        bounds = Rect((0.0, 0.0), (np.pi, 1.0))
        rows, cols = grid_shape(bounds, 4_000_000)
        assert rows * cols <= 4_000_000
        assert rows * cols >= 0.99 * 4_000_000
        assert cols / rows == pytest.approx(np.pi, rel=0.01)

    def test_uniform_spacing(self):
        pts = make_test_grid(Rect((0.0, 0.0), (2.0, 1.0)), 200)
        rows, cols = grid_shape(Rect((0.0, 0.0), (2.0, 1.0)), 200)
        xs = np.unique(pts[:, 0])
        ys = np.unique(pts[:, 1])
        assert len(xs) == cols and len(ys) == rows
        assert np.allclose(np.diff(xs), np.diff(xs)[0], atol=1e-12)
        assert np.allclose(np.diff(ys), np.diff(ys)[0], atol=1e-12)
        assert xs[0] == 0.0 and xs[-1] == 2.0

    def test_rejects_tiny(self):
        with pytest.raises(ValueError):
            make_test_grid(UNIT, 3)
