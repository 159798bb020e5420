"""Collocation-point generation: Latin hypercube samples and test grids.

Training points (interior, boundary, interface) are drawn once at setup by
Latin hypercube sampling and held fixed; test points come from a regular
grid.  All functions are pure and deterministic given their seed.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle [lo[0], hi[0]] x [lo[1], hi[1]] x ..."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def extents(self) -> np.ndarray:
        return np.asarray(self.hi) - np.asarray(self.lo)

    def contains(self, x: np.ndarray, tol: float = 0.0) -> np.ndarray:
        x = np.atleast_2d(x)
        lo = np.asarray(self.lo) - tol
        hi = np.asarray(self.hi) + tol
        return np.all((x >= lo) & (x <= hi), axis=1)

    def strictly_inside(self, x: np.ndarray, tol: float = 1e-12) -> np.ndarray:
        x = np.atleast_2d(x)
        lo = np.asarray(self.lo) + tol
        hi = np.asarray(self.hi) - tol
        return np.all((x > lo) & (x < hi), axis=1)


@dataclass
class PointSets:
    """Sampled collocation points of one (sub)domain.

    ``boundary`` holds (edge_tag, points) pairs for the physical edges that
    carry data; interface points live on the owning Interface records.
    """

    interior: np.ndarray
    boundary: list[tuple[str, np.ndarray]] = field(default_factory=list)

    @property
    def n_interior(self) -> int:
        return self.interior.shape[0]

    @property
    def n_boundary(self) -> int:
        return sum(p.shape[0] for _, p in self.boundary)

    def boundary_concat(self) -> tuple[np.ndarray, list[str]]:
        """All boundary points stacked, with the tag of each point."""
        pts = [p for _, p in self.boundary]
        tags = [t for t, p in self.boundary for _ in range(p.shape[0])]
        return np.vstack(pts) if pts else np.zeros((0, 2)), tags


def _lhs_unit(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """n points in [0,1)^d, one per stratum per axis."""
    out = np.empty((n, d))
    for axis in range(d):
        out[:, axis] = (rng.permutation(n) + rng.uniform(0.0, 1.0, n)) / n
    return out


def _rng_of(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def latin_hypercube(n: int, bounds: Rect, seed) -> np.ndarray:
    """n Latin-hypercube points in ``bounds``: per axis, exactly one point in
    each of the n equal strata, uniform within its stratum."""
    if n < 1:
        raise ValueError("need n >= 1")
    ext = bounds.extents
    if np.any(ext <= 0):
        raise ValueError(f"degenerate rectangle {bounds}")
    u = _lhs_unit(n, bounds.dim, _rng_of(seed))
    return np.asarray(bounds.lo) + u * ext


def segment_lhs(n: int, p0, p1, seed) -> np.ndarray:
    """Latin-hypercube sample on the axis-aligned segment from p0 to p1.

    Exactly one coordinate may vary between the endpoints; the others are
    held fixed.
    """
    if n < 1:
        raise ValueError("need n >= 1")
    p0 = np.asarray(p0, dtype=np.float64)
    p1 = np.asarray(p1, dtype=np.float64)
    free = np.nonzero(p1 != p0)[0]
    if free.size != 1:
        raise ValueError("segment must be axis-aligned and non-degenerate")
    axis = int(free[0])
    u = _lhs_unit(n, 1, _rng_of(seed))[:, 0]
    pts = np.tile(p0, (n, 1))
    pts[:, axis] = p0[axis] + u * (p1[axis] - p0[axis])
    return pts


def grid_shape(bounds: Rect, n_total: int) -> tuple[int, int]:
    """Rows x cols with rows*cols <= n_total and cols/rows near the aspect
    ratio of the rectangle (cols along axis 0)."""
    if n_total < 4:
        raise ValueError("need n_total >= 4")
    wx, wy = bounds.extents
    aspect = wx / wy
    cols = int(np.floor(np.sqrt(n_total * aspect)))
    cols = min(max(cols, 2), n_total // 2)
    rows = max(n_total // cols, 2)
    return rows, cols


def test_grid(bounds: Rect, n_total: int) -> np.ndarray:
    """Regular evaluation grid over the closed rectangle, boundary included.

    Returns (rows*cols, 2) points; the shape comes from :func:`grid_shape`.
    """
    rows, cols = grid_shape(bounds, n_total)
    xs = np.linspace(bounds.lo[0], bounds.hi[0], cols)
    ys = np.linspace(bounds.lo[1], bounds.hi[1], rows)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    return np.column_stack([gx.ravel(), gy.ravel()])


def points_to_csv(path, rows: list[tuple[float, float, str]]) -> None:
    """Write (x, y, tag) rows for plotting overlays of the sampling."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "y", "tag"])
        for r in rows:
            writer.writerow(r)
