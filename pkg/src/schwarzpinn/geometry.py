"""Overlapping rectangular decompositions of a 2-D domain.

A domain is split into a uniform nx x ny grid of subdomains, each grown by
half the overlap width delta on every interior side.  The module exposes the
interface segments (subdomain edges not on the physical boundary), the
neighbor/donor relations used to exchange interface values, a continuous
partition of unity that vanishes on interior interfaces, and the composite
(glued) evaluation of the per-subdomain networks.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import backends
from .mlp import Mlp
from .sampling import PointSets, Rect

SIDES = ("xmin", "xmax", "ymin", "ymax")


def side_segment(rect: Rect, side: str):
    """Endpoints of one side of a rectangle."""
    (x0, y0), (x1, y1) = rect.lo, rect.hi
    return {
        "xmin": ((x0, y0), (x0, y1)),
        "xmax": ((x1, y0), (x1, y1)),
        "ymin": ((x0, y0), (x1, y0)),
        "ymax": ((x0, y1), (x1, y1)),
    }[side]


@dataclass
class Interface:
    """One artificial-boundary segment of a subdomain.

    ``values`` is the Dirichlet target the owner trains against; it is
    rewritten between training rounds, never during them.  ``donor_values``
    keeps the neighbor-only average (before any coarse blending) for the
    interface convergence test.
    """

    owner_id: int
    side: str
    p0: tuple[float, float]
    p1: tuple[float, float]
    points: np.ndarray | None = None
    donor_ids: list[np.ndarray] = field(default_factory=list)
    values: np.ndarray | None = None
    donor_values: np.ndarray | None = None


@dataclass
class Subdomain:
    id: int
    bounds: Rect
    grid_pos: tuple[int, int]
    neighbor_ids: list[int] = field(default_factory=list)
    physical_sides: list[str] = field(default_factory=list)
    interface_sides: list[str] = field(default_factory=list)
    points: PointSets | None = None
    net: Mlp | None = None


@dataclass
class Decomposition:
    bounds: Rect
    grid: tuple[int, int]
    overlap: float
    subdomains: list[Subdomain]
    interfaces: list[Interface]

    @property
    def n_subdomains(self) -> int:
        return len(self.subdomains)

    def interfaces_of(self, sid: int) -> list[Interface]:
        return [itf for itf in self.interfaces if itf.owner_id == sid]


def build_decomposition(bounds: Rect, nx: int, ny: int,
                        delta: float) -> Decomposition:
    """Uniform nx x ny overlapping decomposition with overlap width delta.

    Subdomain (ix, iy) spans the uniform cell grown by delta/2 on each side,
    clipped to the domain; delta is an absolute length.
    """
    if nx < 1 or ny < 1:
        raise ValueError("subdomain counts must be >= 1")
    wx, wy = bounds.extents
    if nx > 1 or ny > 1:
        if delta <= 0:
            raise ValueError("overlap must be positive for multi-subdomain grids")
        cell = min(wx / nx if nx > 1 else np.inf, wy / ny if ny > 1 else np.inf)
        if delta >= cell:
            raise ValueError(
                f"overlap {delta} too large for cell size {cell}")
    xs = np.linspace(bounds.lo[0], bounds.hi[0], nx + 1)
    ys = np.linspace(bounds.lo[1], bounds.hi[1], ny + 1)
    half = delta / 2.0

    subs: list[Subdomain] = []
    for iy in range(ny):
        for ix in range(nx):
            lo = (max(bounds.lo[0], xs[ix] - half) if ix > 0 else bounds.lo[0],
                  max(bounds.lo[1], ys[iy] - half) if iy > 0 else bounds.lo[1])
            hi = (min(bounds.hi[0], xs[ix + 1] + half) if ix < nx - 1 else bounds.hi[0],
                  min(bounds.hi[1], ys[iy + 1] + half) if iy < ny - 1 else bounds.hi[1])
            rect = Rect(lo, hi)
            physical, artificial = [], []
            for side, cond in (("xmin", ix == 0), ("xmax", ix == nx - 1),
                               ("ymin", iy == 0), ("ymax", iy == ny - 1)):
                (physical if cond else artificial).append(side)
            subs.append(Subdomain(id=iy * nx + ix, bounds=rect,
                                  grid_pos=(ix, iy),
                                  physical_sides=physical,
                                  interface_sides=artificial))

    for a in subs:
        for b in subs:
            if a.id == b.id:
                continue
            lo = np.maximum(a.bounds.lo, b.bounds.lo)
            hi = np.minimum(a.bounds.hi, b.bounds.hi)
            if np.all(hi - lo > 0):
                a.neighbor_ids.append(b.id)

    interfaces = [Interface(owner_id=s.id, side=side,
                            p0=side_segment(s.bounds, side)[0],
                            p1=side_segment(s.bounds, side)[1])
                  for s in subs for side in s.interface_sides]
    return Decomposition(bounds=bounds, grid=(nx, ny), overlap=delta,
                         subdomains=subs, interfaces=interfaces)


def resolve_donors(dec: Decomposition, itf: Interface) -> list[np.ndarray]:
    """Per-point donor subdomains of an interface.

    A donor is a neighbor of the owner whose interior contains the point;
    several donors (corner overlaps) are all kept and later averaged.  Falls
    back to closed containment for points on a donor's edge.
    """
    owner = dec.subdomains[itf.owner_id]
    cands = [dec.subdomains[r] for r in owner.neighbor_ids]
    donors = []
    for p in itf.points:
        ids = [c.id for c in cands if c.bounds.strictly_inside(p)[0]]
        if not ids:
            ids = [c.id for c in cands if c.bounds.contains(p, tol=1e-12)[0]]
        if not ids:
            raise ValueError(
                f"interface point {p} of subdomain {owner.id} has no donor")
        donors.append(np.asarray(ids, dtype=np.int64))
    return donors


def partition_weights(dec: Decomposition, x) -> np.ndarray:
    """Partition-of-unity weights, shape (n_subdomains, N).

    Per axis, a piecewise-linear hat ramps from 0 on each interior-facing
    edge to 1 at distance delta; physical edges keep weight 1.  Axis hats
    multiply and the result is normalized over subdomains, so the weights
    are continuous, nonnegative, vanish on interior interfaces, and sum
    to 1 everywhere in the domain.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    n = x.shape[0]
    raw = np.zeros((dec.n_subdomains, n))
    delta = dec.overlap
    for s in dec.subdomains:
        inside = s.bounds.contains(x)
        w = np.ones(n)
        for axis, lo_side, hi_side in ((0, "xmin", "xmax"), (1, "ymin", "ymax")):
            lo, hi = s.bounds.lo[axis], s.bounds.hi[axis]
            hat = np.ones(n)
            if lo_side in s.interface_sides:
                hat = np.minimum(hat, np.clip((x[:, axis] - lo) / delta, 0.0, 1.0))
            if hi_side in s.interface_sides:
                hat = np.minimum(hat, np.clip((hi - x[:, axis]) / delta, 0.0, 1.0))
            w *= hat
        raw[s.id] = np.where(inside, w, 0.0)
    sums = raw.sum(axis=0)
    if np.any(sums <= 0.0):
        bad = x[sums <= 0.0][0]
        raise ValueError(f"point {bad} is outside the domain")
    return raw / sums


def partition_of_unity(dec: Decomposition, x) -> np.ndarray:
    """Weight vector (one entry per subdomain) at a single point."""
    return partition_weights(dec, np.asarray(x)[None, :])[:, 0]


def composite_eval(dec: Decomposition, x, chunk: int = 100_000) -> np.ndarray:
    """Glued global prediction: sum of chi_s(x) * h_s(x) over subdomains.

    Each network is evaluated only where its weight is positive.  All
    networks must be quiescent (call between training rounds only).
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    out = np.empty(x.shape[0])
    for start in range(0, x.shape[0], chunk):
        xb = x[start:start + chunk]
        w = partition_weights(dec, xb)
        acc = np.zeros(xb.shape[0])
        for s in dec.subdomains:
            mask = w[s.id] > 0.0
            if np.any(mask):
                vals = backends.values_batch(
                    s.net.theta, s.net.dims, np.ascontiguousarray(xb[mask]))
                acc[mask] += w[s.id][mask] * vals
        out[start:start + chunk] = acc
    return out


def decomposition_to_json(dec: Decomposition, path=None):
    """Dump bounds, subdomain rectangles and interface segments as JSON."""
    doc = {
        "bounds": {"lo": list(dec.bounds.lo), "hi": list(dec.bounds.hi)},
        "grid": list(dec.grid),
        "overlap": dec.overlap,
        "subdomains": [
            {"id": s.id, "lo": list(s.bounds.lo), "hi": list(s.bounds.hi),
             "neighbors": list(s.neighbor_ids),
             "physical_sides": s.physical_sides,
             "interface_sides": s.interface_sides}
            for s in dec.subdomains
        ],
        "interfaces": [
            {"owner": itf.owner_id, "side": itf.side,
             "p0": list(itf.p0), "p1": list(itf.p1)}
            for itf in dec.interfaces
        ],
    }
    if path is not None:
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=2)
    return doc


def points_overlay_rows(dec: Decomposition) -> list[tuple[float, float, str]]:
    """(x, y, tag) rows of every sampled point, for plotting overlays."""
    rows = []
    for s in dec.subdomains:
        if s.points is None:
            continue
        for p in s.points.interior:
            rows.append((p[0], p[1], f"s{s.id}:interior"))
        for tag, pts in s.points.boundary:
            for p in pts:
                rows.append((p[0], p[1], f"s{s.id}:boundary:{tag}"))
    for k, itf in enumerate(dec.interfaces):
        if itf.points is None:
            continue
        for p in itf.points:
            rows.append((p[0], p[1], f"s{itf.owner_id}:interface:{itf.side}"))
    return rows
