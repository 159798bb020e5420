"""Problem definitions: Poisson and 1-D heat, plus reference machinery.

Every operator in scope is linear in the jet of the surrogate, so a problem
carries jet coefficients for its interior residual rather than opaque
callables: the residual at a point is

    c_grad . grad_u + c_hess . hess_diag_u + c_value * u - f(x).

The Poisson convention is -laplace(u) = f; the heat residual is
du/dt - alpha * d2u/dx2 with axis 0 = space and axis 1 = time.  Dirichlet
data lives in ``boundary(points, tag)``; ``constrained_edges`` names the
physical edges that actually carry data (the heat problem's final-time edge
carries none).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .sampling import Rect


@dataclass
class PdeProblem:
    name: str
    bounds: Rect
    c_value: float
    c_grad: np.ndarray
    c_hess: np.ndarray
    source: Callable[[np.ndarray], np.ndarray]
    boundary: Callable[[np.ndarray, str], np.ndarray]
    constrained_edges: frozenset[str]
    analytic: Callable[[np.ndarray], np.ndarray] | None = None
    extras: dict = field(default_factory=dict)

    def residual(self, values, grads, hess, points) -> np.ndarray:
        """Interior residual of a jet batch (zero for an exact solution)."""
        return (self.c_value * values + grads @ self.c_grad
                + hess @ self.c_hess - self.source(points))

    def transmission(self, values: np.ndarray) -> np.ndarray:
        """Interface trace operator; identity means Dirichlet transmission."""
        return values


def poisson_problem(variant: str = "sin2x") -> PdeProblem:
    """Poisson with Dirichlet data and a manufactured solution.

    ``sin2x``:   u = sin(2x) e^y   on [0, pi] x [0, 1]
    ``sin2pix``: u = sin(2 pi x) e^y on [0, pi] x [0, 1.6]
    """
    if variant == "sin2x":
        bounds = Rect((0.0, 0.0), (np.pi, 1.0))
        k = 2.0
    elif variant == "sin2pix":
        bounds = Rect((0.0, 0.0), (np.pi, 1.6))
        k = 2.0 * np.pi
    else:
        raise ValueError(f"unknown poisson variant {variant!r}")

    def exact(pts):
        pts = np.atleast_2d(pts)
        return np.sin(k * pts[:, 0]) * np.exp(pts[:, 1])

    def source(pts):
        # f = -laplace(u) = (k^2 - 1) sin(kx) e^y
        return (k * k - 1.0) * exact(pts)

    def boundary(pts, tag):
        return exact(pts)

    return PdeProblem(
        name=f"poisson_{variant}", bounds=bounds,
        c_value=0.0, c_grad=np.zeros(2), c_hess=np.array([-1.0, -1.0]),
        source=source, boundary=boundary,
        constrained_edges=frozenset(("xmin", "xmax", "ymin", "ymax")),
        analytic=exact,
    )


def heat_problem(center: float = 5.0, width: float = 1.0,
                 amplitude: float = 1.0, alpha: float = 4.0) -> PdeProblem:
    """1-D heat equation on [0, 10] x [0, 0.3] (axis 1 is time).

    A Gaussian bump heats the bar at t = 0 and both ends are held at zero;
    no condition applies on the final-time edge.
    """
    if width <= 0:
        raise ValueError("width must be positive")
    bounds = Rect((0.0, 0.0), (10.0, 0.3))

    def t_init(xcoord):
        return amplitude * np.exp(-((np.asarray(xcoord) - center) ** 2)
                                  / (2.0 * width ** 2))

    def source(pts):
        return np.zeros(np.atleast_2d(pts).shape[0])

    def boundary(pts, tag):
        pts = np.atleast_2d(pts)
        if tag in ("xmin", "xmax"):
            return np.zeros(pts.shape[0])
        if tag == "ymin":
            return t_init(pts[:, 0])
        raise ValueError(f"edge {tag!r} carries no data for the heat problem")

    return PdeProblem(
        name="heat", bounds=bounds,
        c_value=0.0, c_grad=np.array([0.0, 1.0]),
        c_hess=np.array([-alpha, 0.0]),
        source=source, boundary=boundary,
        constrained_edges=frozenset(("xmin", "xmax", "ymin")),
        analytic=None,
        extras={"alpha": alpha, "t_init": t_init},
    )


@dataclass
class FdSolution:
    """Finite-difference heat reference on a regular space-time grid.

    ``grid[n, i]`` is the temperature at time level n and spatial node i;
    level 0 is the initial profile and the edge columns are held at zero
    from the first step on.
    """

    grid: np.ndarray
    xs: np.ndarray
    ts: np.ndarray
    dx: float
    dt: float
    alpha: float

    def interp(self, pts: np.ndarray) -> np.ndarray:
        """Bilinear interpolation of the grid at (x, t) points."""
        pts = np.atleast_2d(pts)
        fx = np.clip((pts[:, 0] - self.xs[0]) / self.dx, 0, len(self.xs) - 1)
        ft = np.clip((pts[:, 1] - self.ts[0]) / self.dt, 0, len(self.ts) - 1)
        i0 = np.minimum(fx.astype(int), len(self.xs) - 2)
        n0 = np.minimum(ft.astype(int), len(self.ts) - 2)
        ax = fx - i0
        at = ft - n0
        g = self.grid
        return ((1 - at) * ((1 - ax) * g[n0, i0] + ax * g[n0, i0 + 1])
                + at * ((1 - ax) * g[n0 + 1, i0] + ax * g[n0 + 1, i0 + 1]))


def _thomas(lower, diag, upper, rhs):
    """Solve a tridiagonal system in place-free form."""
    n = diag.size
    cp = np.empty(n)
    dp = np.empty(n)
    cp[0] = upper[0] / diag[0]
    dp[0] = rhs[0] / diag[0]
    for i in range(1, n):
        m = diag[i] - lower[i] * cp[i - 1]
        cp[i] = upper[i] / m if i < n - 1 else 0.0
        dp[i] = (rhs[i] - lower[i] * dp[i - 1]) / m
    x = np.empty(n)
    x[-1] = dp[-1]
    for i in range(n - 2, -1, -1):
        x[i] = dp[i] - cp[i] * x[i + 1]
    return x


def fd_heat_solve(problem: PdeProblem, nx: int = 100,
                  nt: int = 240) -> FdSolution:
    """Crank-Nicolson reference solve of the heat problem.

    ``nx`` spatial nodes, ``nt`` time steps (nt + 1 stored levels).
    Unconditionally stable, second order in both steps.
    """
    if nx < 3 or nt < 1:
        raise ValueError("need nx >= 3 and nt >= 1")
    alpha = problem.extras["alpha"]
    t_init = problem.extras["t_init"]
    (x0, t0), (x1, t1) = problem.bounds.lo, problem.bounds.hi
    xs = np.linspace(x0, x1, nx)
    ts = np.linspace(t0, t1, nt + 1)
    dx = xs[1] - xs[0]
    dt = ts[1] - ts[0]
    r = alpha * dt / (dx * dx)

    grid = np.zeros((nt + 1, nx))
    grid[0] = t_init(xs)

    m = nx - 2  # interior unknowns
    lower = np.full(m, -r / 2.0)
    diag = np.full(m, 1.0 + r)
    upper = np.full(m, -r / 2.0)
    for n in range(nt):
        u = grid[n]
        rhs = u[1:-1] + (r / 2.0) * (u[:-2] - 2.0 * u[1:-1] + u[2:])
        grid[n + 1, 1:-1] = _thomas(lower, diag, upper, rhs)
        # edge columns stay at the zero Dirichlet value
    return FdSolution(grid=grid, xs=xs, ts=ts, dx=dx, dt=dt, alpha=alpha)


def relative_l2(pred, truth) -> float:
    """(sum |truth - pred|^2 / sum |truth|^2) ** 0.5 over matching samples."""
    pred = np.asarray(pred, dtype=np.float64).ravel()
    truth = np.asarray(truth, dtype=np.float64).ravel()
    if pred.shape != truth.shape or pred.size == 0:
        raise ValueError("pred and truth must be equal-length, non-empty")
    denom = float(np.sum(truth * truth))
    if denom == 0.0:
        raise ValueError("truth is identically zero")
    return float(np.sqrt(np.sum((truth - pred) ** 2) / denom))


def relative_change(new, old) -> float:
    """Relative L2 distance between successive snapshots, safe at zero.

    Identical vectors give 0 even when both are zero; a nonzero change from
    an all-zero snapshot counts as infinitely large.
    """
    new = np.asarray(new, dtype=np.float64).ravel()
    old = np.asarray(old, dtype=np.float64).ravel()
    num = float(np.sum((new - old) ** 2))
    if num == 0.0:
        return 0.0
    denom = float(np.sum(old * old))
    return float(np.sqrt(num / denom)) if denom > 0.0 else np.inf
