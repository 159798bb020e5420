import numpy as np
import pytest

from schwarzpinn.backends import reference
from schwarzpinn.mlp import mlp_init


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


def random_net(rng, max_width=20, max_depth=3, dim=2):
    depth = int(rng.integers(1, max_depth + 1))
    width = int(rng.integers(2, max_width + 1))
    return mlp_init((dim, *([width] * depth), 1), int(rng.integers(0, 2**31)))


def fd_jet(theta, dims, x, eps=1e-4):
    """Central-difference oracle for the jet at one point.

    The first derivatives difference network values; the second derivatives
    difference the (separately checked) first-derivative entries, which
    keeps the oracle's own rounding noise far below the comparison
    tolerance.
    """
    d = x.size
    grad = np.zeros(d)
    hess = np.zeros(d)
    for i in range(d):
        xp, xm = x.copy(), x.copy()
        xp[i] += eps
        xm[i] -= eps
        vp = reference.values_batch(theta, dims, xp[None, :])[0]
        vm = reference.values_batch(theta, dims, xm[None, :])[0]
        grad[i] = (vp - vm) / (2 * eps)
        _, gp, _ = reference.jets_batch(theta, dims, xp[None, :])
        _, gm, _ = reference.jets_batch(theta, dims, xm[None, :])
        hess[i] = (gp[0, i] - gm[0, i]) / (2 * eps)
    return grad, hess


def assert_close_rel(actual, expected, rtol=1e-5, floor=1e-8):
    actual = np.asarray(actual, dtype=float)
    expected = np.asarray(expected, dtype=float)
    diff = np.abs(actual - expected)
    bound = np.maximum(rtol * np.abs(expected), floor)
    worst = np.max(diff - bound)
    assert worst <= 0, f"mismatch: |diff| up to {diff.max():.3e} exceeds bound"
