"""Small dense tanh networks with exact spatial derivatives.

These are the subdomain and coarse surrogates: fully connected networks with
tanh hidden activations and a single identity output unit.  Besides plain
evaluation, the module exposes the jet of the network (value, gradient,
diagonal Hessian with respect to the inputs) and exact parameter gradients
of mean-of-squares residual losses built from jet entries.

Parameters live in one flat float64 vector.  Canonical layout, fixed so
optimizer state and gradient checks stay portable: for each layer in order,
the row-major weight matrix followed by the bias vector.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import backends


@dataclass
class Mlp:
    """Flat-parameter tanh network; ``layer_dims`` = [d, w, ..., w, 1]."""

    layer_dims: tuple[int, ...]
    theta: np.ndarray
    seed: int | None = None

    @property
    def dims(self) -> np.ndarray:
        return np.asarray(self.layer_dims, dtype=np.int64)

    @property
    def n_params(self) -> int:
        return self.theta.size

    @property
    def input_dim(self) -> int:
        return self.layer_dims[0]

    def weights(self, layer: int) -> np.ndarray:
        """Row-major weight matrix of ``layer`` as a view into ``theta``."""
        w_start, n_in, n_out = self._layer_offset(layer)
        return self.theta[w_start:w_start + n_in * n_out].reshape(n_out, n_in)

    def biases(self, layer: int) -> np.ndarray:
        w_start, n_in, n_out = self._layer_offset(layer)
        return self.theta[w_start + n_in * n_out:w_start + n_in * n_out + n_out]

    def _layer_offset(self, layer: int):
        o = 0
        for l in range(layer):
            o += self.layer_dims[l] * self.layer_dims[l + 1] + self.layer_dims[l + 1]
        return o, self.layer_dims[layer], self.layer_dims[layer + 1]

    def copy(self) -> "Mlp":
        return Mlp(self.layer_dims, self.theta.copy(), self.seed)


@dataclass
class EvalJet:
    """Value and input derivatives of the network at one point."""

    value: float
    grad_x: np.ndarray
    hess_diag: np.ndarray


@dataclass
class ResidualTerm:
    """One mean-of-squares loss term, linear in the jet of the network.

    The pointwise residual is
    ``c_value*u + c_grad . grad_u + c_hess . hess_diag_u - target``.
    ``weight`` scales the term's contribution to a composite loss.
    """

    points: np.ndarray
    target: np.ndarray
    c_value: float = 0.0
    c_grad: np.ndarray | None = None
    c_hess: np.ndarray | None = None
    weight: float = 1.0
    label: str = ""

    def __post_init__(self):
        self.points = np.ascontiguousarray(self.points, dtype=np.float64)
        if self.points.ndim != 2:
            raise ValueError("points must be (N, d)")
        n, d = self.points.shape
        if n == 0:
            raise ValueError(f"empty batch for residual term {self.label!r}")
        self.target = np.ascontiguousarray(self.target, dtype=np.float64)
        if self.target.shape != (n,):
            raise ValueError(
                f"target length {self.target.shape} does not match {n} points"
            )
        self.c_grad = (np.zeros(d) if self.c_grad is None
                       else np.ascontiguousarray(self.c_grad, dtype=np.float64))
        self.c_hess = (np.zeros(d) if self.c_hess is None
                       else np.ascontiguousarray(self.c_hess, dtype=np.float64))
        if self.c_grad.shape != (d,) or self.c_hess.shape != (d,):
            raise ValueError("coefficient vectors must have length d")

    def subset(self, idx: np.ndarray) -> "ResidualTerm":
        return ResidualTerm(self.points[idx], self.target[idx], self.c_value,
                            self.c_grad, self.c_hess, self.weight, self.label)


def param_count(layer_dims: Sequence[int]) -> int:
    return sum(layer_dims[l] * layer_dims[l + 1] + layer_dims[l + 1]
               for l in range(len(layer_dims) - 1))


def _validate_dims(layer_dims: Sequence[int]):
    dims = tuple(int(v) for v in layer_dims)
    if len(dims) < 3:
        raise ValueError("need at least one hidden layer: [d, w, ..., 1]")
    if any(v < 1 for v in dims):
        raise ValueError("all layer widths must be >= 1")
    if dims[-1] != 1:
        raise ValueError(f"output dimension must be 1, got {dims[-1]}")
    return dims


def mlp_init(layer_dims: Sequence[int], seed: int) -> Mlp:
    """Glorot-uniform weights, zero biases, deterministic in ``seed``."""
    dims = _validate_dims(layer_dims)
    rng = np.random.default_rng(seed)
    theta = np.zeros(param_count(dims))
    o = 0
    for l in range(len(dims) - 1):
        n_in, n_out = dims[l], dims[l + 1]
        bound = np.sqrt(6.0 / (n_in + n_out))
        theta[o:o + n_in * n_out] = rng.uniform(-bound, bound, n_in * n_out)
        o += n_in * n_out + n_out  # biases stay zero
    return Mlp(dims, theta, seed)


def _as_batch(net: Mlp, x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != net.input_dim:
        raise ValueError(
            f"expected points of dimension {net.input_dim}, got shape {x.shape}"
        )
    return np.ascontiguousarray(x), single


def mlp_eval(net: Mlp, x):
    """Evaluate at one point (returns float) or a batch (returns (N,))."""
    xb, single = _as_batch(net, x)
    vals = backends.values_batch(net.theta, net.dims, xb)
    return float(vals[0]) if single else vals


def mlp_eval_jet(net: Mlp, x):
    """Jet at one point (returns :class:`EvalJet`) or batch (three arrays)."""
    xb, single = _as_batch(net, x)
    v, g, h = backends.jets_batch(net.theta, net.dims, xb)
    if single:
        return EvalJet(float(v[0]), g[0], h[0])
    return v, g, h


def term_losses(net: Mlp, terms: Sequence[ResidualTerm]) -> list[float]:
    """Unweighted mean-of-squares loss of each term (no gradient)."""
    out = []
    for term in terms:
        v, g, h = backends.jets_batch(net.theta, net.dims, term.points)
        r = (term.c_value * v + g @ term.c_grad + h @ term.c_hess
             - term.target)
        out.append(float(np.mean(r * r)))
    return out


def loss_param_grad(net: Mlp, terms: Sequence[ResidualTerm]):
    """Weighted total loss over all terms and its exact parameter gradient.

    Raises if any term produces a non-finite loss, naming the term.
    """
    if not terms:
        raise ValueError("no residual terms given")
    total = 0.0
    grad = np.zeros_like(net.theta)
    for term in terms:
        loss, g = backends.term_loss_grad(
            net.theta, net.dims, term.points, term.c_value,
            term.c_grad, term.c_hess, term.target)
        if not np.isfinite(loss):
            raise FloatingPointError(
                f"non-finite loss in residual term {term.label!r}")
        total += term.weight * loss
        if term.weight != 0.0:
            grad += term.weight * g
    return total, grad


def save_checkpoint(net: Mlp, path, adam=None, extra: dict | None = None) -> None:
    """Write the network as JSON: dims, per-layer weight/bias arrays, seed.

    Optimizer state (an AdamState) is embedded under ``"adam"`` when given.
    """
    doc = {
        "layer_dims": list(net.layer_dims),
        "weights": [net.weights(l).tolist() for l in range(len(net.layer_dims) - 1)],
        "biases": [net.biases(l).tolist() for l in range(len(net.layer_dims) - 1)],
        "seed": net.seed,
    }
    if adam is not None:
        doc["adam"] = adam.to_dict()
    if extra:
        doc.update(extra)
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_checkpoint(path) -> tuple[Mlp, dict]:
    """Read a checkpoint; returns the network and any extra fields."""
    with open(path) as fh:
        doc = json.load(fh)
    dims = tuple(doc["layer_dims"])
    theta = np.zeros(param_count(dims))
    o = 0
    for l in range(len(dims) - 1):
        n_in, n_out = dims[l], dims[l + 1]
        theta[o:o + n_in * n_out] = np.asarray(doc["weights"][l]).ravel()
        o += n_in * n_out
        theta[o:o + n_out] = np.asarray(doc["biases"][l])
        o += n_out
    net = Mlp(dims, theta, doc.get("seed"))
    extra = {k: v for k, v in doc.items()
             if k not in ("layer_dims", "weights", "biases", "seed")}
    return net, extra
