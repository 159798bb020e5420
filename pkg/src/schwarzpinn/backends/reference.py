"""Pure-numpy reference implementation of the network kernels.

All heavy numeric work of the package funnels through three functions:

* ``values_batch``   -- forward evaluation of a tanh MLP at a batch of points
* ``jets_batch``     -- forward propagation of (value, per-axis first
  derivative, per-axis second derivative), the quantities every residual
  operator in this package consumes
* ``term_loss_grad`` -- mean-of-squares loss of one residual term plus its
  exact gradient with respect to the flat parameter vector (reverse pass
  over the jet propagation)

Parameters are stored flat: for each layer, the row-major weight matrix
followed by the bias vector.  ``dims`` holds the layer widths, so a network
with dims ``[2, 20, 1]`` stores ``20*2`` weights, ``20`` biases, ``1*20``
weights and ``1`` bias, in that order.

A residual term is a linear functional of the jet with a per-point target:

    r_j = c_val * u(x_j) + sum_i c_grad[i] * du/dx_i + c_hess[i] * d2u/dx_i2
          - target_j

and the term loss is ``mean_j r_j**2``.  Every operator in scope (Laplacian,
first time derivative, Dirichlet traces) fits this form.
"""

from __future__ import annotations

import numpy as np

NAME = "numpy"


def _layers(theta, dims):
    """Yield (W, b) views into the flat parameter vector, layer by layer."""
    o = 0
    for l in range(len(dims) - 1):
        n_in, n_out = int(dims[l]), int(dims[l + 1])
        w = theta[o:o + n_in * n_out].reshape(n_out, n_in)
        o += n_in * n_out
        b = theta[o:o + n_out]
        o += n_out
        yield w, b


def values_batch(theta, dims, x):
    """Evaluate the network at points ``x`` of shape (N, d); returns (N,)."""
    n_layers = len(dims) - 1
    a = x
    for l, (w, b) in enumerate(_layers(theta, dims)):
        z = a @ w.T + b
        a = np.tanh(z) if l < n_layers - 1 else z
    return a[:, 0]


def jets_batch(theta, dims, x):
    """Propagate value, gradient and diagonal Hessian through the network.

    Returns ``(values (N,), grads (N, d), hess (N, d))`` where
    ``grads[j, i] = du/dx_i`` and ``hess[j, i] = d2u/dx_i2`` at ``x[j]``.
    """
    n, d = x.shape
    n_layers = len(dims) - 1
    a = x
    ag = np.broadcast_to(np.eye(d), (n, d, d)).copy()
    ah = np.zeros((n, d, d))
    for l, (w, b) in enumerate(_layers(theta, dims)):
        z = a @ w.T + b
        zg = ag @ w.T
        zh = ah @ w.T
        if l < n_layers - 1:
            t = np.tanh(z)
            s = 1.0 - t * t
            a = t
            ag = s[:, None, :] * zg
            ah = s[:, None, :] * zh - (2.0 * t * s)[:, None, :] * zg * zg
        else:
            a, ag, ah = z, zg, zh
    return a[:, 0], ag[:, :, 0], ah[:, :, 0]


def term_loss_grad(theta, dims, x, c_val, c_grad, c_hess, target):
    """Mean-of-squares residual loss and its parameter gradient.

    The reverse pass walks the cached jet-propagation states backwards:
    through the identity output layer, then alternating tanh and affine
    stages, accumulating d(loss)/d(theta) into a flat vector aligned with
    the canonical parameter layout.
    """
    n, d = x.shape
    n_layers = len(dims) - 1

    # forward, caching per-layer inputs and pre-activation derivatives
    a = x
    ag = np.broadcast_to(np.eye(d), (n, d, d)).copy()
    ah = np.zeros((n, d, d))
    inputs = []     # (a, ag, ah) entering each affine stage
    hidden = []     # (t, zg, zh) of each tanh stage
    for l, (w, b) in enumerate(_layers(theta, dims)):
        inputs.append((a, ag, ah))
        z = a @ w.T + b
        zg = ag @ w.T
        zh = ah @ w.T
        if l < n_layers - 1:
            t = np.tanh(z)
            s = 1.0 - t * t
            hidden.append((t, zg, zh))
            a = t
            ag = s[:, None, :] * zg
            ah = s[:, None, :] * zh - (2.0 * t * s)[:, None, :] * zg * zg
        else:
            a, ag, ah = z, zg, zh

    v, g, h = a[:, 0], ag[:, :, 0], ah[:, :, 0]
    r = c_val * v + g @ c_grad + h @ c_hess - target
    loss = float(np.mean(r * r))

    # adjoint seeds on the (scalar) output triplet; factor 2/N from the mean
    coef = (2.0 / n) * r
    zb = np.zeros((n, 1))
    zgb = np.zeros((n, d, 1))
    zhb = np.zeros((n, d, 1))
    zb[:, 0] = coef * c_val
    zgb[:, :, 0] = coef[:, None] * c_grad
    zhb[:, :, 0] = coef[:, None] * c_hess

    grad = np.zeros_like(theta)
    ws = [w for w, _ in _layers(theta, dims)]
    offsets = []
    o = 0
    for l in range(n_layers):
        n_in, n_out = int(dims[l]), int(dims[l + 1])
        offsets.append((o, o + n_in * n_out))
        o += n_in * n_out + n_out

    for l in range(n_layers - 1, -1, -1):
        if l < n_layers - 1:
            # reverse the tanh stage: adjoints w.r.t. (t, tg, th) become
            # adjoints w.r.t. the pre-activation triplet (z, zg, zh)
            t, zg, zh = hidden[l]
            s = 1.0 - t * t
            u = t * s
            du_dz = s * (s - 2.0 * t * t)
            new_zb = (
                zb * s
                + np.sum(zgb * (-2.0 * u)[:, None, :] * zg, axis=1)
                + np.sum(zhb * ((-2.0 * u)[:, None, :] * zh
                                - (2.0 * du_dz)[:, None, :] * zg * zg), axis=1)
            )
            new_zgb = zgb * s[:, None, :] - (4.0 * u)[:, None, :] * zhb * zg
            zhb = zhb * s[:, None, :]
            zb, zgb = new_zb, new_zgb

        # reverse the affine stage
        a_in, ag_in, ah_in = inputs[l]
        w = ws[l]
        w_start, w_end = offsets[l]
        wbar = (np.einsum("no,ni->oi", zb, a_in)
                + np.einsum("ndo,ndi->oi", zgb, ag_in)
                + np.einsum("ndo,ndi->oi", zhb, ah_in))
        grad[w_start:w_end] += wbar.ravel()
        grad[w_end:w_end + w.shape[0]] += zb.sum(axis=0)
        zb = zb @ w
        zgb = zgb @ w
        zhb = zhb @ w

    return loss, grad
