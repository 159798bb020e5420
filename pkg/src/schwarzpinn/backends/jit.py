"""Numba-compiled network kernels.

Same contract as :mod:`schwarzpinn.backends.reference`, with the batch loop
and the per-layer linear algebra written out explicitly so numba can compile
them to tight machine code.  Networks here are tiny (tens of units), so the
per-point scalar loops beat BLAS-backed numpy calls by a wide margin.

Kernels are compiled lazily with ``cache=True`` (compiled code persists in
``__pycache__``) and ``nogil=True`` so concurrent subdomain training threads
actually overlap.
"""

from __future__ import annotations

import numpy as np
from numba import njit

NAME = "numba"


@njit(cache=True, nogil=True)
def _offsets(dims):
    n_layers = dims.shape[0] - 1
    w_off = np.empty(n_layers, np.int64)
    b_off = np.empty(n_layers, np.int64)
    o = 0
    for l in range(n_layers):
        w_off[l] = o
        o += dims[l] * dims[l + 1]
        b_off[l] = o
        o += dims[l + 1]
    return w_off, b_off


@njit(cache=True, nogil=True)
def values_batch(theta, dims, x):
    n, d = x.shape
    n_layers = dims.shape[0] - 1
    w_off, b_off = _offsets(dims)
    maxw = d
    for l in range(n_layers + 1):
        if dims[l] > maxw:
            maxw = dims[l]
    cur = np.empty(maxw)
    nxt = np.empty(maxw)
    out = np.empty(n)
    for j in range(n):
        for i in range(d):
            cur[i] = x[j, i]
        for l in range(n_layers):
            n_in = dims[l]
            n_out = dims[l + 1]
            for k in range(n_out):
                acc = theta[b_off[l] + k]
                base = w_off[l] + k * n_in
                for i2 in range(n_in):
                    acc += theta[base + i2] * cur[i2]
                nxt[k] = np.tanh(acc) if l < n_layers - 1 else acc
            for k in range(n_out):
                cur[k] = nxt[k]
        out[j] = cur[0]
    return out


@njit(cache=True, nogil=True)
def jets_batch(theta, dims, x):
    n, d = x.shape
    n_layers = dims.shape[0] - 1
    w_off, b_off = _offsets(dims)
    maxw = d
    for l in range(n_layers + 1):
        if dims[l] > maxw:
            maxw = dims[l]

    a = np.empty(maxw)
    ag = np.empty((d, maxw))
    ah = np.empty((d, maxw))
    za = np.empty(maxw)
    zg = np.empty((d, maxw))
    zh = np.empty((d, maxw))

    values = np.empty(n)
    grads = np.empty((n, d))
    hess = np.empty((n, d))

    for j in range(n):
        for i in range(d):
            a[i] = x[j, i]
            for i2 in range(d):
                ag[i, i2] = 1.0 if i == i2 else 0.0
                ah[i, i2] = 0.0
        for l in range(n_layers):
            n_in = dims[l]
            n_out = dims[l + 1]
            for k in range(n_out):
                acc = theta[b_off[l] + k]
                base = w_off[l] + k * n_in
                for i2 in range(n_in):
                    acc += theta[base + i2] * a[i2]
                za[k] = acc
                for i in range(d):
                    gacc = 0.0
                    hacc = 0.0
                    for i2 in range(n_in):
                        wv = theta[base + i2]
                        gacc += wv * ag[i, i2]
                        hacc += wv * ah[i, i2]
                    zg[i, k] = gacc
                    zh[i, k] = hacc
            if l < n_layers - 1:
                for k in range(n_out):
                    t = np.tanh(za[k])
                    s = 1.0 - t * t
                    u = t * s
                    a[k] = t
                    for i in range(d):
                        g = zg[i, k]
                        ag[i, k] = s * g
                        ah[i, k] = s * zh[i, k] - 2.0 * u * g * g
            else:
                for k in range(n_out):
                    a[k] = za[k]
                    for i in range(d):
                        ag[i, k] = zg[i, k]
                        ah[i, k] = zh[i, k]
        values[j] = a[0]
        for i in range(d):
            grads[j, i] = ag[i, 0]
            hess[j, i] = ah[i, 0]
    return values, grads, hess


@njit(cache=True, nogil=True)
def term_loss_grad(theta, dims, x, c_val, c_grad, c_hess, target):
    n, d = x.shape
    n_layers = dims.shape[0] - 1
    w_off, b_off = _offsets(dims)
    maxw = d
    for l in range(n_layers + 1):
        if dims[l] > maxw:
            maxw = dims[l]

    # forward caches: layer inputs (post-activation) and, for tanh stages,
    # the activation value plus pre-activation first/second derivatives
    av = np.empty((n_layers + 1, maxw))
    agr = np.empty((n_layers + 1, d, maxw))
    ahe = np.empty((n_layers + 1, d, maxw))
    pg = np.empty((n_layers, d, maxw))
    ph = np.empty((n_layers, d, maxw))

    # adjoint buffers (double-buffered across the affine reverse)
    ab = np.empty(maxw)
    agb = np.empty((d, maxw))
    ahb = np.empty((d, maxw))
    ab2 = np.empty(maxw)
    agb2 = np.empty((d, maxw))
    ahb2 = np.empty((d, maxw))

    grad = np.zeros_like(theta)
    loss = 0.0

    for j in range(n):
        for i in range(d):
            av[0, i] = x[j, i]
            for i2 in range(d):
                agr[0, i, i2] = 1.0 if i == i2 else 0.0
                ahe[0, i, i2] = 0.0
        for l in range(n_layers):
            n_in = dims[l]
            n_out = dims[l + 1]
            for k in range(n_out):
                acc = theta[b_off[l] + k]
                base = w_off[l] + k * n_in
                for i2 in range(n_in):
                    acc += theta[base + i2] * av[l, i2]
                for i in range(d):
                    gacc = 0.0
                    hacc = 0.0
                    for i2 in range(n_in):
                        wv = theta[base + i2]
                        gacc += wv * agr[l, i, i2]
                        hacc += wv * ahe[l, i, i2]
                    pg[l, i, k] = gacc
                    ph[l, i, k] = hacc
                if l < n_layers - 1:
                    t = np.tanh(acc)
                    s = 1.0 - t * t
                    u = t * s
                    av[l + 1, k] = t
                    for i in range(d):
                        g = pg[l, i, k]
                        agr[l + 1, i, k] = s * g
                        ahe[l + 1, i, k] = s * ph[l, i, k] - 2.0 * u * g * g
                else:
                    av[l + 1, k] = acc
                    for i in range(d):
                        agr[l + 1, i, k] = pg[l, i, k]
                        ahe[l + 1, i, k] = ph[l, i, k]

        r = c_val * av[n_layers, 0] - target[j]
        for i in range(d):
            r += c_grad[i] * agr[n_layers, i, 0] + c_hess[i] * ahe[n_layers, i, 0]
        loss += r * r
        coef = 2.0 * r / n

        ab[0] = coef * c_val
        for i in range(d):
            agb[i, 0] = coef * c_grad[i]
            ahb[i, 0] = coef * c_hess[i]

        for l in range(n_layers - 1, -1, -1):
            n_in = dims[l]
            n_out = dims[l + 1]
            if l < n_layers - 1:
                # tanh stage reverse: convert output-triplet adjoints into
                # pre-activation-triplet adjoints, in place
                for k in range(n_out):
                    t = av[l + 1, k]
                    s = 1.0 - t * t
                    u = t * s
                    du_dz = s * (s - 2.0 * t * t)
                    zacc = ab[k] * s
                    for i in range(d):
                        g = pg[l, i, k]
                        zacc += agb[i, k] * (-2.0 * u) * g
                        zacc += ahb[i, k] * ((-2.0 * u) * ph[l, i, k]
                                             - 2.0 * du_dz * g * g)
                        agb[i, k] = agb[i, k] * s - 4.0 * u * ahb[i, k] * g
                        ahb[i, k] = ahb[i, k] * s
                    ab[k] = zacc
            # affine stage reverse: parameter gradient plus input adjoints
            for k in range(n_out):
                grad[b_off[l] + k] += ab[k]
                base = w_off[l] + k * n_in
                for i2 in range(n_in):
                    acc = ab[k] * av[l, i2]
                    for i in range(d):
                        acc += agb[i, k] * agr[l, i, i2]
                        acc += ahb[i, k] * ahe[l, i, i2]
                    grad[base + i2] += acc
            if l > 0:
                for i2 in range(n_in):
                    acc = 0.0
                    for k in range(n_out):
                        acc += theta[w_off[l] + k * n_in + i2] * ab[k]
                    ab2[i2] = acc
                    for i in range(d):
                        gacc = 0.0
                        hacc = 0.0
                        for k in range(n_out):
                            wv = theta[w_off[l] + k * n_in + i2]
                            gacc += wv * agb[i, k]
                            hacc += wv * ahb[i, k]
                        agb2[i, i2] = gacc
                        ahb2[i, i2] = hacc
                for i2 in range(n_in):
                    ab[i2] = ab2[i2]
                    for i in range(d):
                        agb[i, i2] = agb2[i, i2]
                        ahb[i, i2] = ahb2[i, i2]

    return loss / n, grad
