"""Numba twins of the kernels in ``_kernels_numpy``.

Same signatures, same arithmetic, explicit loops so each kernel is one
fused pass instead of a chain of numpy temporaries.  fastmath stays off:
the two backends are expected to agree to roundoff.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from ._kernels_numpy import EPS, _TINY

_OPTS = dict(cache=True, nogil=True)


@njit(**_OPTS)
def sigmoid(x):
    out = np.empty_like(x)
    flat_in = x.ravel()
    flat_out = out.ravel()
    for i in range(flat_in.size):
        v = flat_in[i]
        t = math.exp(-abs(v))
        if v >= 0.0:
            flat_out[i] = 1.0 / (1.0 + t)
        else:
            flat_out[i] = t / (1.0 + t)
    return out


@njit(**_OPTS)
def modrelu_fwd(z, b):
    n, m = z.shape[1], z.shape[2]
    out = np.empty_like(z)
    mag = np.empty((n, m))
    scale = np.empty((n, m))
    for i in range(n):
        bi = b[i, 0]
        for j in range(m):
            zr = z[0, i, j]
            zi = z[1, i, j]
            r = math.sqrt(zr * zr + zi * zi)
            pre = r + bi
            s = (pre if pre > 0.0 else 0.0) / (r + EPS)
            mag[i, j] = r
            scale[i, j] = s
            out[0, i, j] = s * zr
            out[1, i, j] = s * zi
    return out, mag, scale


@njit(**_OPTS)
def modrelu_bwd(g, z, b, mag, scale):
    n, m = z.shape[1], z.shape[2]
    dz = np.empty_like(z)
    db = np.zeros((n, 1))
    for i in range(n):
        bi = b[i, 0]
        acc = 0.0
        for j in range(m):
            zr = z[0, i, j]
            zi = z[1, i, j]
            gr = g[0, i, j]
            gi = g[1, i, j]
            r = mag[i, j]
            s = scale[i, j]
            ip = gr * zr + gi * zi
            denom = r + EPS
            act = 1.0 if r + bi > 0.0 else 0.0
            coef = ip * ((act - s) / denom) / (r if r > _TINY else _TINY)
            dz[0, i, j] = s * gr + coef * zr
            dz[1, i, j] = s * gi + coef * zi
            acc += ip * act / denom
        db[i, 0] = acc
    return dz, db


@njit(**_OPTS)
def hirose_fwd(z, m2):
    n, m = z.shape[1], z.shape[2]
    out = np.empty_like(z)
    mag = np.empty((n, m))
    scale = np.empty((n, m))
    for i in range(n):
        for j in range(m):
            zr = z[0, i, j]
            zi = z[1, i, j]
            r = math.sqrt(zr * zr + zi * zi)
            s = math.tanh(r / m2) / (r + EPS)
            mag[i, j] = r
            scale[i, j] = s
            out[0, i, j] = s * zr
            out[1, i, j] = s * zi
    return out, mag, scale


@njit(**_OPTS)
def hirose_bwd(g, z, m2, mag, scale):
    n, m = z.shape[1], z.shape[2]
    dz = np.empty_like(z)
    for i in range(n):
        for j in range(m):
            zr = z[0, i, j]
            zi = z[1, i, j]
            gr = g[0, i, j]
            gi = g[1, i, j]
            r = mag[i, j]
            s = scale[i, j]
            ip = gr * zr + gi * zi
            denom = r + EPS
            t = s * denom
            coef = ip * (((1.0 - t * t) / m2 - s) / denom) / (r if r > _TINY else _TINY)
            dz[0, i, j] = s * gr + coef * zr
            dz[1, i, j] = s * gi + coef * zi
    return dz


@njit(**_OPTS)
def _softmax_xent_fwd_inner(logits, labels):
    k, batch = logits.shape
    probs = np.empty_like(logits)
    loss = 0.0
    for j in range(batch):
        m = logits[0, j]
        for i in range(1, k):
            if logits[i, j] > m:
                m = logits[i, j]
        zsum = 0.0
        for i in range(k):
            e = math.exp(logits[i, j] - m)
            probs[i, j] = e
            zsum += e
        for i in range(k):
            probs[i, j] /= zsum
        loss += math.log(zsum) + m - logits[labels[j], j]
    return loss, probs


def softmax_xent_fwd(logits, labels):
    loss, probs = _softmax_xent_fwd_inner(logits, labels)
    return float(loss), probs


@njit(**_OPTS)
def softmax_xent_bwd(g, probs, labels):
    k, batch = probs.shape
    dlogits = np.empty_like(probs)
    for j in range(batch):
        for i in range(k):
            dlogits[i, j] = probs[i, j] * g
        dlogits[labels[j], j] -= g
    return dlogits


@njit(**_OPTS)
def rmsprop_step(param, grad, acc, rho, lr, eps):
    p = param.ravel()
    g = grad.ravel()
    a = acc.ravel()
    for i in range(p.size):
        a[i] = rho * a[i] + (1.0 - rho) * g[i] * g[i]
        p[i] -= lr * g[i] / (math.sqrt(a[i]) + eps)
