"""Pure-numpy implementations of the hot elementwise kernels.

Every function here has a numba twin in ``_kernels_numba`` with the same
signature and the same arithmetic, selected at import time by
``cgrnn.backend``.  Complex activations take stacked ``(2, n, batch)``
arrays (channel 0 real, channel 1 imaginary).

The modReLU magnitude denominator carries a small epsilon so the origin
maps to exactly zero instead of 0/0; EPS is part of the contract and both
backends share it.
"""

from __future__ import annotations

import numpy as np

EPS = 1e-12
_TINY = 1e-30  # guards x/|z| at the origin inside backward rules


def sigmoid(x: np.ndarray) -> np.ndarray:
    # exp(-|x|) <= 1 never overflows; the two branches cover both signs.
    t = np.exp(-np.abs(x))
    return np.where(x >= 0.0, 1.0 / (1.0 + t), t / (1.0 + t))


def modrelu_fwd(z: np.ndarray, b: np.ndarray):
    """ReLU on the magnitude, phase untouched: relu(|z| + b) * z / (|z| + eps).

    Returns (out, mag, scale); mag and scale are reused by the backward rule.
    """
    mag = np.sqrt(z[0] * z[0] + z[1] * z[1])
    scale = np.maximum(mag + b, 0.0) / (mag + EPS)
    return scale[None] * z, mag, scale


def modrelu_bwd(g: np.ndarray, z: np.ndarray, b: np.ndarray, mag: np.ndarray, scale: np.ndarray):
    """Gradient of modrelu_fwd. Returns (dz, db) with db summed over the batch axis."""
    ip = g[0] * z[0] + g[1] * z[1]
    denom = mag + EPS
    # Subgradient 0 exactly at the kink |z| + b == 0.
    act = (mag + b > 0.0).astype(np.float64)
    dscale_dmag = (act - scale) / denom
    coef = ip * dscale_dmag / np.maximum(mag, _TINY)
    dz = scale[None] * g + coef[None] * z
    db = np.sum(ip * act / denom, axis=-1, keepdims=True)
    return dz, db


def hirose_fwd(z: np.ndarray, m2: float):
    """Bounded magnitude activation tanh(|z| / m^2) * z / |z|; 0 at the origin.

    Returns (out, mag, scale).
    """
    mag = np.sqrt(z[0] * z[0] + z[1] * z[1])
    t = np.tanh(mag / m2)
    scale = t / (mag + EPS)
    return scale[None] * z, mag, scale


def hirose_bwd(g: np.ndarray, z: np.ndarray, m2: float, mag: np.ndarray, scale: np.ndarray):
    """Gradient of hirose_fwd with respect to z."""
    ip = g[0] * z[0] + g[1] * z[1]
    denom = mag + EPS
    t = scale * denom
    dscale_dmag = ((1.0 - t * t) / m2 - scale) / denom
    coef = ip * dscale_dmag / np.maximum(mag, _TINY)
    return scale[None] * g + coef[None] * z


def softmax_xent_fwd(logits: np.ndarray, labels: np.ndarray):
    """Cross entropy summed over the batch. logits (k, batch), labels (batch,) int.

    Returns (loss_sum, probs).
    """
    m = np.max(logits, axis=0)
    ex = np.exp(logits - m)
    zsum = np.sum(ex, axis=0)
    probs = ex / zsum
    idx = np.arange(labels.shape[0])
    loss = float(np.sum(np.log(zsum) + m - logits[labels, idx]))
    return loss, probs


def softmax_xent_bwd(g: float, probs: np.ndarray, labels: np.ndarray) -> np.ndarray:
    dlogits = probs * g
    idx = np.arange(labels.shape[0])
    dlogits[labels, idx] -= g
    return dlogits


def rmsprop_step(param: np.ndarray, grad: np.ndarray, acc: np.ndarray,
                 rho: float, lr: float, eps: float) -> None:
    """In-place RMSProp: acc <- rho*acc + (1-rho)*g^2; p -= lr*g/(sqrt(acc)+eps)."""
    acc *= rho
    acc += (1.0 - rho) * grad * grad
    param -= lr * grad / (np.sqrt(acc) + eps)
