"""Initialization and the hybrid optimizer.

Unconstrained blocks train with RMSProp under global-norm clipping.
Unitary (or orthogonal) state transition matrices train multiplicatively
on the Stiefel manifold: from the gradient G and current point W the
skew-Hermitian lift

    A = G W^H - W G^H

is mapped through the Cayley transform, giving the update

    W_next = (I + lam/2 A)^{-1} (I - lam/2 A) W.

A Cayley transform of a skew-Hermitian matrix is exactly unitary, so the
constraint survives arbitrarily many updates with no re-orthogonalization.
The linear system is solved with partial-pivot LU on the real 2n x 2n
block embedding rather than forming the inverse.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .backend import kernels
from .ctensor import ComplexMatrix, block_embed, cmatmul, hermitian, unitarity_error

__all__ = ["unitary_init", "orthogonal_init", "glorot_uniform", "stiefel_update",
           "stiefel_update_stacked", "RmsState", "rmsprop_update", "clip_global_norm",
           "INIT_SCHEMES"]

INIT_SCHEMES = ("component_product", "qr_random")


def _phases(n: int, rng: np.random.Generator) -> np.ndarray:
    return np.exp(1j * rng.uniform(-np.pi, np.pi, n))


def _householder(n: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.uniform(-1.0, 1.0, (n, 1)) + 1j * rng.uniform(-1.0, 1.0, (n, 1))
    return np.eye(n) - (2.0 / np.vdot(v, v).real) * (v @ v.conj().T)


def _dft(n: int) -> np.ndarray:
    j, k = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    return np.exp(-2j * np.pi * j * k / n) / np.sqrt(n)


def unitary_init(n: int, scheme: str, rng: np.random.Generator) -> ComplexMatrix:
    """Random unitary n x n matrix.

    ``component_product`` materializes D3 R2 F^-1 D2 P R1 F D1: diagonal
    phase matrices, Householder reflections from random complex vectors,
    a random permutation, and the unitary DFT pair.  ``qr_random`` takes
    the orthonormal factor of a complex Gaussian matrix with the diagonal
    of R phase-normalized.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if scheme == "component_product":
        d1, d2, d3 = (np.diag(_phases(n, rng)) for _ in range(3))
        r1, r2 = _householder(n, rng), _householder(n, rng)
        perm = np.eye(n)[rng.permutation(n)]
        f = _dft(n)
        w = d3 @ r2 @ f.conj().T @ d2 @ perm @ r1 @ f @ d1
    elif scheme == "qr_random":
        z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        q, r = np.linalg.qr(z)
        d = np.diagonal(r).copy()
        d /= np.abs(d)
        w = q * d[None, :]
    else:
        raise ValueError(f"unknown init scheme {scheme!r}; use one of {INIT_SCHEMES}")
    return ComplexMatrix.from_complex(w)


def orthogonal_init(n: int, rng: np.random.Generator) -> np.ndarray:
    """Random real orthogonal n x n matrix (QR with sign-fixed diagonal)."""
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diagonal(r))[None, :]


def glorot_uniform(n_in: int, n_out: int, shape, rng: np.random.Generator) -> np.ndarray:
    """U[-l, l] with l = sqrt(6 / (n_in + n_out)).

    For complex weights pass the stacked (2, ...) shape: the two channels
    are drawn independently.
    """
    if n_in < 1 or n_out < 1:
        raise ValueError("fan dimensions must be at least 1")
    limit = np.sqrt(6.0 / (n_in + n_out))
    return rng.uniform(-limit, limit, shape)


def stiefel_update_stacked(w: np.ndarray, grad: np.ndarray, lam: float) -> np.ndarray:
    """Cayley step on stacked (2, n, n) arrays; real matrices ride along
    with a zero imaginary channel and stay real."""
    wm = ComplexMatrix(w)
    gm = ComplexMatrix(grad)
    n = w.shape[1]
    gwh = cmatmul(gm, hermitian(wm))
    a = gwh.data - hermitian(gwh).data  # A = G W^H - W G^H, exactly skew-Hermitian
    half = 0.5 * lam
    diag = np.diag_indices(n)
    num = ComplexMatrix(-half * a)
    num.re[diag] += 1.0  # I - lam/2 A
    rhs = cmatmul(num, wm)
    den = ComplexMatrix(half * a)
    den.re[diag] += 1.0  # I + lam/2 A
    sol = np.linalg.solve(block_embed(den), rhs.data.reshape(2 * n, n))
    return np.ascontiguousarray(sol.reshape(2, n, n))


def stiefel_update(w: ComplexMatrix, grad: ComplexMatrix, lam: float) -> ComplexMatrix:
    """Multiplicative Stiefel-manifold step keeping W unitary.

    ``grad`` is the two-channel real gradient assembled as d/d(re) +
    i d/d(im); any consistent positive scaling of it is absorbed into the
    learning rate.
    """
    n, m = w.shape
    if n != m:
        raise ValueError(f"stiefel_update needs a square matrix, got {w.shape}")
    if grad.shape != w.shape:
        raise ValueError(f"gradient shape {grad.shape} does not match {w.shape}")
    return ComplexMatrix(stiefel_update_stacked(w.data, grad.data, lam))


@dataclass
class RmsState:
    """Mean-square accumulators per parameter block."""

    rho: float = 0.9
    eps: float = 1e-8
    acc: dict[str, np.ndarray] = field(default_factory=dict)

    def ensure(self, name: str, shape) -> np.ndarray:
        if name not in self.acc:
            self.acc[name] = np.zeros(shape)
        return self.acc[name]


def rmsprop_update(param: np.ndarray, grad: np.ndarray, acc: np.ndarray,
                   lr: float, rho: float = 0.9, eps: float = 1e-8) -> None:
    """In-place: acc <- rho acc + (1-rho) g^2; param <- param - lr g / (sqrt(acc)+eps)."""
    kernels.rmsprop_step(param, grad, acc, rho, lr, eps)


def clip_global_norm(grads: dict[str, np.ndarray], max_norm: float) -> float:
    """Rescale all blocks in place if their joint L2 norm exceeds max_norm.

    Returns the pre-clip global norm.
    """
    if max_norm <= 0:
        raise ValueError("max_norm must be positive")
    total = np.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
    if total > max_norm:
        scale = max_norm / total
        for g in grads.values():
            g *= scale
    return total


def global_norm(grads) -> float:
    vals = grads.values() if isinstance(grads, dict) else grads
    return float(np.sqrt(sum(float(np.sum(g * g)) for g in vals)))


def assert_unitary(w: np.ndarray, tol: float = 1e-6) -> float:
    err = unitarity_error(ComplexMatrix(w))
    if err >= tol:
        raise FloatingPointError(f"unitarity error {err:.3e} exceeds {tol:.1e}")
    return err
