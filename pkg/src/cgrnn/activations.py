"""Split-complex nonlinearities and gate activation functions.

Both magnitude nonlinearities multiply the input by a nonnegative real
factor, so they preserve the phase.  The Hirose variant squashes the
magnitude through a tanh and is bounded; modReLU thresholds the
magnitude with a learnable offset and is unbounded.  Gate activations
map a complex pre-activation to a real multiplier in (0, 1); the
variants differ in how the two channels are combined before or after
the sigmoid.

Forward rules here operate on ``ComplexMatrix`` values.  Training uses
the identical kernels through ``Tape`` primitives, so there is a single
implementation of the arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .backend import kernels
from .ctensor import ComplexMatrix

__all__ = ["NonlinKind", "GateFnKind", "hirose", "modrelu", "mod_sigmoid",
           "gate_forward", "GATE_KINDS", "NONLIN_KINDS"]

NONLIN_KINDS = ("hirose", "modrelu")
GATE_KINDS = ("product", "tied1", "tied2", "free", "real_sigmoid")


@dataclass(frozen=True)
class NonlinKind:
    """State nonlinearity selector: hirose(m) or modrelu (per-unit bias)."""

    kind: str = "modrelu"
    m: float = 1.0  # hirose magnitude scaling; the effective factor is m^2

    def __post_init__(self):
        if self.kind not in NONLIN_KINDS:
            raise ValueError(f"unknown nonlinearity {self.kind!r}")
        if self.kind == "hirose" and self.m <= 0:
            raise ValueError("hirose m must be positive")


@dataclass(frozen=True)
class GateFnKind:
    """Gate activation selector.

    product        sigma(Re z) * sigma(Im z)
    tied1          a*sigma(Re z) + (1-a)*sigma(Im z)
    tied2          sigma(a*Re z + (1-a)*Im z)
    free           sigma(a*Re z + b*Im z)
    real_sigmoid   sigma(Re z), for the real baseline cells

    ``learnable`` coefficients are stored unconstrained and squashed
    through a sigmoid so the effective values stay in [0, 1]; fixed
    coefficients are pinned to 0.5.
    """

    kind: str = "free"
    learnable: bool = True

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate function {self.kind!r}")

    @property
    def n_coeffs(self) -> int:
        return {"product": 0, "tied1": 1, "tied2": 1, "free": 2, "real_sigmoid": 0}[self.kind]


def hirose(z: ComplexMatrix, m: float = 1.0) -> ComplexMatrix:
    """tanh(|z| / m^2) * z / |z|; zero at the origin."""
    if m <= 0:
        raise ValueError("m must be positive")
    out, _, _ = kernels.hirose_fwd(z.data, float(m) * float(m))
    return ComplexMatrix(out)


def modrelu(z: ComplexMatrix, b: np.ndarray) -> ComplexMatrix:
    """relu(|z| + b) * z / (|z| + eps); exactly zero where |z| + b <= 0."""
    b = np.asarray(b, dtype=np.float64).reshape(-1, 1)
    out, _, _ = kernels.modrelu_fwd(z.data, b)
    return ComplexMatrix(out)


def mod_sigmoid(z: ComplexMatrix, alpha: float, beta: float) -> np.ndarray:
    """sigma(alpha * Re z + beta * Im z), a real array in (0, 1)."""
    if not (0.0 <= alpha <= 1.0 and 0.0 <= beta <= 1.0):
        raise ValueError("alpha and beta must lie in [0, 1]")
    return kernels.sigmoid(alpha * z.re + beta * z.im)


def gate_forward(kind: GateFnKind, z: ComplexMatrix,
                 alpha: float | None = None, beta: float | None = None) -> np.ndarray:
    """Evaluate the configured gate function; output is real in (0, 1)."""
    k = kind.kind
    if k == "product":
        return kernels.sigmoid(z.re) * kernels.sigmoid(z.im)
    if k == "real_sigmoid":
        return kernels.sigmoid(z.re)
    if alpha is None:
        raise ValueError(f"gate kind {k!r} needs alpha")
    if k == "tied1":
        return alpha * kernels.sigmoid(z.re) + (1.0 - alpha) * kernels.sigmoid(z.im)
    if k == "tied2":
        return mod_sigmoid(z, alpha, 1.0 - alpha)
    if beta is None:
        raise ValueError("free gate needs beta")
    return mod_sigmoid(z, alpha, beta)
