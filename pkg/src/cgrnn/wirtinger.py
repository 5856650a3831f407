"""Numerical Wirtinger derivatives and finite-difference gradient checking.

Real reverse-mode over the two channels is the gradient engine; the
utilities here exist to test it.  ``wirtinger_numeric`` estimates the
pair (df/dz, df/dzbar) for a scalar complex function from central
differences along the real and imaginary axes:

    df/dz    = (df/dx - i df/dy) / 2
    df/dzbar = (df/dx + i df/dy) / 2

For a holomorphic f the second entry vanishes and the first matches the
classical complex derivative.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .tape import Node, Tape

__all__ = ["WirtingerPair", "wirtinger_numeric", "cauchy_riemann_residual",
           "GradCheckReport", "grad_check"]


@dataclass
class WirtingerPair:
    d_z: complex
    d_zbar: complex


def _central(f: Callable[[complex], complex], z: complex, step: complex, h: float) -> complex:
    hi = f(z + step)
    lo = f(z - step)
    if not (np.isfinite(hi.real) and np.isfinite(hi.imag)
            and np.isfinite(lo.real) and np.isfinite(lo.imag)):
        raise FloatingPointError(f"function not finite near z={z}")
    return (hi - lo) / (2.0 * h)


def wirtinger_numeric(f: Callable[[complex], complex], z: complex, h: float = 1e-5) -> WirtingerPair:
    """Central-difference estimate of the derivative pair of f at z."""
    if h <= 0:
        raise ValueError("step h must be positive")
    fx = _central(f, z, h, h)
    fy = _central(f, z, 1j * h, h)
    return WirtingerPair(d_z=0.5 * (fx - 1j * fy), d_zbar=0.5 * (fx + 1j * fy))


def cauchy_riemann_residual(f: Callable[[complex], complex], z: complex, h: float = 1e-5) -> float:
    """max(|u_x - v_y|, |v_x + u_y|); ~0 iff f is holomorphic at z."""
    fx = _central(f, z, h, h)
    fy = _central(f, z, 1j * h, h)
    return max(abs(fx.real - fy.imag), abs(fx.imag + fy.real))


@dataclass
class GradCheckReport:
    """Per-block worst relative error of reverse-mode vs central differences."""

    tol: float
    max_rel_err: dict[str, float] = field(default_factory=dict)
    skipped: list[str] = field(default_factory=list)

    @property
    def worst(self) -> float:
        return max(self.max_rel_err.values(), default=0.0)

    @property
    def passed(self) -> bool:
        return all(e < self.tol for e in self.max_rel_err.values())


def grad_check(builder: Callable[[Tape, dict[str, Node]], Node],
               params: dict[str, np.ndarray],
               tol: float = 1e-5,
               h: float = 1e-5) -> GradCheckReport:
    """Check reverse-mode gradients of a scalar loss against central differences.

    ``builder`` receives a fresh tape plus leaf nodes for every entry of
    ``params`` and returns the loss node.  The relative error of each
    scalar is |g_ad - g_fd| / max(1, |g_ad|, |g_fd|); the report carries
    the maximum per block.  Double precision assumed throughout.
    """

    def run(ps: dict[str, np.ndarray]) -> tuple[Tape, dict[str, Node], Node]:
        tape = Tape()
        leaves = {k: tape.leaf(v) for k, v in ps.items()}
        return tape, leaves, builder(tape, leaves)

    params = {k: np.array(v, dtype=np.float64) for k, v in params.items()}
    tape, leaves, loss = run(params)
    tape.backward(loss)
    report = GradCheckReport(tol=tol)
    for name, value in params.items():
        g_ad = tape.grad_of(leaves[name])
        worst = 0.0
        flat = value.reshape(-1)
        g_flat = np.asarray(g_ad).reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            up = float(run(params)[2].value)
            flat[i] = orig - h
            down = float(run(params)[2].value)
            flat[i] = orig
            g_fd = (up - down) / (2.0 * h)
            rel = abs(g_flat[i] - g_fd) / max(1.0, abs(g_flat[i]), abs(g_fd))
            if rel > worst:
                worst = rel
        report.max_rel_err[name] = worst
    return report
