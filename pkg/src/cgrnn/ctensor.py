"""Dense split-complex matrices and the arithmetic everything else builds on.

A complex matrix is stored as a single float64 array of shape
``(2, rows, cols)``: channel 0 is the real part, channel 1 the imaginary
part.  Keeping the two channels as plain real arrays means gradient code
and compiled kernels only ever touch real buffers.  A vector is a
one-column matrix.

Values are immutable by convention: operations return fresh arrays and
never write into their inputs, so instances can be shared freely between
threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ComplexMatrix",
    "PolarForm",
    "ShapeMismatchError",
    "cmul",
    "cmatmul",
    "hermitian",
    "to_polar",
    "from_polar",
    "unitarity_error",
    "block_embed",
]


class ShapeMismatchError(ValueError):
    """Raised when two operands do not have compatible shapes."""


class ComplexMatrix:
    """A rows x cols complex matrix stored as stacked (re, im) channels."""

    __slots__ = ("data",)

    def __init__(self, data: np.ndarray, copy: bool = False):
        data = np.array(data, dtype=np.float64, copy=copy or None)
        if data.ndim != 3 or data.shape[0] != 2:
            raise ValueError(f"expected stacked (2, rows, cols) data, got shape {data.shape}")
        self.data = data

    @classmethod
    def from_parts(cls, re: np.ndarray, im: np.ndarray) -> "ComplexMatrix":
        re = np.atleast_2d(np.asarray(re, dtype=np.float64))
        im = np.atleast_2d(np.asarray(im, dtype=np.float64))
        if re.shape != im.shape:
            raise ShapeMismatchError(f"re has shape {re.shape} but im has shape {im.shape}")
        return cls(np.stack([re, im]))

    @classmethod
    def from_complex(cls, z: np.ndarray) -> "ComplexMatrix":
        z = np.atleast_2d(np.asarray(z))
        return cls.from_parts(z.real, z.imag)

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "ComplexMatrix":
        return cls(np.zeros((2, rows, cols)))

    @classmethod
    def eye(cls, n: int) -> "ComplexMatrix":
        data = np.zeros((2, n, n))
        data[0] = np.eye(n)
        return cls(data)

    @property
    def re(self) -> np.ndarray:
        return self.data[0]

    @property
    def im(self) -> np.ndarray:
        return self.data[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape[1], self.data.shape[2]

    def as_complex(self) -> np.ndarray:
        """Convert to a numpy complex128 array (convenience for tests and I/O)."""
        return self.data[0] + 1j * self.data[1]

    def __repr__(self) -> str:
        r, c = self.shape
        return f"ComplexMatrix({r}x{c})"


@dataclass
class PolarForm:
    """Elementwise polar representation: magnitude >= 0, phase in (-pi, pi]."""

    magnitude: np.ndarray
    phase: np.ndarray


def _check_same_shape(a: ComplexMatrix, b: ComplexMatrix, op: str) -> None:
    if a.shape != b.shape:
        raise ShapeMismatchError(f"{op}: operand shapes {a.shape} and {b.shape} differ")


def cmul(a: ComplexMatrix, b: ComplexMatrix) -> ComplexMatrix:
    """Elementwise complex product (a.re + i a.im) * (b.re + i b.im)."""
    _check_same_shape(a, b, "cmul")
    out = np.empty_like(a.data)
    np.multiply(a.re, b.re, out=out[0])
    out[0] -= a.im * b.im
    np.multiply(a.re, b.im, out=out[1])
    out[1] += a.im * b.re
    return ComplexMatrix(out)


def cmatmul(a: ComplexMatrix, b: ComplexMatrix) -> ComplexMatrix:
    """Complex matrix product, computed as four real matmuls."""
    if a.shape[1] != b.shape[0]:
        raise ShapeMismatchError(
            f"cmatmul: inner dimensions differ, {a.shape} @ {b.shape}"
        )
    out = np.empty((2, a.shape[0], b.shape[1]))
    np.matmul(a.re, b.re, out=out[0])
    out[0] -= a.im @ b.im
    np.matmul(a.re, b.im, out=out[1])
    out[1] += a.im @ b.re
    return ComplexMatrix(out)


def hermitian(a: ComplexMatrix) -> ComplexMatrix:
    """Conjugate transpose."""
    out = np.empty((2, a.shape[1], a.shape[0]))
    out[0] = a.re.T
    np.negative(a.im.T, out=out[1])
    return ComplexMatrix(out)


def to_polar(z: ComplexMatrix) -> PolarForm:
    """Elementwise polar form; phase at the origin is 0 by convention."""
    mag = np.hypot(z.re, z.im)
    # arctan2(0, 0) already returns 0, matching the origin convention.
    phase = np.arctan2(z.im, z.re)
    return PolarForm(magnitude=mag, phase=phase)


def from_polar(p: PolarForm) -> ComplexMatrix:
    return ComplexMatrix.from_parts(p.magnitude * np.cos(p.phase), p.magnitude * np.sin(p.phase))


def unitarity_error(w: ComplexMatrix) -> float:
    """Frobenius norm of W^H W - I.  Zero iff W is unitary."""
    n, m = w.shape
    if n != m:
        raise ShapeMismatchError(f"unitarity_error: matrix is {n}x{m}, expected square")
    prod = cmatmul(hermitian(w), w)
    res_re = prod.re - np.eye(n)
    return float(np.sqrt(np.sum(res_re * res_re) + np.sum(prod.im * prod.im)))


def block_embed(a: ComplexMatrix | np.ndarray) -> np.ndarray:
    """Real (2r x 2c) block embedding [[re, -im], [im, re]].

    The embedding is a ring homomorphism: the real block product of two
    embeddings equals the embedding of the complex product.
    """
    data = a.data if isinstance(a, ComplexMatrix) else np.asarray(a)
    r, c = data.shape[1], data.shape[2]
    out = np.empty((2 * r, 2 * c))
    out[:r, :c] = data[0]
    out[r:, c:] = data[0]
    np.negative(data[1], out=out[:r, c:])
    out[r:, :c] = data[1]
    return out
