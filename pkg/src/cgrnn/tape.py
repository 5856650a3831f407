"""Reverse-mode autodiff over real arrays, define-by-run.

The tape records every primitive as it executes and replays the chain
rule backwards from a real scalar loss.  All values are float64 numpy
arrays; a complex quantity appears on the tape as one stacked
``(2, n, batch)`` array, so complex operations are either composites over
the two channels or dedicated fused primitives (``cmatmul``, ``modrelu``,
``hirose``, ``softmax_xent``) whose backward rules are validated against
finite differences in the test suite.

A tape is confined to one training iteration: build, call ``backward``
once, throw it away.  Tapes in different threads are independent.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .backend import kernels

__all__ = ["Tape", "Node", "TapeError", "NonFiniteGradientError"]


class TapeError(ValueError):
    pass


class NonFiniteGradientError(FloatingPointError):
    """Backward pass produced a NaN/Inf; carries the originating node."""

    def __init__(self, node: "Node"):
        self.node = node
        super().__init__(
            f"non-finite gradient produced by node #{node.idx} (op '{node.op}')"
        )


class Node:
    """One recorded value.  ``grad`` is populated by ``Tape.backward``."""

    __slots__ = ("idx", "op", "value", "grad", "needs_grad", "parents", "_bwd")

    def __init__(self, idx: int, op: str, value: np.ndarray, needs_grad: bool,
                 parents: tuple, bwd: Callable[[np.ndarray], None] | None):
        self.idx = idx
        self.op = op
        self.value = value
        self.grad: np.ndarray | None = None
        self.needs_grad = needs_grad
        self.parents = parents
        self._bwd = bwd

    def __repr__(self) -> str:
        return f"Node(#{self.idx} {self.op} {getattr(self.value, 'shape', ())})"


def _acc(node: Node, g: np.ndarray) -> None:
    # Out-of-place accumulation: the first contribution may alias the child
    # gradient, so later contributions must not mutate it.
    if not node.needs_grad:
        return
    if node.grad is None:
        node.grad = g
    else:
        node.grad = node.grad + g


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


class Tape:
    """Ordered record of primitives; inputs of a node always precede it."""

    __slots__ = ("nodes",)

    def __init__(self):
        self.nodes: list[Node] = []

    def _record(self, op: str, value: np.ndarray, parents: tuple,
                bwd: Callable[[np.ndarray], None] | None,
                needs_grad: bool | None = None) -> Node:
        if needs_grad is None:
            needs_grad = any(p.needs_grad for p in parents)
        node = Node(len(self.nodes), op, value, needs_grad, parents,
                    bwd if needs_grad else None)
        self.nodes.append(node)
        return node

    # -- leaves ---------------------------------------------------------

    def leaf(self, value: np.ndarray) -> Node:
        """A differentiable input (parameter)."""
        return self._record("leaf", np.asarray(value, dtype=np.float64), (), None,
                            needs_grad=True)

    def const(self, value: np.ndarray) -> Node:
        """A non-differentiable input (data)."""
        return self._record("const", np.asarray(value, dtype=np.float64), (), None,
                            needs_grad=False)

    # -- elementwise arithmetic ------------------------------------------

    def add(self, a: Node, b: Node) -> Node:
        def bwd(g):
            _acc(a, _unbroadcast(g, a.value.shape))
            _acc(b, _unbroadcast(g, b.value.shape))

        return self._record("add", a.value + b.value, (a, b), bwd)

    def sub(self, a: Node, b: Node) -> Node:
        def bwd(g):
            _acc(a, _unbroadcast(g, a.value.shape))
            _acc(b, _unbroadcast(-g, b.value.shape))

        return self._record("sub", a.value - b.value, (a, b), bwd)

    def mul(self, a: Node, b: Node) -> Node:
        def bwd(g):
            if a.needs_grad:
                _acc(a, _unbroadcast(g * b.value, a.value.shape))
            if b.needs_grad:
                _acc(b, _unbroadcast(g * a.value, b.value.shape))

        return self._record("mul", a.value * b.value, (a, b), bwd)

    def neg(self, a: Node) -> Node:
        def bwd(g):
            _acc(a, -g)

        return self._record("neg", -a.value, (a,), bwd)

    def add_const(self, a: Node, c) -> Node:
        def bwd(g):
            _acc(a, _unbroadcast(g, a.value.shape))

        return self._record("add_const", a.value + c, (a,), bwd)

    def mul_const(self, a: Node, c) -> Node:
        def bwd(g):
            _acc(a, _unbroadcast(g * c, a.value.shape))

        return self._record("mul_const", a.value * c, (a,), bwd)

    def rsub_const(self, c, a: Node) -> Node:
        """c - a for a constant c."""

        def bwd(g):
            _acc(a, _unbroadcast(-g, a.value.shape))

        return self._record("rsub_const", c - a.value, (a,), bwd)

    # -- nonlinearities ---------------------------------------------------

    def tanh(self, a: Node) -> Node:
        out = np.tanh(a.value)

        def bwd(g):
            _acc(a, g * (1.0 - out * out))

        return self._record("tanh", out, (a,), bwd)

    def sigmoid(self, a: Node) -> Node:
        out = kernels.sigmoid(a.value)

        def bwd(g):
            _acc(a, g * out * (1.0 - out))

        return self._record("sigmoid", out, (a,), bwd)

    def relu(self, a: Node) -> Node:
        out = np.maximum(a.value, 0.0)

        def bwd(g):
            # Subgradient 0 at the kink.
            _acc(a, g * (a.value > 0.0))

        return self._record("relu", out, (a,), bwd)

    def sqrt(self, a: Node) -> Node:
        out = np.sqrt(a.value)

        def bwd(g):
            _acc(a, g / (2.0 * out))

        return self._record("sqrt", out, (a,), bwd)

    def square(self, a: Node) -> Node:
        def bwd(g):
            _acc(a, g * (2.0 * a.value))

        return self._record("square", a.value * a.value, (a,), bwd)

    def reciprocal(self, a: Node) -> Node:
        out = 1.0 / a.value

        def bwd(g):
            _acc(a, -g * out * out)

        return self._record("reciprocal", out, (a,), bwd)

    def exp(self, a: Node) -> Node:
        out = np.exp(a.value)

        def bwd(g):
            _acc(a, g * out)

        return self._record("exp", out, (a,), bwd)

    def log(self, a: Node) -> Node:
        def bwd(g):
            _acc(a, g / a.value)

        return self._record("log", np.log(a.value), (a,), bwd)

    def atan2(self, y: Node, x: Node) -> Node:
        def bwd(g):
            d = x.value * x.value + y.value * y.value
            if y.needs_grad:
                _acc(y, _unbroadcast(g * x.value / d, y.value.shape))
            if x.needs_grad:
                _acc(x, _unbroadcast(-g * y.value / d, x.value.shape))

        return self._record("atan2", np.arctan2(y.value, x.value), (y, x), bwd)

    def select(self, cond: np.ndarray, a: Node, b: Node) -> Node:
        """Elementwise where(cond, a, b); cond is a plain boolean array."""
        cond = np.asarray(cond, dtype=bool)

        def bwd(g):
            if a.needs_grad:
                _acc(a, _unbroadcast(np.where(cond, g, 0.0), a.value.shape))
            if b.needs_grad:
                _acc(b, _unbroadcast(np.where(cond, 0.0, g), b.value.shape))

        return self._record("select", np.where(cond, a.value, b.value), (a, b), bwd)

    # -- reductions and shape --------------------------------------------

    def sum(self, a: Node) -> Node:
        def bwd(g):
            _acc(a, np.broadcast_to(g, a.value.shape))

        return self._record("sum", np.asarray(a.value.sum()), (a,), bwd)

    def sum_axis(self, a: Node, axis: int, keepdims: bool = False) -> Node:
        def bwd(g):
            if not keepdims:
                g = np.expand_dims(g, axis)
            _acc(a, np.broadcast_to(g, a.value.shape))

        return self._record("sum_axis", a.value.sum(axis=axis, keepdims=keepdims),
                            (a,), bwd)

    def reshape(self, a: Node, shape: Sequence[int]) -> Node:
        shape = tuple(shape)

        def bwd(g):
            _acc(a, g.reshape(a.value.shape))

        return self._record("reshape", a.value.reshape(shape), (a,), bwd)

    def channel(self, a: Node, i: int) -> Node:
        """Slice one channel out of a stacked complex array."""

        def bwd(g):
            full = np.zeros_like(a.value)
            full[i] = g
            _acc(a, full)

        return self._record("channel", a.value[i], (a,), bwd)

    def stack2(self, a: Node, b: Node) -> Node:
        """Stack two real arrays into complex channels (a + i b)."""

        def bwd(g):
            _acc(a, g[0])
            _acc(b, g[1])

        return self._record("stack2", np.stack([a.value, b.value]), (a, b), bwd)

    # -- matrix products ---------------------------------------------------

    def matmul(self, a: Node, b: Node) -> Node:
        if a.value.shape[-1] != b.value.shape[0]:
            raise TapeError(f"matmul: {a.value.shape} @ {b.value.shape}")

        def bwd(g):
            if a.needs_grad:
                _acc(a, g @ b.value.T)
            if b.needs_grad:
                _acc(b, a.value.T @ g)

        return self._record("matmul", a.value @ b.value, (a, b), bwd)

    def cmatmul(self, a: Node, b: Node) -> Node:
        """Complex matmul on stacked (2,m,k) @ (2,k,n) arrays.

        Runs as one real GEMM on the block embedding of ``a``; the
        embedding is kept for the backward rule (embed(A)^T = embed(A^H)).
        """
        a2, b2 = a.value, b.value
        m, k = a2.shape[1], a2.shape[2]
        if b2.shape[1] != k:
            raise TapeError(f"cmatmul: {a2.shape} @ {b2.shape}")
        n = b2.shape[2]
        emb = np.empty((2 * m, 2 * k))
        emb[:m, :k] = a2[0]
        emb[m:, k:] = a2[0]
        np.negative(a2[1], out=emb[:m, k:])
        emb[m:, :k] = a2[1]
        out = (emb @ b2.reshape(2 * k, n)).reshape(2, m, n)

        def bwd(g):
            if b.needs_grad:
                _acc(b, (emb.T @ g.reshape(2 * m, n)).reshape(2, k, n))
            if a.needs_grad:
                g0, g1 = g[0], g[1]
                b0t, b1t = b2[0].T, b2[1].T
                da = np.empty((2, m, k))
                np.matmul(g0, b0t, out=da[0])
                da[0] += g1 @ b1t
                np.matmul(g1, b0t, out=da[1])
                da[1] -= g0 @ b1t
                _acc(a, da)

        return self._record("cmatmul", out, (a, b), bwd)

    def cmatmul_realin(self, a: Node, x: np.ndarray) -> Node:
        """Complex matrix times a real constant input: (A.re + i A.im) @ x."""
        a2 = a.value
        out = np.empty((2, a2.shape[1], x.shape[1]))
        np.matmul(a2[0], x, out=out[0])
        np.matmul(a2[1], x, out=out[1])

        def bwd(g):
            da = np.empty_like(a2)
            xt = x.T
            np.matmul(g[0], xt, out=da[0])
            np.matmul(g[1], xt, out=da[1])
            _acc(a, da)

        return self._record("cmatmul_realin", out, (a,), bwd)

    # -- fused activations and loss ----------------------------------------

    def modrelu(self, z: Node, b: Node) -> Node:
        out, mag, scale = kernels.modrelu_fwd(z.value, b.value)

        def bwd(g):
            dz, db = kernels.modrelu_bwd(g, z.value, b.value, mag, scale)
            _acc(z, dz)
            _acc(b, db)

        return self._record("modrelu", out, (z, b), bwd)

    def hirose(self, z: Node, m: float = 1.0) -> Node:
        m2 = float(m) * float(m)
        out, mag, scale = kernels.hirose_fwd(z.value, m2)

        def bwd(g):
            _acc(z, kernels.hirose_bwd(g, z.value, m2, mag, scale))

        return self._record("hirose", out, (z,), bwd)

    def softmax_xent(self, logits: Node, labels: np.ndarray) -> Node:
        """Categorical cross entropy summed over the batch; labels are ints."""
        labels = np.asarray(labels, dtype=np.int64)
        k = logits.value.shape[0]
        if labels.min() < 0 or labels.max() >= k:
            raise TapeError(f"label out of range for {k} classes")
        loss, probs = kernels.softmax_xent_fwd(logits.value, labels)

        def bwd(g):
            _acc(logits, kernels.softmax_xent_bwd(float(g), probs, labels))

        return self._record("softmax_xent", np.float64(loss), (logits,), bwd)

    # -- reverse pass -------------------------------------------------------

    def backward(self, loss: Node, check_finite: bool = False) -> dict[int, np.ndarray]:
        """Reverse accumulation from a scalar loss node.

        Populates ``node.grad`` on every reachable node that needs a
        gradient and returns {node id: gradient} for the leaves; a leaf
        the loss does not depend on gets zeros.  With ``check_finite``
        the pass stops at the first primitive whose backward rule emits a
        NaN or Inf and reports that node.
        """
        if np.ndim(loss.value) != 0 and np.size(loss.value) != 1:
            raise TapeError(f"loss node must be scalar, got shape {np.shape(loss.value)}")
        for node in self.nodes:
            node.grad = None
        loss.grad = np.ones_like(loss.value)
        for node in reversed(self.nodes[: loss.idx + 1]):
            g = node.grad
            if g is None or node._bwd is None:
                continue
            node._bwd(g)
            if check_finite:
                for p in node.parents:
                    if p.grad is not None and not np.all(np.isfinite(p.grad)):
                        raise NonFiniteGradientError(node)
        out = {}
        for node in self.nodes:
            if node.op == "leaf":
                if node.grad is None:
                    node.grad = np.zeros_like(node.value)
                out[node.idx] = node.grad
        return out

    def grad_of(self, node: Node) -> np.ndarray:
        return node.grad if node.grad is not None else np.zeros_like(node.value)
