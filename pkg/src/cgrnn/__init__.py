"""Complex gated recurrent networks with unitary state transitions.

Split-complex linear algebra, a from-scratch reverse-mode tape, the
recurrent cell zoo (complex gated cell, gateless unitary cell, real GRU
and real gated-orthogonal baselines), Stiefel-manifold optimization of
the state transition matrix, and a benchmark harness for the synthetic
memory and adding problems.
"""

from .backend import active_backend
from .ctensor import (ComplexMatrix, PolarForm, cmatmul, cmul, from_polar,
                      hermitian, to_polar, unitarity_error)
from .tape import Node, Tape
from .wirtinger import WirtingerPair, grad_check, wirtinger_numeric

__version__ = "0.1.0"

__all__ = [
    "ComplexMatrix", "PolarForm", "cmul", "cmatmul", "hermitian",
    "to_polar", "from_polar", "unitarity_error",
    "Tape", "Node", "WirtingerPair", "wirtinger_numeric", "grad_check",
    "active_backend", "__version__",
]
