"""Kernel backend selection.

The hot elementwise kernels exist twice: a numba-jitted version and a
pure-numpy fallback.  The environment variable ``CGRNN_BACKEND`` picks
one at import time:

* ``numba``  force the jitted kernels (raises if numba is unusable)
* ``numpy``  force the fallback
* unset / ``auto``  numba when importable, numpy otherwise

Matrix products are BLAS-bound and identical in both backends, so only
the elementwise kernels are switched.  ``benchmarks/bench_kernels.py``
compares the two.
"""

from __future__ import annotations

import os

_requested = os.environ.get("CGRNN_BACKEND", "auto").strip().lower() or "auto"

if _requested not in ("auto", "numba", "numpy"):
    raise ValueError(
        f"CGRNN_BACKEND={_requested!r} not understood; use 'numba', 'numpy' or 'auto'"
    )

if _requested == "numpy":
    from . import _kernels_numpy as kernels

    _active = "numpy"
elif _requested == "numba":
    from . import _kernels_numba as kernels

    _active = "numba"
else:
    try:
        from . import _kernels_numba as kernels

        _active = "numba"
    except ImportError:
        from . import _kernels_numpy as kernels

        _active = "numpy"


def active_backend() -> str:
    """Name of the kernel backend selected at import time."""
    return _active
