"""Kernel backend selection.

The compiled extension is preferred; the pure-NumPy twin is used when the
extension is unavailable or when ``BREGMAN_PRECOND_BACKEND=python`` is set.
"""

import os

_forced = os.environ.get("BREGMAN_PRECOND_BACKEND", "").lower()

if _forced == "python":
    from . import _kernels_py as kernels

    BACKEND = "python"
elif _forced in ("", "compiled", "c"):
    try:
        from . import _kernels as kernels  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        if _forced:
            raise
        from . import _kernels_py as kernels  # type: ignore[no-redef]

        BACKEND = "python"
else:
    raise ValueError(f"unknown BREGMAN_PRECOND_BACKEND: {_forced!r}")

jacobi_eigh = kernels.jacobi_eigh
cholesky_lower = kernels.cholesky_lower
solve_triangular = kernels.solve_triangular
