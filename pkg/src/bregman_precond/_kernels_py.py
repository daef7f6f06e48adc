"""Pure-NumPy fallback for the compiled kernels in ``_kernels.pyx``.

Row/column updates are vectorized, so the asymptotics match the compiled
version, but the per-rotation overhead makes this noticeably slower on
large matrices.  See ``benchmarks/bench_kernels.py`` for a comparison.
"""

import numpy as np


def jacobi_eigh(a, v, max_sweeps, tol):
    """Cyclic Jacobi diagonalization of symmetric ``a``, in place.

    Same contract as the compiled version: returns the sweep count or -1 on
    non-convergence; ``v`` accumulates eigenvectors.
    """
    n = a.shape[0]
    scale = np.abs(a).max()
    if scale == 0.0:
        return 0

    def offdiag():
        return np.abs(np.triu(a, 1)).sum()

    for sweep in range(max_sweeps):
        if offdiag() <= tol * scale:
            return sweep
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = 0.5 * (a[q, q] - a[p, p]) / apq
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = np.sign(theta) if theta != 0 else 1.0
                    t = t / (abs(theta) + np.hypot(1.0, theta))
                c = 1.0 / np.hypot(1.0, t)
                s = t * c
                cp, cq = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * cp - s * cq
                a[:, q] = s * cp + c * cq
                rp, rq = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                a[p, q] = a[q, p] = 0.0
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    if offdiag() <= tol * scale:
        return max_sweeps
    return -1


def cholesky_lower(a):
    """In-place unblocked lower Cholesky; returns -1 or the bad pivot index."""
    n = a.shape[0]
    for j in range(n):
        s = a[j, j] - a[j, :j] @ a[j, :j]
        if s <= 0.0:
            return j
        piv = np.sqrt(s)
        a[j, j] = piv
        a[j + 1 :, j] = (a[j + 1 :, j] - a[j + 1 :, :j] @ a[j, :j]) / piv
        a[:j, j] = 0.0
    return -1


def solve_triangular(l, b, transpose):
    """In-place triangular substitution on the n-by-k right-hand side ``b``."""
    n = l.shape[0]
    if not transpose:
        for i in range(n):
            b[i] -= l[i, :i] @ b[:i]
            b[i] /= l[i, i]
    else:
        for i in range(n - 1, -1, -1):
            b[i] -= l[i + 1 :, i] @ b[i + 1 :]
            b[i] /= l[i, i]
    return None
