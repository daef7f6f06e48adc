# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: cyclic Jacobi eigensolver, unblocked Cholesky and
triangular substitution.

The pure-Python twin of this module is ``_kernels_py``; both expose the same
three functions and are selected at import time by ``_backend``.
"""

from libc.math cimport fabs, sqrt

import numpy as np

cimport numpy as cnp

cnp.import_array()


def jacobi_eigh(double[:, ::1] a, double[:, ::1] v, int max_sweeps, double tol):
    """Diagonalize symmetric ``a`` in place by cyclic Jacobi rotations.

    ``a`` is overwritten; its diagonal holds the eigenvalues on exit.  ``v``
    must be the identity on entry and accumulates the eigenvectors (columns).
    Returns the number of sweeps used, or -1 if ``max_sweeps`` was reached
    before the off-diagonal mass fell below ``tol`` times the matrix scale.
    """
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t p, q, k, sweep
    cdef double off, scale, apq, app, aqq, theta, t, c, s, tau, g, h

    scale = 0.0
    for p in range(n):
        for q in range(n):
            if fabs(a[p, q]) > scale:
                scale = fabs(a[p, q])
    if scale == 0.0:
        return 0

    for sweep in range(max_sweeps):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                off += fabs(a[p, q])
        if off <= tol * scale:
            return sweep
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if fabs(apq) <= 1e-300:
                    continue
                app = a[p, p]
                aqq = a[q, q]
                theta = 0.5 * (aqq - app) / apq
                if fabs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = 1.0 / (fabs(theta) + sqrt(1.0 + theta * theta))
                    if theta < 0.0:
                        t = -t
                c = 1.0 / sqrt(1.0 + t * t)
                s = t * c
                tau = s / (1.0 + c)
                a[p, p] = app - t * apq
                a[q, q] = aqq + t * apq
                a[p, q] = 0.0
                a[q, p] = 0.0
                for k in range(n):
                    if k != p and k != q:
                        g = a[k, p]
                        h = a[k, q]
                        a[k, p] = g - s * (h + g * tau)
                        a[k, q] = h + s * (g - h * tau)
                        a[p, k] = a[k, p]
                        a[q, k] = a[k, q]
                for k in range(n):
                    g = v[k, p]
                    h = v[k, q]
                    v[k, p] = g - s * (h + g * tau)
                    v[k, q] = h + s * (g - h * tau)
    off = 0.0
    for p in range(n - 1):
        for q in range(p + 1, n):
            off += fabs(a[p, q])
    if off <= tol * scale:
        return max_sweeps
    return -1


def cholesky_lower(double[:, ::1] a):
    """Overwrite ``a`` with its lower Cholesky factor (upper part zeroed).

    Returns -1 on success, or the index of the first non-positive pivot.
    """
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t i, j, k
    cdef double s

    for j in range(n):
        s = a[j, j]
        for k in range(j):
            s -= a[j, k] * a[j, k]
        if s <= 0.0:
            return j
        s = sqrt(s)
        a[j, j] = s
        for i in range(j + 1, n):
            a[i, j] = (a[i, j] - np_dot_row(a, i, j)) / s
        for i in range(j):
            a[i, j] = 0.0
    return -1


cdef inline double np_dot_row(double[:, ::1] a, Py_ssize_t i, Py_ssize_t j):
    cdef Py_ssize_t k
    cdef double s = 0.0
    for k in range(j):
        s += a[i, k] * a[j, k]
    return s


def solve_triangular(double[:, ::1] l, double[:, ::1] b, bint transpose):
    """Solve ``L x = b`` (or ``L^T x = b``) in place for lower-triangular L.

    ``b`` is n-by-k and holds the solution on exit.
    """
    cdef Py_ssize_t n = l.shape[0]
    cdef Py_ssize_t k = b.shape[1]
    cdef Py_ssize_t i, j, c
    cdef double s

    if not transpose:
        for c in range(k):
            for i in range(n):
                s = b[i, c]
                for j in range(i):
                    s -= l[i, j] * b[j, c]
                b[i, c] = s / l[i, i]
    else:
        for c in range(k):
            for i in range(n - 1, -1, -1):
                s = b[i, c]
                for j in range(i + 1, n):
                    s -= l[j, i] * b[j, c]
                b[i, c] = s / l[i, i]
    return None
