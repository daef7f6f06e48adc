"""Matrix Market reader/writer for real symmetric matrices.

Supports the coordinate and array formats with the standard
``%%MatrixMarket matrix`` header and 1-based indices.  Symmetric files
store the lower triangle only.
"""

import numpy as np

from .linop import DenseSym

__all__ = ["read_matrix", "write_matrix"]


def read_matrix(path):
    """Read a Matrix Market file into a :class:`DenseSym`."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split()
        if len(header) < 5 or header[0] != "%%MatrixMarket" or header[1] != "matrix":
            raise ValueError(f"not a MatrixMarket matrix file: {path}")
        fmt, field, symmetry = header[2], header[3], header[4]
        if fmt not in ("coordinate", "array"):
            raise ValueError(f"unsupported format {fmt!r}")
        if field != "real":
            raise ValueError(f"unsupported field {field!r}")
        if symmetry not in ("symmetric", "general"):
            raise ValueError(f"unsupported symmetry {symmetry!r}")

        line = fh.readline()
        while line.startswith("%"):
            line = fh.readline()
        sizes = line.split()

        if fmt == "coordinate":
            rows, cols, nnz = (int(t) for t in sizes)
            if rows != cols:
                raise ValueError("expected a square matrix")
            a = np.zeros((rows, cols))
            for _ in range(nnz):
                i_s, j_s, v_s = fh.readline().split()
                i, j, v = int(i_s) - 1, int(j_s) - 1, float(v_s)
                a[i, j] = v
                if symmetry == "symmetric":
                    a[j, i] = v
        else:
            rows, cols = (int(t) for t in sizes)
            if rows != cols:
                raise ValueError("expected a square matrix")
            a = np.zeros((rows, cols))
            if symmetry == "symmetric":
                # column-major lower triangle
                for j in range(cols):
                    for i in range(j, rows):
                        v = float(fh.readline())
                        a[i, j] = v
                        a[j, i] = v
            else:
                for j in range(cols):
                    for i in range(rows):
                        a[i, j] = float(fh.readline())
    return DenseSym(a)


def write_matrix(path, a, fmt="coordinate", tol=0.0):
    """Write a symmetric matrix in Matrix Market form.

    In coordinate format, entries of the lower triangle with absolute value
    above ``tol`` are written.
    """
    if isinstance(a, DenseSym):
        a = a.entries
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    with open(path, "w", encoding="utf-8") as fh:
        if fmt == "coordinate":
            fh.write("%%MatrixMarket matrix coordinate real symmetric\n")
            entries = [
                (i, j, a[i, j])
                for j in range(n)
                for i in range(j, n)
                if abs(a[i, j]) > tol
            ]
            fh.write(f"{n} {n} {len(entries)}\n")
            for i, j, v in entries:
                fh.write(f"{i + 1} {j + 1} {float(v)!r}\n")
        elif fmt == "array":
            fh.write("%%MatrixMarket matrix array real symmetric\n")
            fh.write(f"{n} {n}\n")
            for j in range(n):
                for i in range(j, n):
                    fh.write(f"{float(a[i, j])!r}\n")
        else:
            raise ValueError(f"unsupported format {fmt!r}")
