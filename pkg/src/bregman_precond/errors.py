"""Exception types shared across the package."""


class DimensionMismatch(ValueError):
    """Operand dimensions are incompatible."""

    def __init__(self, expected, got):
        super().__init__(f"dimension mismatch: expected {expected}, got {got}")
        self.expected = expected
        self.got = got


class NotPositiveDefinite(ValueError):
    """A Cholesky factorization hit a non-positive pivot."""

    def __init__(self, pivot_index, message=None):
        super().__init__(message or f"non-positive pivot at index {pivot_index}")
        self.pivot_index = pivot_index


class EigNoConvergence(RuntimeError):
    """The Jacobi eigensolver did not converge within its sweep cap."""


class IndefiniteInput(ValueError):
    """An operation requiring a PSD matrix received an indefinite one."""


class RankDeficientSketch(RuntimeError):
    """A sketch lost rank (tiny diagonal entry in its QR factor)."""


class ZeroSketch(RuntimeError):
    """A sketch came back identically zero."""


class IllConditionedCore(RuntimeError):
    """The small core system of a single-pass sketch is too ill-conditioned."""


class HypothesisViolated(ValueError):
    """A bound was requested outside the hypotheses it needs."""


class DenseCapExceeded(ValueError):
    """A dense-only diagnostic was requested above the dense size cap."""
