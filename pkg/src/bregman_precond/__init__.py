"""Low-rank preconditioners for SPD systems S = A + B, chosen to minimize
the log-determinant Bregman divergence to S, with randomized sketching,
PCG, divergence diagnostics and reproducible benchmark experiments.
"""

from ._backend import BACKEND
from .bregman import (
    DivergenceReport,
    TermMatrix,
    deviation_bound,
    divergence_frobenius,
    divergence_ld,
    divergence_scaled_closed_form,
    divergence_terms,
    divergence_von_neumann,
    suboptimality_bound,
)
from .errors import (
    DenseCapExceeded,
    DimensionMismatch,
    EigNoConvergence,
    HypothesisViolated,
    IllConditionedCore,
    IndefiniteInput,
    NotPositiveDefinite,
    RankDeficientSketch,
    ZeroSketch,
)
from .linop import (
    DenseSym,
    FactoredSpd,
    LinearOperator,
    cholesky_factor,
    dense_eig_sym,
)
from .mmio import read_matrix, write_matrix
from .pcg import (
    SolveReport,
    extreme_eigs_estimate,
    generalized_eigs,
    lanczos_extreme_eigs,
    pcg_solve,
)
from .precond import (
    BlockPartition,
    Preconditioner,
    build_block_jacobi,
    build_jacobi,
    build_lifted_scaled,
    build_nonscaled,
    build_partial_cholesky,
    build_scaled,
    build_sgs,
    identity_precond,
)
from .sketch import (
    LowRankEig,
    SketchConfig,
    gaussian_test_matrix,
    make_rng,
    nystrom,
    randomized_evd,
    range_finder,
    single_pass_evd,
    truncated_evd,
)
from .testgen import (
    SPECTRUM_LABELS_A,
    SPECTRUM_LABELS_B,
    FourDVarConfig,
    FourDVarSystem,
    SpectrumParams,
    SyntheticProblem,
    assemble_heat_4dvar,
    assemble_synthetic,
    build_4dvar_preconditioners,
    spectrum,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "__version__",
    # linop
    "LinearOperator",
    "DenseSym",
    "FactoredSpd",
    "cholesky_factor",
    "dense_eig_sym",
    # mmio
    "read_matrix",
    "write_matrix",
    # sketch
    "LowRankEig",
    "SketchConfig",
    "make_rng",
    "gaussian_test_matrix",
    "truncated_evd",
    "range_finder",
    "randomized_evd",
    "nystrom",
    "single_pass_evd",
    # precond
    "Preconditioner",
    "BlockPartition",
    "identity_precond",
    "build_scaled",
    "build_nonscaled",
    "build_lifted_scaled",
    "build_jacobi",
    "build_block_jacobi",
    "build_sgs",
    "build_partial_cholesky",
    # bregman
    "DivergenceReport",
    "TermMatrix",
    "divergence_ld",
    "divergence_scaled_closed_form",
    "divergence_frobenius",
    "divergence_von_neumann",
    "divergence_terms",
    "suboptimality_bound",
    "deviation_bound",
    # pcg
    "SolveReport",
    "pcg_solve",
    "generalized_eigs",
    "extreme_eigs_estimate",
    "lanczos_extreme_eigs",
    # testgen
    "SpectrumParams",
    "SPECTRUM_LABELS_A",
    "SPECTRUM_LABELS_B",
    "spectrum",
    "SyntheticProblem",
    "assemble_synthetic",
    "FourDVarConfig",
    "FourDVarSystem",
    "assemble_heat_4dvar",
    "build_4dvar_preconditioners",
    # errors
    "DimensionMismatch",
    "NotPositiveDefinite",
    "EigNoConvergence",
    "IndefiniteInput",
    "RankDeficientSketch",
    "ZeroSketch",
    "IllConditionedCore",
    "HypothesisViolated",
    "DenseCapExceeded",
]
