"""Iterative partial SVD of large sparse matrices.

Two-stage solver for a few extreme singular triplets: a fast eigensolve on
the normal-equations operator, then (only when the requested accuracy
demands it) an interior refinement on the stacked symmetric operator.
Matrices enter as CSR structures, dense arrays, or matrix-free callables.

Set ``SVDS_THREADS`` before the first import to cap the dense-algebra
backend's thread count; a fixed count plus a fixed seed makes results
bitwise reproducible.
"""

import os as _os

if "SVDS_THREADS" in _os.environ:
    _t = _os.environ["SVDS_THREADS"]
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                 "MKL_NUM_THREADS", "VECLIB_MAXIMUM_THREADS",
                 "NUMEXPR_NUM_THREADS"):
        _os.environ.setdefault(_var, _t)

from .eigensolver import (BasisCollapseError, EigConfig, EigResult,
                          EigStats, eig_solve)
from .hybrid import (CondResult, StageBridge, SvdsConfig, SvdsResult,
                     SvdsStats, compute_svd_residual,
                     estimate_condition_number, orient_problem,
                     stage1_convergence_test, stage1_postprocess,
                     stage2_convergence_test, stage2_shifts, svds_solve)
from .matio import (MatrixMarketError, SparseMatrixCsr, SpectrumSpec,
                    read_dense_market, read_matrix_market, synth_matrix,
                    write_dense_market, write_matrix_market)
from .operators import (LinearOperator, NormEstimate, Preconditioner,
                        SvdOperator, jacobi_precond_on_normal,
                        make_augmented_operator, make_normal_operator,
                        update_norm_estimate)

__version__ = "0.1.0"

__all__ = [
    "BasisCollapseError", "CondResult", "EigConfig", "EigResult",
    "EigStats", "LinearOperator", "MatrixMarketError", "NormEstimate",
    "Preconditioner", "SparseMatrixCsr", "SpectrumSpec", "StageBridge",
    "SvdOperator", "SvdsConfig", "SvdsResult", "SvdsStats",
    "compute_svd_residual", "eig_solve", "estimate_condition_number",
    "jacobi_precond_on_normal", "make_augmented_operator",
    "make_normal_operator", "orient_problem", "read_dense_market",
    "read_matrix_market", "stage1_convergence_test", "stage1_postprocess",
    "stage2_convergence_test", "stage2_shifts", "svds_solve",
    "synth_matrix", "update_norm_estimate", "write_dense_market",
    "write_matrix_market",
    "__version__",
]
