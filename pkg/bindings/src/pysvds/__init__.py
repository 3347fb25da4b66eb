"""Thin scripting interface to the itersvd partial-SVD library.

``svds`` computes a few extreme singular triplets of a matrix given as a
dense array, sparse coordinate data, or a pair of matrix-vector
callables; ``cond_est`` estimates the 2-norm condition number.  The
binding only adapts inputs and outputs: every numeric decision happens
inside :mod:`itersvd`, the seed passes through untouched, and the
returned arrays are the library's own, so results are bitwise identical
to calling the core library (or its command line) with the same request.

Input errors and solver failures are raised as :class:`PySvdsError`,
which subclasses :class:`ValueError` and carries the core message.
"""

import dataclasses

import numpy as np

from itersvd import (BasisCollapseError, Preconditioner, SparseMatrixCsr,
                     SvdOperator, SvdsConfig, estimate_condition_number,
                     svds_solve)

__version__ = "0.1.0"

__all__ = ["PySvdsError", "cond_est", "svds", "__version__"]

_CONFIG_FIELDS = frozenset(f.name for f in dataclasses.fields(SvdsConfig))
_RESERVED = ("num_svals", "target", "eps", "seed")
_WHICH = {"L": "largest", "S": "smallest"}


class PySvdsError(ValueError):
    """A rejected request or a failed solve, raised at the binding."""


def _block_adapter(fn, rows_out):
    """Adapt a user callable to the core block contract.

    The callable receives a C-contiguous ``(dim, b)`` block and must
    return ``(rows_out, b)``; a 1-column result may come back flat.
    """

    def call(x):
        x = np.ascontiguousarray(x)
        y = np.asarray(fn(x), dtype=np.float64)
        if y.ndim == 1:
            y = y.reshape(-1, 1)
        if y.shape != (rows_out, x.shape[1]):
            raise PySvdsError(
                "operator callable returned shape %r, expected %r"
                % (y.shape, (rows_out, x.shape[1])))
        return y

    return call


def _as_float_array(a, name):
    arr = np.asarray(a)
    if np.iscomplexobj(arr):
        raise PySvdsError("%s must be real" % name)
    return arr.astype(np.float64, copy=False)


def _wrap_matrix(a, m, n):
    """Accept a dense array, coordinate data, callables, or core types."""
    if isinstance(a, (SvdOperator, SparseMatrixCsr)):
        return SvdOperator.wrap(a)
    if isinstance(a, tuple):
        if len(a) == 2 and callable(a[0]) and callable(a[1]):
            if m is None or n is None:
                raise PySvdsError("callable operators need explicit m and n")
            m, n = int(m), int(n)
            return SvdOperator.from_callables(
                m, n, _block_adapter(a[0], m), _block_adapter(a[1], n))
        if len(a) in (3, 4):
            rows = np.asarray(a[0], dtype=np.int64)
            cols = np.asarray(a[1], dtype=np.int64)
            vals = _as_float_array(a[2], "values")
            if len(a) == 4:
                m, n = int(a[3][0]), int(a[3][1])
            if m is None or n is None:
                raise PySvdsError("coordinate data needs a shape "
                                  "(4th element) or explicit m and n")
            return SvdOperator.wrap(
                SparseMatrixCsr.from_coo(int(m), int(n), rows, cols, vals))
        raise PySvdsError(
            "matrix tuple must be (matvec, rmatvec), "
            "(rows, cols, values), or (rows, cols, values, shape)")
    arr = _as_float_array(a, "matrix")
    if arr.ndim != 2:
        raise PySvdsError("matrix must be two-dimensional")
    return SvdOperator.wrap(arr)


def _wrap_precond(precond, mode, op):
    if precond is None:
        return None
    if isinstance(precond, Preconditioner):
        return precond
    if not callable(precond):
        raise PySvdsError("precond must be a callable or a Preconditioner")
    if mode == "auto":
        mode = "AtA" if op.m >= op.n else "AAt"
    dims = {"AtA": op.n, "AAt": op.m, "augmented": op.m + op.n}
    if mode not in dims:
        raise PySvdsError("precond_mode must be 'auto', 'AtA', 'AAt', "
                          "or 'augmented'")
    return Preconditioner(mode, _block_adapter(precond, dims[mode]))


def _make_config(k, which, tol, seed, options):
    if which not in _WHICH:
        raise PySvdsError("which must be 'L' (largest) or 'S' (smallest)")
    clash = [key for key in _RESERVED if key in options]
    if clash:
        raise PySvdsError("option(s) %s have dedicated parameters"
                          % ", ".join(sorted(clash)))
    unknown = [key for key in options if key not in _CONFIG_FIELDS]
    if unknown:
        raise PySvdsError("unknown option(s) %s" % ", ".join(sorted(unknown)))
    return SvdsConfig(num_svals=int(k), target=_WHICH[which],
                      eps=float(tol), seed=int(seed), **options)


def _stats_dict(res):
    s = res.stats
    return {
        "stage1_matvecs": int(s.stage1_matvecs),
        "stage2_matvecs": int(s.stage2_matvecs),
        "precond_applies": int(s.precond_applies),
        "restarts": int(s.restarts),
        "resets": int(s.resets),
        "seconds": float(s.seconds),
        "status": res.status,
        "converged": [bool(c) for c in res.converged],
    }


def svds(a, k=1, which="L", tol=1e-12, seed=0, m=None, n=None,
         precond=None, precond_mode="auto", **options):
    """Compute ``k`` extreme singular triplets of ``a``.

    Parameters
    ----------
    a : array, tuple, or core matrix type
        A dense real 2-D array; ``(rows, cols, values)`` coordinate data
        (with ``m``/``n`` or a ``(m, n)`` 4th element); or a
        ``(matvec, rmatvec)`` pair of callables operating on contiguous
        ``(dim, b)`` blocks, which requires explicit ``m`` and ``n``.
    k : int
        Number of triplets.
    which : str
        ``'L'`` for the largest values, ``'S'`` for the smallest.
    tol : float
        Relative accuracy of each triplet's two-sided residual.
    seed : int
        Fixes every random choice; same request and seed give bitwise
        identical results.
    precond : callable or Preconditioner, optional
        Approximate inverse applied to residuals; a plain callable is
        wrapped with ``precond_mode`` (``'auto'`` preconditions the
        normal-equations operator on the smaller side).
    **options
        Extra :class:`itersvd.SvdsConfig` fields, e.g. ``max_basis_size``
        or ``max_matvecs``.

    Returns
    -------
    (sigma, u, v, rnorms, stats)
        Arrays straight from the core library (values ascending for
        ``'S'``, descending for ``'L'``) and a dict of solve counters
        plus ``status`` and per-triplet ``converged`` flags.
    """
    cfg = _make_config(k, which, tol, seed, options)
    op = _wrap_matrix(a, m, n)
    pre = _wrap_precond(precond, precond_mode, op)
    try:
        res = svds_solve(op, precond=pre, cfg=cfg)
    except PySvdsError:
        raise
    except (ValueError, BasisCollapseError) as exc:
        raise PySvdsError(str(exc)) from exc
    return res.sigma, res.u, res.v, res.rnorms, _stats_dict(res)


def cond_est(a, tol=0.1, seed=0, m=None, n=None):
    """Estimate the 2-norm condition number of ``a``.

    Returns ``sigma_max / sigma_min`` computed from two loose targeted
    solves with relative accuracy ``tol`` each; ``float('inf')`` when
    the matrix is numerically rank-deficient.  If the smallest-value
    solve is cut off by its budget the returned value is only a lower
    bound on the true condition number.
    """
    op = _wrap_matrix(a, m, n)
    try:
        est = estimate_condition_number(op, cfg=SvdsConfig(seed=int(seed)),
                                        rel_tol=float(tol))
    except PySvdsError:
        raise
    except (ValueError, BasisCollapseError) as exc:
        raise PySvdsError(str(exc)) from exc
    return float("inf") if est.infinite else float(est.kappa)
