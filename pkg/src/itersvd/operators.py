"""Operator wrappers used by the two solve stages.

A rectangular matrix enters the solver either as explicit CSR storage or
as a pair of apply callbacks.  From it we derive the two symmetric
operators the stages iterate with: the normal-equations operator (the
matrix times its transpose, taken in whichever order gives the smaller
dimension) and the augmented operator

    [ 0   A^T ]
    [ A   0   ]

acting on stacked vectors whose first n entries hold the right-side part
and whose last m entries hold the left-side part.
"""

import warnings

import numpy as np

from .kernels import EPS, new_block
from .matio import SparseMatrixCsr, spmv_block

# Number of random probes used to vet a transpose pair at construction.
_PROBE_COUNT = 10
_PROBE_TOL = 1e-12


class LinearOperator:
    """Square operator defined by an apply callback on dense blocks."""

    def __init__(self, dim, apply_fn, symmetric=True):
        self.dim = int(dim)
        self._apply = apply_fn
        self.symmetric = symmetric
        self.n_applies = 0

    def apply(self, x):
        """Apply to a block (dim, b) column by column; counts applications."""
        x = np.asarray(x, dtype=np.float64)
        squeeze = x.ndim == 1
        if squeeze:
            x = x[:, None]
        if x.shape[0] != self.dim:
            raise ValueError("operand has wrong leading dimension")
        self.n_applies += x.shape[1]
        y = self._apply(x)
        return y[:, 0] if squeeze else y


class SvdOperator:
    """A rectangular matrix with forward and transpose products.

    Wraps either a :class:`SparseMatrixCsr`, a dense array, or a pair of
    callables; tracks how many single-vector products (forward plus
    transpose) have been requested.  When the matrix is explicit the
    forward/transpose pair is vetted at construction with random probes
    of ``<y, A x> == <A^T y, x>``.
    """

    def __init__(self, m, n, apply_fn, apply_t_fn, explicit=None, check=True):
        self.m = int(m)
        self.n = int(n)
        if self.m <= 0 or self.n <= 0:
            raise ValueError("matrix dimensions must be positive")
        self._apply = apply_fn
        self._apply_t = apply_t_fn
        self.explicit = explicit
        self.n_matvecs = 0
        if check and explicit is not None:
            self._check_transpose_pair()

    @classmethod
    def from_csr(cls, a, check=True):
        return cls(a.m, a.n,
                   lambda x: spmv_block(a, x),
                   lambda y: spmv_block(a, y, transpose=True),
                   explicit=a, check=check)

    @classmethod
    def from_dense(cls, arr, check=True):
        return cls.from_csr(SparseMatrixCsr.from_dense(arr), check=check)

    @classmethod
    def from_callables(cls, m, n, apply_fn, apply_t_fn):
        return cls(m, n, apply_fn, apply_t_fn)

    @classmethod
    def wrap(cls, a):
        if isinstance(a, SvdOperator):
            return a
        if isinstance(a, SparseMatrixCsr):
            return cls.from_csr(a)
        return cls.from_dense(np.asarray(a, dtype=np.float64))

    def _check_transpose_pair(self):
        scale = self.explicit.fro_norm()
        rng = np.random.default_rng(2 ** 20 + self.m * 31 + self.n)
        for _ in range(_PROBE_COUNT):
            x = rng.standard_normal(self.n)
            y = rng.standard_normal(self.m)
            lhs = float(y @ self._apply(x[:, None])[:, 0])
            rhs = float(self._apply_t(y[:, None])[:, 0] @ x)
            bound = _PROBE_TOL * max(1.0, scale) * \
                np.linalg.norm(x) * np.linalg.norm(y)
            if abs(lhs - rhs) > bound:
                raise ValueError("forward and transpose products disagree")

    def _block(self, x, rows):
        x = np.asarray(x, dtype=np.float64)
        squeeze = x.ndim == 1
        if squeeze:
            x = x[:, None]
        if x.shape[0] != rows:
            raise ValueError("operand has wrong leading dimension")
        return x, squeeze

    def apply(self, x):
        """Forward product; one matvec counted per column."""
        x, squeeze = self._block(x, self.n)
        self.n_matvecs += x.shape[1]
        y = np.asarray(self._apply(x), dtype=np.float64)
        return y[:, 0] if squeeze else y

    def apply_t(self, y):
        """Transpose product; one matvec counted per column."""
        y, squeeze = self._block(y, self.m)
        self.n_matvecs += y.shape[1]
        x = np.asarray(self._apply_t(y), dtype=np.float64)
        return x[:, 0] if squeeze else x

    def transposed(self):
        """A transposed view sharing this operator's matvec counter."""
        return _TransposedSvdOperator(self)

    def reset_counter(self):
        self.n_matvecs = 0


class _TransposedSvdOperator:
    def __init__(self, base):
        self.base = base
        self.m = base.n
        self.n = base.m
        self.explicit = None

    @property
    def n_matvecs(self):
        return self.base.n_matvecs

    def apply(self, x):
        return self.base.apply_t(x)

    def apply_t(self, y):
        return self.base.apply(y)

    def transposed(self):
        return self.base

    def reset_counter(self):
        self.base.reset_counter()


def make_normal_operator(a):
    """Normal-equations operator of the smaller dimension.

    Returns ``x -> A^T (A x)`` of dimension n when ``m >= n``, otherwise
    ``x -> A (A^T x)`` of dimension m.  Each application costs two matvecs
    per column on the underlying matrix.
    """
    if a.m >= a.n:
        return LinearOperator(a.n, lambda x: a.apply_t(a.apply(x)))
    return LinearOperator(a.m, lambda x: a.apply(a.apply_t(x)))


def make_augmented_operator(a):
    """Symmetric augmented operator on stacked ``[right; left]`` vectors.

    For input ``x = [xv (n); xu (m)]`` the product is
    ``[A^T xu; A xv]``; eigenvalues come in pairs at plus/minus each
    singular value plus ``|m - n|`` zeros.
    """
    n, m = a.n, a.m

    def apply(x):
        y = new_block(n + m, x.shape[1])
        y[:n, :] = a.apply_t(x[n:, :])
        y[n:, :] = a.apply(x[:n, :])
        return y

    return LinearOperator(n + m, apply)


class Preconditioner:
    """Approximate inverse applied to residuals before basis expansion.

    ``mode`` declares which operator the preconditioner approximates:
    ``"AtA"`` or ``"AAt"`` for one of the normal-equations operators,
    ``"augmented"`` for the stacked operator, ``"none"`` for identity.
    The solver skips a preconditioner whose mode does not match the
    operator of the running stage.
    """

    MODES = ("AtA", "AAt", "augmented", "none")

    def __init__(self, mode, apply_fn=None):
        if mode not in self.MODES:
            raise ValueError("unknown preconditioner mode %r" % (mode,))
        self.mode = mode
        self._apply = apply_fn
        self.n_applies = 0

    def apply(self, x):
        x = np.asarray(x, dtype=np.float64)
        squeeze = x.ndim == 1
        if squeeze:
            x = x[:, None]
        self.n_applies += x.shape[1]
        if self.mode == "none" or self._apply is None:
            y = x.copy()
        else:
            y = self._apply(x)
        return y[:, 0] if squeeze else y


def jacobi_precond_on_normal(a, side="cols"):
    """Point Jacobi preconditioner for a normal-equations operator.

    The diagonal of the normal operator is the vector of squared column
    norms of the matrix (``side="cols"``, preconditions the n-dimensional
    operator) or squared row norms (``side="rows"``, the m-dimensional
    one); ``side="auto"`` picks whichever matches the smaller dimension.
    Entries are clamped below at ``EPS`` times the largest diagonal entry
    so the inverse stays bounded.
    """
    csr = a.explicit if isinstance(a, SvdOperator) else a
    if csr is None:
        raise ValueError("point Jacobi needs explicit matrix storage")
    if csr.nnz == 0:
        raise ValueError("empty matrix has no usable diagonal")
    if side == "auto":
        side = "cols" if csr.m >= csr.n else "rows"
    if side == "cols":
        d, mode = csr.column_sq_norms(), "AtA"
    elif side == "rows":
        d, mode = csr.row_sq_norms(), "AAt"
    else:
        raise ValueError("side must be 'cols', 'rows' or 'auto'")
    d = np.maximum(d, EPS * d.max())
    return Preconditioner(mode, lambda x: x / d[:, None])


class NormEstimate:
    """Running estimate of the squared spectral norm of the matrix.

    ``c_norm`` tracks the largest Ritz value magnitude observed on the
    normal-equations operator and never decreases; ``a_norm`` is its
    square root.  A user-supplied matrix norm short-circuits both.
    """

    def __init__(self, user_supplied=None):
        if user_supplied is not None and user_supplied <= 0.0:
            raise ValueError("a user-supplied norm must be positive")
        self.user_supplied = user_supplied
        self._c_running = 0.0

    @property
    def c_norm(self):
        if self.user_supplied is not None:
            return self.user_supplied ** 2
        return self._c_running

    @property
    def a_norm(self):
        if self.user_supplied is not None:
            return self.user_supplied
        return float(np.sqrt(self._c_running))

    def update(self, ritz_values):
        """Fold in Ritz values observed on the normal-equations operator."""
        values = np.atleast_1d(np.asarray(ritz_values, dtype=np.float64))
        if values.size:
            peak = float(np.abs(values).max())
            if peak > self._c_running:
                self._c_running = peak
        return self

    def update_from_augmented(self, ritz_values):
        """Fold in Ritz values observed on the augmented operator."""
        values = np.atleast_1d(np.asarray(ritz_values, dtype=np.float64))
        if values.size:
            self.update(float(np.abs(values).max()) ** 2)
        return self


def update_norm_estimate(est, ritz_values):
    """Functional alias for :meth:`NormEstimate.update`."""
    return est.update(ritz_values)


def select_preconditioner(precond, wanted_mode):
    """Return ``precond`` if it matches the stage, else ``None`` (warns)."""
    if precond is None or precond.mode == "none":
        return None
    if precond.mode != wanted_mode:
        warnings.warn("preconditioner mode %r does not match stage mode %r; "
                      "ignoring it" % (precond.mode, wanted_mode),
                      stacklevel=2)
        return None
    return precond
