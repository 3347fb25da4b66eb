"""Dense kernels shared by the iterative solvers.

Conventions used throughout the package:

* a "block" is a 2-D float64 ndarray in Fortran (column-major) order whose
  columns are the vectors of interest; basis updates then touch contiguous
  memory one column at a time,
* small projected matrices (the Rayleigh projection and the R factor of a
  tall-skinny QR) are square float64 ndarrays, kept numerically symmetric
  resp. upper triangular by construction,
* no complex arithmetic anywhere; inputs are real and stay real.

Small dense eigen/SVD factorizations delegate to LAPACK through numpy; the
contracts below (ordering, sign conventions, orthogonality levels) are what
the rest of the package relies on, not the underlying algorithm.
"""

import numpy as np

EPS = 2.220446049250313e-16

# Iterated Gram-Schmidt repeats a projection pass while the surviving norm
# drops below this fraction of the norm it started the pass with.
REORTH_FACTOR = 1.0 / np.sqrt(2.0)

# A column whose norm collapses below DEFICIENT_TOL times its original norm
# on two consecutive passes is declared numerically dependent.
DEFICIENT_TOL = 1e-14

_MAX_REORTH_PASSES = 6
_MAX_RANDOM_RETRIES = 20


def new_block(rows, cols, dtype=np.float64):
    """Allocate a zeroed column-major block."""
    return np.zeros((rows, cols), dtype=dtype, order="F")


def _as_block_list(against):
    if against is None:
        return []
    if isinstance(against, (list, tuple)):
        return [b for b in against if b is not None and b.shape[1] > 0]
    return [against] if against.shape[1] > 0 else []


def _project_out(v, blocks):
    """One classical Gram-Schmidt pass of v against every block, in order."""
    for b in blocks:
        v -= b @ (b.T @ v)
    return v


def orthonormalize(block, against=None, start_col=0, rng=None):
    """Orthonormalize the trailing columns of a block in place.

    Columns ``start_col:`` of ``block`` are orthonormalized, in order,
    against every column of ``against`` (one block or a list of blocks,
    all assumed orthonormal already) and against the earlier columns of
    ``block`` itself.  Iterated classical Gram-Schmidt is used, repeating
    a projection pass whenever the surviving norm falls below
    ``REORTH_FACTOR`` times the pre-pass norm.

    A column that collapses (norm below ``DEFICIENT_TOL`` times its
    original norm on two consecutive passes) is replaced by a random
    direction drawn from ``rng``, orthonormalized the same way, and its
    index is recorded.

    Parameters
    ----------
    block : ndarray (rows, cols)
        Modified in place.  Columns before ``start_col`` must already be
        orthonormal (and orthogonal to ``against``).
    against : ndarray or list of ndarray, optional
        External orthonormal blocks to deflate against.
    start_col : int
        First column to process.
    rng : numpy.random.Generator, optional
        Source for replacement directions.  A fixed-seed generator is
        created when omitted so results stay reproducible.

    Returns
    -------
    replaced : list of int
        Indices of columns that were replaced by random directions.
    """
    rows, cols = block.shape
    ext = _as_block_list(against)
    n_ext = sum(b.shape[1] for b in ext)
    for b in ext:
        if b.shape[0] != rows:
            raise ValueError("dimension mismatch between block and against")
    if n_ext + cols > rows:
        raise ValueError("more columns than the space can hold")
    if rng is None:
        rng = np.random.default_rng(0)

    replaced = []
    for j in range(start_col, cols):
        prior = ext + ([block[:, :j]] if j > 0 else [])
        v = block[:, j]
        flagged = False
        for _ in range(_MAX_RANDOM_RETRIES):
            orig = np.linalg.norm(v)
            final = 0.0
            if orig > 0.0:
                prev = orig
                collapses = 0
                for _ in range(_MAX_REORTH_PASSES):
                    _project_out(v, prior)
                    cur = np.linalg.norm(v)
                    if cur < DEFICIENT_TOL * orig:
                        collapses += 1
                        if collapses >= 2:
                            break
                    elif cur > REORTH_FACTOR * prev:
                        final = cur
                        break
                    else:
                        collapses = 0
                    prev = cur
            if final > 0.0:
                v /= final
                break
            # dependent direction: retry with a fresh random vector
            if not flagged:
                replaced.append(j)
                flagged = True
            v[:] = rng.standard_normal(rows)
        else:
            raise np.linalg.LinAlgError(
                "orthonormalize could not produce an independent column")
    return replaced


def sym_eig(h):
    """Full eigendecomposition of a small symmetric matrix.

    Returns ``(w, y)`` with eigenvalues ``w`` ascending and orthonormal
    eigenvector columns ``y``.
    """
    h = np.asarray(h, dtype=np.float64)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError("sym_eig expects a square matrix")
    return np.linalg.eigh(h)


def small_svd(r):
    """Singular values (descending) and right singular vectors of a small matrix.

    Returns ``(s, v)`` where ``v[:, i]`` is the right singular vector for
    ``s[i]``; in particular ``v[:, -1]`` minimizes ``||r @ y||`` over unit
    vectors ``y``.
    """
    r = np.asarray(r, dtype=np.float64)
    _, s, vt = np.linalg.svd(r, full_matrices=False)
    return s, vt.T


def qr_append(q, r, new_col, rng=None):
    """Extend a thin QR factorization by one column.

    Given ``q`` (orthonormal columns) and upper-triangular ``r`` with
    ``q @ r`` equal to the columns factored so far, returns ``(q2, r2,
    deficient)`` factoring the same columns plus ``new_col``.  Diagonal
    entries of ``r2`` are nonnegative.

    A ``new_col`` that already lies in ``span(q)`` yields a zero diagonal
    entry, a random replacement direction in ``q2`` (so ``q2`` stays
    orthonormal) and ``deficient=True``; the caller decides what to do
    with the flag.
    """
    rows = new_col.shape[0]
    g = q.shape[1]
    if q.shape[0] != rows or r.shape != (g, g):
        raise ValueError("inconsistent QR dimensions")
    if rng is None:
        rng = np.random.default_rng(0)

    v = np.array(new_col, dtype=np.float64, copy=True)
    coef = np.zeros(g)
    orig = np.linalg.norm(v)
    prev = orig
    deficient = orig == 0.0
    collapses = 1 if deficient else 0
    if not deficient:
        for _ in range(_MAX_REORTH_PASSES):
            c = q.T @ v
            coef += c
            v -= q @ c
            cur = np.linalg.norm(v)
            if cur < DEFICIENT_TOL * orig:
                collapses += 1
                if collapses >= 2:
                    deficient = True
                    break
            elif cur > REORTH_FACTOR * prev:
                break
            else:
                collapses = 0
            prev = cur
        else:
            deficient = True

    q2 = np.empty((rows, g + 1), order="F")
    q2[:, :g] = q
    r2 = np.zeros((g + 1, g + 1))
    r2[:g, :g] = r
    r2[:g, g] = coef
    if deficient:
        # keep q orthonormal with a random direction; the zero R entry
        # records that the column added nothing new
        fill = new_block(rows, 1)
        fill[:, 0] = rng.standard_normal(rows)
        orthonormalize(fill, against=q, rng=rng)
        q2[:, g] = fill[:, 0]
        r2[g, g] = 0.0
    else:
        nrm = np.linalg.norm(v)
        q2[:, g] = v / nrm
        r2[g, g] = nrm
    return q2, r2, deficient


def qr_restart(q, r, y):
    """Rebuild a thin QR factorization after a basis restart.

    When the factored block ``M = q @ r`` is compressed to ``M @ y`` (with
    orthonormal ``y``), the new factorization follows from the small QR of
    ``r @ y`` without touching the tall block again.  Returns ``(q2, r2)``
    with nonnegative diagonal in ``r2``.
    """
    g = q.shape[1]
    if r.shape != (g, g) or y.shape[0] != g:
        raise ValueError("inconsistent restart dimensions")
    qy, ry = np.linalg.qr(r @ y)
    # absorb signs so the diagonal of the new R is nonnegative
    sign = np.where(np.diag(ry) < 0.0, -1.0, 1.0)
    qy = qy * sign
    ry = ry * sign[:, None]
    q2 = np.asfortranarray(q @ qy)
    return q2, ry


def qr_factor(m, rng=None):
    """Thin QR of a block, built column by column with ``qr_append``."""
    rows, cols = m.shape
    q = np.empty((rows, 0), order="F")
    r = np.zeros((0, 0))
    for j in range(cols):
        q, r, _ = qr_append(q, r, m[:, j], rng=rng)
    return q, r
