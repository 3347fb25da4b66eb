"""Sparse matrix storage, Matrix Market I/O and synthetic test matrices.

The only sparse format used internally is CSR with float64 values and
int64 indices, columns strictly increasing within each row and duplicates
summed at assembly time.  Products are evaluated in a fixed summation
order so repeated runs are bitwise identical.
"""

import numpy as np


class MatrixMarketError(ValueError):
    """Malformed Matrix Market input; carries the offending line number."""

    def __init__(self, message, line=None):
        if line is not None:
            message = "line %d: %s" % (line, message)
        super().__init__(message)
        self.line = line


class SparseMatrixCsr:
    """Compressed sparse row matrix.

    Attributes
    ----------
    m, n : int
        Row and column counts.
    row_ptr : int64 ndarray, shape (m + 1,)
    col_idx : int64 ndarray, shape (nnz,)
        Strictly increasing within each row.
    values : float64 ndarray, shape (nnz,)
    """

    def __init__(self, m, n, row_ptr, col_idx, values):
        self.m = int(m)
        self.n = int(n)
        self.row_ptr = np.asarray(row_ptr, dtype=np.int64)
        self.col_idx = np.asarray(col_idx, dtype=np.int64)
        self.values = np.asarray(values, dtype=np.float64)
        if self.m < 0 or self.n < 0:
            raise ValueError("negative matrix dimension")
        if self.row_ptr.shape != (self.m + 1,):
            raise ValueError("row_ptr has wrong length")
        if self.row_ptr[0] != 0 or self.row_ptr[-1] != self.values.shape[0]:
            raise ValueError("row_ptr endpoints inconsistent with nnz")
        if np.any(np.diff(self.row_ptr) < 0):
            raise ValueError("row_ptr must be nondecreasing")
        if self.col_idx.shape != self.values.shape:
            raise ValueError("col_idx / values length mismatch")
        if self.nnz and (self.col_idx.min() < 0 or self.col_idx.max() >= self.n):
            raise ValueError("column index out of range")
        self._rows_of_nnz = None

    @property
    def nnz(self):
        return int(self.values.shape[0])

    @property
    def shape(self):
        return (self.m, self.n)

    @classmethod
    def from_coo(cls, m, n, rows, cols, values):
        """Assemble from triplets, summing duplicates.

        Entries are sorted by (row, col); explicit duplicates are summed in
        ascending input order so assembly itself is reproducible.
        """
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        values = np.asarray(values, dtype=np.float64)
        if not (rows.shape == cols.shape == values.shape):
            raise ValueError("triplet arrays must have equal length")
        if rows.size:
            if rows.min() < 0 or rows.max() >= m:
                raise ValueError("row index out of range")
            if cols.min() < 0 or cols.max() >= n:
                raise ValueError("column index out of range")
        order = np.lexsort((cols, rows))
        rows, cols, values = rows[order], cols[order], values[order]
        if rows.size:
            key = rows * np.int64(n) + cols
            first = np.concatenate(([True], key[1:] != key[:-1]))
            idx = np.cumsum(first) - 1
            summed = np.zeros(int(first.sum()))
            np.add.at(summed, idx, values)
            rows, cols, values = rows[first], cols[first], summed
        row_ptr = np.zeros(m + 1, dtype=np.int64)
        np.add.at(row_ptr, rows + 1, 1)
        np.cumsum(row_ptr, out=row_ptr)
        return cls(m, n, row_ptr, cols, values)

    @classmethod
    def from_dense(cls, a):
        a = np.asarray(a, dtype=np.float64)
        rows, cols = np.nonzero(a)
        return cls.from_coo(a.shape[0], a.shape[1], rows, cols, a[rows, cols])

    def to_dense(self):
        a = np.zeros((self.m, self.n))
        rows = self._expand_rows()
        a[rows, self.col_idx] = self.values
        return a

    def _expand_rows(self):
        if self._rows_of_nnz is None:
            self._rows_of_nnz = np.repeat(
                np.arange(self.m, dtype=np.int64), np.diff(self.row_ptr))
        return self._rows_of_nnz

    def fro_norm(self):
        return float(np.linalg.norm(self.values))

    def column_sq_norms(self):
        """Squared Euclidean norm of every column."""
        return np.bincount(self.col_idx, weights=self.values ** 2,
                           minlength=self.n)

    def row_sq_norms(self):
        """Squared Euclidean norm of every row."""
        return np.bincount(self._expand_rows(), weights=self.values ** 2,
                           minlength=self.m)


def spmv_block(a, x, transpose=False):
    """Sparse matrix times dense block, ``a @ x`` or ``a.T @ x``.

    Summation order is fixed (ascending stored index within each output
    element) so results are bitwise reproducible run to run.  The
    transpose product is formed by scattering the stored rows; no
    transposed copy of the matrix is kept.
    """
    x = np.asarray(x, dtype=np.float64)
    squeeze = x.ndim == 1
    if squeeze:
        x = x[:, None]
    if x.shape[0] != (a.m if transpose else a.n):
        raise ValueError("operand has wrong leading dimension")
    b = x.shape[1]
    if not transpose:
        y = np.zeros((a.m, b), order="F")
        if a.nnz:
            prod = a.values[:, None] * x[a.col_idx, :]
            counts = np.diff(a.row_ptr)
            nonempty = np.flatnonzero(counts > 0)
            if nonempty.size:
                y[nonempty, :] = np.add.reduceat(
                    prod, a.row_ptr[nonempty], axis=0)[:, :]
    else:
        y = np.zeros((a.n, b), order="F")
        if a.nnz:
            prod = a.values[:, None] * x[a._expand_rows(), :]
            np.add.at(y, a.col_idx, prod)
    return y[:, 0] if squeeze else y


def _tokenize_header(line):
    parts = line.strip().lower().split()
    if len(parts) < 4 or parts[0] != "%%matrixmarket":
        raise MatrixMarketError("missing %%MatrixMarket banner", line=1)
    if parts[1] != "matrix":
        raise MatrixMarketError("unsupported object %r" % parts[1], line=1)
    fmt = parts[2]
    field = parts[3]
    symmetry = parts[4] if len(parts) > 4 else "general"
    return fmt, field, symmetry


def read_matrix_market(path):
    """Read a real Matrix Market file into CSR form.

    Supports ``coordinate real/integer general|symmetric`` (symmetric
    storage is expanded, integer values are read as reals) and ``array
    real general``.  Pattern and complex files, and symmetries other than
    the two above, are rejected.  Parse failures raise
    :class:`MatrixMarketError` naming the offending line.
    """
    with open(path, "r", encoding="ascii", errors="replace") as fh:
        lines = fh.readlines()
    if not lines:
        raise MatrixMarketError("empty file", line=1)
    fmt, field, symmetry = _tokenize_header(lines[0])
    if fmt not in ("coordinate", "array"):
        raise MatrixMarketError("unsupported format %r" % fmt, line=1)
    if field == "pattern":
        raise MatrixMarketError("pattern matrices carry no values", line=1)
    if field not in ("real", "integer", "double"):
        raise MatrixMarketError("unsupported field %r" % field, line=1)
    if symmetry not in ("general", "symmetric"):
        raise MatrixMarketError("unsupported symmetry %r" % symmetry, line=1)
    if fmt == "array" and symmetry != "general":
        raise MatrixMarketError("array storage is supported for general "
                                "symmetry only", line=1)

    lineno = 1
    body = None
    for i in range(1, len(lines)):
        stripped = lines[i].strip()
        if stripped and not stripped.startswith("%"):
            body = stripped
            lineno = i + 1
            break
    if body is None:
        raise MatrixMarketError("missing size line", line=len(lines))

    size = body.split()
    try:
        if fmt == "coordinate":
            if len(size) != 3:
                raise ValueError
            m, n, nnz = (int(t) for t in size)
        else:
            if len(size) != 2:
                raise ValueError
            m, n = (int(t) for t in size)
            nnz = m * n
    except ValueError:
        raise MatrixMarketError("malformed size line %r" % body, line=lineno)
    if m < 0 or n < 0 or nnz < 0:
        raise MatrixMarketError("negative size", line=lineno)
    if fmt == "array" and m * n > 2 ** 27:
        raise MatrixMarketError("array dimensions overflow sane limits",
                                line=lineno)

    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    vals = np.empty(nnz, dtype=np.float64)
    k = 0
    for i in range(lineno, len(lines)):
        stripped = lines[i].strip()
        if not stripped or stripped.startswith("%"):
            continue
        parts = stripped.split()
        if k >= nnz:
            raise MatrixMarketError("more entries than declared", line=i + 1)
        try:
            if fmt == "coordinate":
                if len(parts) != 3:
                    raise ValueError
                r, c = int(parts[0]) - 1, int(parts[1]) - 1
                v = float(parts[2])
            else:
                if len(parts) != 1:
                    raise ValueError
                # array storage is column major
                r, c = k % m, k // m
                v = float(parts[0])
        except ValueError:
            raise MatrixMarketError("malformed entry %r" % stripped,
                                    line=i + 1)
        if not (0 <= r < m and 0 <= c < n):
            raise MatrixMarketError("index out of bounds in %r" % stripped,
                                    line=i + 1)
        rows[k], cols[k], vals[k] = r, c, v
        k += 1
    if k != nnz:
        raise MatrixMarketError(
            "expected %d entries, found %d" % (nnz, k), line=len(lines))

    if symmetry == "symmetric":
        if m != n:
            raise MatrixMarketError("symmetric matrix must be square", line=1)
        off = rows != cols
        rows, cols, vals = (np.concatenate([rows, cols[off]]),
                            np.concatenate([cols, rows[off]]),
                            np.concatenate([vals, vals[off]]))
    mat = SparseMatrixCsr.from_coo(m, n, rows, cols, vals)
    if fmt == "array":
        # drop stored zeros that dense storage forced in
        keep = mat.values != 0.0
        if not keep.all():
            r2 = mat._expand_rows()[keep]
            mat = SparseMatrixCsr.from_coo(m, n, r2, mat.col_idx[keep],
                                           mat.values[keep])
    return mat


def write_matrix_market(path, a):
    """Write a CSR matrix as ``coordinate real general`` with full precision."""
    rows = a._expand_rows()
    with open(path, "w", encoding="ascii") as fh:
        fh.write("%%MatrixMarket matrix coordinate real general\n")
        fh.write("%d %d %d\n" % (a.m, a.n, a.nnz))
        for r, c, v in zip(rows, a.col_idx, a.values):
            fh.write("%d %d %.17g\n" % (r + 1, c + 1, v))


def write_dense_market(path, a):
    """Write a dense block as ``array real general`` (column major)."""
    a = np.asarray(a, dtype=np.float64)
    with open(path, "w", encoding="ascii") as fh:
        fh.write("%%MatrixMarket matrix array real general\n")
        fh.write("%d %d\n" % a.shape)
        for j in range(a.shape[1]):
            for i in range(a.shape[0]):
                fh.write("%.17g\n" % a[i, j])


def read_dense_market(path):
    """Read an ``array real general`` file into a dense column-major block."""
    mat = read_matrix_market(path)
    return np.asfortranarray(mat.to_dense())


class SpectrumSpec:
    """Description of a synthetic matrix with prescribed singular values.

    Parameters
    ----------
    sigma : sequence of float
        Desired singular values, nonnegative, sorted descending; length
        must equal ``min(m, n)``.
    m, n : int
        Shape of the matrix to build.
    seed : int
        Seed for the mixing reflectors.
    """

    def __init__(self, sigma, m, n, seed=0):
        self.sigma = np.array(sorted(sigma, reverse=True), dtype=np.float64)
        self.m = int(m)
        self.n = int(n)
        self.seed = int(seed)
        if self.m <= 0 or self.n <= 0:
            raise ValueError("matrix dimensions must be positive")
        if self.sigma.shape[0] != min(self.m, self.n):
            raise ValueError("need exactly min(m, n) singular values")
        if np.any(self.sigma < 0.0):
            raise ValueError("singular values must be nonnegative")


# Number of Householder reflectors applied per side when materializing a
# synthetic matrix; enough mixing for testing without densifying it.
SYNTH_REFLECTORS = 20


def _apply_reflectors_left(a, dim, rng):
    support_len = min(dim, max(2, dim // 10))
    for _ in range(SYNTH_REFLECTORS):
        support = rng.choice(dim, size=support_len, replace=False)
        w = rng.standard_normal(support_len)
        w /= np.linalg.norm(w)
        a[support, :] -= 2.0 * np.outer(w, w @ a[support, :])


def synth_matrix(spec):
    """Materialize a sparse matrix with exactly the prescribed spectrum.

    The matrix is ``u @ diag(sigma) @ v.T`` where ``u`` and ``v`` are
    products of seeded Householder reflectors with sparse supports, so the
    singular values match ``spec.sigma`` to rounding while the result
    stays sparse.
    """
    rng = np.random.default_rng(spec.seed)
    a = np.zeros((spec.m, spec.n))
    k = spec.sigma.shape[0]
    a[np.arange(k), np.arange(k)] = spec.sigma
    _apply_reflectors_left(a, spec.m, rng)
    at = np.ascontiguousarray(a.T)
    _apply_reflectors_left(at, spec.n, rng)
    return SparseMatrixCsr.from_dense(at.T)
