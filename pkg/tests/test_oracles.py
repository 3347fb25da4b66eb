"""Self-checks for the reference implementations.

The oracles are validated against numpy's LAPACK-backed routines here —
and only here.  Everywhere else the flow of trust runs the other way:
production code is compared against the oracles.
"""

import numpy as np

from oracles import (coo_to_dense, davidson_reference, jacobi_eigh,
                     jacobi_svd, mgs_qr, round_robin_rounds,
                     sparse_random_coo)


def test_round_robin_covers_every_pair_once():
    for n in (2, 3, 5, 8, 13):
        seen = set()
        for p, q in round_robin_rounds(n):
            # disjointness within a round
            touched = p.tolist() + q.tolist()
            assert len(set(touched)) == len(touched)
            for a, b in zip(p.tolist(), q.tolist()):
                assert a < b
                assert (a, b) not in seen
                seen.add((a, b))
        assert seen == {(i, j) for i in range(n) for j in range(i + 1, n)}


def test_jacobi_eigh_two_by_two_exchange():
    w, v = jacobi_eigh(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert np.allclose(w, [-1.0, 1.0], atol=1e-15)
    assert np.abs(np.abs(v.T @ v) - np.eye(2)).max() < 1e-14


def test_jacobi_eigh_matches_lapack(rng):
    h = rng.standard_normal((25, 25))
    h = h + h.T
    w, v = jacobi_eigh(h)
    w_ref = np.linalg.eigvalsh(h)
    scale = np.abs(w_ref).max()
    assert np.abs(w - w_ref).max() <= 1e-13 * scale
    assert np.abs(v.T @ v - np.eye(25)).max() <= 1e-13
    assert np.abs(h @ v - v * w).max() <= 1e-12 * scale


def test_jacobi_svd_matches_lapack_both_orientations(rng):
    for shape in ((30, 20), (20, 30)):
        a = rng.standard_normal(shape)
        s, u, v = jacobi_svd(a)
        s_ref = np.linalg.svd(a, compute_uv=False)
        assert np.abs(s - s_ref).max() <= 1e-13 * s_ref[0]
        assert np.abs(u * s @ v.T - a).max() <= 1e-12 * s_ref[0]
        p = min(shape)
        assert np.abs(u.T @ u - np.eye(p)).max() <= 1e-13
        assert np.abs(v.T @ v - np.eye(p)).max() <= 1e-13


def test_jacobi_svd_zero_column_gives_zero_sigma(rng):
    a = rng.standard_normal((15, 8))
    a[:, 3] = 0.0
    s, _, v = jacobi_svd(a)
    assert s[-1] == 0.0
    # the null direction is the zeroed coordinate
    assert np.abs(np.abs(v[3, -1]) - 1.0) < 1e-12


def test_mgs_qr_factors(rng):
    a = rng.standard_normal((50, 8))
    q, r = mgs_qr(a)
    assert np.abs(q.T @ q - np.eye(8)).max() <= 1e-13
    assert np.abs(np.tril(r, -1)).max() == 0.0
    assert np.abs(q @ r - a).max() <= 1e-13 * np.abs(a).max() * 50


def test_davidson_reference_drives_residual_down(rng):
    a = rng.standard_normal((60, 60))
    a = a + a.T
    rnorms = davidson_reference(a, rng.standard_normal(60), 25)
    assert len(rnorms) == 25
    assert rnorms[-1] < 1e-3 * rnorms[0]


def test_sparse_random_coo_has_no_empty_rows_or_columns():
    rows, cols, vals = sparse_random_coo(120, 80, 0.02, 5)
    d = coo_to_dense(120, 80, rows, cols, vals)
    assert (np.count_nonzero(d, axis=1) > 0).all()
    assert (np.count_nonzero(d, axis=0) > 0).all()
    # deterministic for a fixed seed
    rows2, cols2, vals2 = sparse_random_coo(120, 80, 0.02, 5)
    assert np.array_equal(rows, rows2)
    assert np.array_equal(cols, cols2)
    assert np.array_equal(vals, vals2)
