"""Regenerate the committed test fixtures.

Run from the repository root:

    python3 tests/gen_fixtures.py

Produces, under ``tests/fixtures/``:

* ``rect50x30.mtx`` — a seeded random sparse 50x30 matrix consumed by the
  CLI tests, plus ``rect50x30_expected.json`` holding its five largest
  singular values computed by the one-sided Jacobi oracle,
* ``sparse_oracle.json`` — for twenty seeded 400x250 sparse matrices
  (2% density), the five largest and five smallest singular values and
  the spectral norm, all from the Jacobi oracle; the solver-equivalence
  acceptance test replays the same seeds and compares against these,
* ``clustered300x200.json`` — Jacobi-oracle values for the 300x200
  synthetic matrix with a tight cluster of five smallest values used by
  the two-stage integration test.

Values are stored with full 17-significant-digit precision so reading
them back reproduces the binary64 numbers exactly.
"""

import json
import os
import sys

import numpy as np

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)),
                                os.pardir, "src"))

from oracles import jacobi_svd, sparse_random_coo  # noqa: E402
from itersvd import (SparseMatrixCsr, SpectrumSpec, synth_matrix,  # noqa: E402
                     write_matrix_market)

FIXTURE_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)),
                           "fixtures")

RECT_SEED = 1230
SPARSE_SEEDS = list(range(1000, 1020))
SPARSE_SHAPE = (400, 250)
SPARSE_DENSITY = 0.02
CLUSTER_SEED = 77


def cluster_sigma(p=200, count=5, base=1e-3, rel_gap=5e-5):
    """Spectrum with ``count`` smallest values separated by relative gaps
    of ``rel_gap`` at level ``base``, below a geometric ramp up to 1."""
    bottom = base * (1.0 + rel_gap * np.arange(count))
    rest = np.geomspace(1e-2, 1.0, p - count)
    return np.sort(np.concatenate([bottom, rest]))[::-1]


def build_rect50x30():
    rows, cols, vals = sparse_random_coo(50, 30, 0.15, RECT_SEED)
    return SparseMatrixCsr.from_coo(50, 30, rows, cols, vals)


def build_sparse(seed):
    m, n = SPARSE_SHAPE
    rows, cols, vals = sparse_random_coo(m, n, SPARSE_DENSITY, seed)
    return SparseMatrixCsr.from_coo(m, n, rows, cols, vals)


def build_clustered():
    spec = SpectrumSpec(sigma=cluster_sigma(), m=300, n=200,
                        seed=CLUSTER_SEED)
    return synth_matrix(spec)


def main():
    os.makedirs(FIXTURE_DIR, exist_ok=True)

    rect = build_rect50x30()
    write_matrix_market(os.path.join(FIXTURE_DIR, "rect50x30.mtx"), rect)
    sig, _, _ = jacobi_svd(rect.to_dense())
    with open(os.path.join(FIXTURE_DIR, "rect50x30_expected.json"), "w") as f:
        json.dump({"seed": RECT_SEED, "largest5": sig[:5].tolist()},
                  f, indent=1)
    print("rect50x30: top-5 =", sig[:5])

    entries = []
    for seed in SPARSE_SEEDS:
        csr = build_sparse(seed)
        sig, _, _ = jacobi_svd(csr.to_dense())
        entries.append({
            "seed": seed, "m": csr.m, "n": csr.n,
            "density": SPARSE_DENSITY,
            "sigma_max": float(sig[0]),
            "largest5": sig[:5].tolist(),
            "smallest5": np.sort(sig)[:5].tolist(),
        })
        print("sparse seed %d: sigma_max %.6f sigma_min %.6f"
              % (seed, sig[0], sig[-1]))
    with open(os.path.join(FIXTURE_DIR, "sparse_oracle.json"), "w") as f:
        json.dump(entries, f, indent=1)

    clustered = build_clustered()
    sig, _, _ = jacobi_svd(clustered.to_dense())
    with open(os.path.join(FIXTURE_DIR, "clustered300x200.json"), "w") as f:
        json.dump({"seed": CLUSTER_SEED, "m": 300, "n": 200,
                   "sigma_max": float(sig[0]),
                   "smallest5": np.sort(sig)[:5].tolist()}, f, indent=1)
    print("clustered300x200: bottom-5 =", np.sort(sig)[:5])


if __name__ == "__main__":
    main()
