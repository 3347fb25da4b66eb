"""Command-line driver.

Reads a Matrix Market file or synthesizes a test matrix, runs the triplet
solver or the condition-number estimator, and reports as text or JSON.
Exit codes: 0 when everything requested converged, 2 on partial results,
1 on input errors.

JSON reports use a fixed key set (documented in the README) and are
byte-identical across runs for the same request and seed, except for the
wall-clock ``seconds`` entry.
"""

import argparse
import json
import sys

import numpy as np

from . import __version__
from .hybrid import (SvdsConfig, estimate_condition_number, svds_solve)
from .matio import (MatrixMarketError, SparseMatrixCsr, SpectrumSpec,
                    read_matrix_market, synth_matrix, write_dense_market)
from .operators import jacobi_precond_on_normal


class CliError(Exception):
    """Bad input; the message goes to stderr and the exit code is 1."""


def _parse_target(text):
    if text in ("largest", "smallest"):
        return text, ()
    if text.startswith("closest:"):
        body = text[len("closest:"):]
        try:
            values = tuple(float(v) for v in body.split(",") if v)
        except ValueError:
            raise CliError("bad closest target list %r" % (body,))
        if not values:
            raise CliError("closest target needs at least one value")
        return "closest", values
    raise CliError("bad target %r (largest | smallest | closest:v1,v2)"
                   % (text,))


def _parse_synth(spec, seed):
    """Inline synthetic matrices: ``diag:...``, ``spectrum:FILE``,
    ``cond:KAPPA:MxN``."""
    kind, _, body = spec.partition(":")
    if kind == "diag":
        try:
            entries = [float(v) for v in body.split(",") if v]
        except ValueError:
            raise CliError("bad diag list %r" % (body,))
        if not entries:
            raise CliError("diag needs at least one value")
        p = len(entries)
        idx = [i for i, v in enumerate(entries) if v != 0.0]
        return SparseMatrixCsr.from_coo(
            p, p, np.array(idx, dtype=np.int64),
            np.array(idx, dtype=np.int64),
            np.array([entries[i] for i in idx]))
    if kind == "spectrum":
        try:
            sigma = np.atleast_1d(np.loadtxt(body, dtype=np.float64))
        except OSError as exc:
            raise CliError("cannot read spectrum file %s: %s" % (body, exc))
        except ValueError as exc:
            raise CliError("bad spectrum file %s: %s" % (body, exc))
        sigma = np.sort(sigma)[::-1]
        p = sigma.shape[0]
        return synth_matrix(SpectrumSpec(sigma=sigma, m=p, n=p, seed=seed))
    if kind == "cond":
        kappa_text, _, dims = body.partition(":")
        try:
            kappa = float(kappa_text)
            m_text, _, n_text = dims.partition("x")
            m, n = int(m_text), int(n_text)
        except ValueError:
            raise CliError("bad cond spec %r (cond:KAPPA:MxN)" % (body,))
        if kappa < 1.0 or m < 1 or n < 1:
            raise CliError("cond spec needs KAPPA >= 1 and positive sizes")
        p = min(m, n)
        if p == 1:
            sigma = np.ones(1)
        else:
            sigma = kappa ** (-np.arange(p) / (p - 1.0))
        return synth_matrix(SpectrumSpec(sigma=sigma, m=m, n=n, seed=seed))
    raise CliError("bad synth spec %r (diag: | spectrum: | cond:)" % (spec,))


def _load_matrix(args):
    if (args.matrix is None) == (args.synth is None):
        raise CliError("give exactly one of --matrix or --synth")
    if args.matrix is not None:
        try:
            return read_matrix_market(args.matrix), args.matrix
        except OSError as exc:
            raise CliError("cannot read %s: %s" % (args.matrix, exc))
        except MatrixMarketError as exc:
            raise CliError("%s: %s" % (args.matrix, exc))
    return _parse_synth(args.synth, args.seed), "synth:" + args.synth


def _request_echo(args, csr, source, tol):
    return {
        "source": source,
        "m": csr.m,
        "n": csr.n,
        "mode": args.mode,
        "num_svals": args.num_svals,
        "target": args.target,
        "tol": tol,
        "method": args.method,
        "precond": args.precond,
        "max_basis": args.max_basis,
        "min_restart": args.min_restart,
        "block": args.block,
        "seed": args.seed,
    }


def _stats_dict(stats):
    return {
        "stage1_matvecs": int(stats.stage1_matvecs),
        "stage2_matvecs": int(stats.stage2_matvecs),
        "precond_applies": int(stats.precond_applies),
        "restarts": int(stats.restarts),
        "resets": int(stats.resets),
        "seconds": float(stats.seconds),
    }


def _svd_report(args, csr, source, res, tol):
    return {
        "request": _request_echo(args, csr, source, tol),
        "values": [float(s) for s in res.sigma],
        # a slot the budget never reached has no residual; null keeps the
        # report strict JSON (bare Infinity is not)
        "rnorms": [float(r) if np.isfinite(r) else None
                   for r in res.rnorms],
        "converged": [bool(c) for c in res.converged],
        "converged_count": res.converged_count,
        "status": res.status,
        "stats": _stats_dict(res.stats),
        "solver": {"name": "itersvd", "version": __version__},
    }


def _cond_report(args, csr, source, est, tol):
    return {
        "request": _request_echo(args, csr, source, tol),
        "kappa": None if est.infinite else float(est.kappa),
        "infinite": bool(est.infinite),
        "lower_bound": bool(est.lower_bound),
        "sigma_max": float(est.sigma_max),
        "sigma_min": float(est.sigma_min),
        "stats": _stats_dict(est.stats),
        "solver": {"name": "itersvd", "version": __version__},
    }


def _svd_text(report):
    lines = []
    values = report["values"]
    for i, (s, r, c) in enumerate(zip(values, report["rnorms"],
                                      report["converged"])):
        mark = "" if c else "  (not converged)"
        rtxt = "n/a" if r is None else "%.3e" % r
        lines.append("%d %.17g %s%s" % (i + 1, s, rtxt, mark))
    lines.append("status %s" % report["status"])
    lines.append("converged %d/%d" % (report["converged_count"],
                                      len(values)))
    for key, val in report["stats"].items():
        lines.append("%s %s" % (key, val))
    return "\n".join(lines) + "\n"


def _cond_text(report):
    lines = ["kappa %s" % ("inf" if report["infinite"]
                           else "%.17g" % report["kappa"]),
             "sigma_max %.17g" % report["sigma_max"],
             "sigma_min %.17g" % report["sigma_min"],
             "lower_bound %s" % str(report["lower_bound"]).lower()]
    for key, val in report["stats"].items():
        lines.append("%s %s" % (key, val))
    return "\n".join(lines) + "\n"


def _emit(args, text):
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def emit_report(report, fmt, mode):
    """Render a report dict as bytes-stable text or JSON."""
    if fmt == "json":
        return json.dumps(report, indent=2) + "\n"
    return _svd_text(report) if mode == "svd" else _cond_text(report)


def _build_parser():
    p = argparse.ArgumentParser(
        prog="itersvd",
        description="Iterative partial SVD and condition-number estimation "
                    "of sparse matrices.")
    p.add_argument("--matrix", help="Matrix Market file to read")
    p.add_argument("--synth",
                   help="synthetic matrix: diag:v1,v2 | spectrum:FILE | "
                        "cond:KAPPA:MxN")
    p.add_argument("--num-svals", type=int, default=1, metavar="K")
    p.add_argument("--target", default="largest",
                   help="largest | smallest | closest:v1,v2")
    p.add_argument("--tol", type=float, default=None,
                   help="relative accuracy (svd: default 1e-12; "
                        "cond: residual factor, default 0.1)")
    p.add_argument("--method", default="hybrid",
                   choices=["hybrid", "phsvds", "normal", "augmented"],
                   help="phsvds is an alias for hybrid")
    p.add_argument("--precond", default="none", choices=["none", "jacobi"])
    p.add_argument("--max-basis", type=int, default=None, metavar="N")
    p.add_argument("--min-restart", type=int, default=None, metavar="N")
    p.add_argument("--block", type=int, default=1, metavar="N")
    p.add_argument("--max-matvecs", type=int, default=None, metavar="N")
    p.add_argument("--seed", type=int, default=0, metavar="S")
    p.add_argument("--mode", default="svd", choices=["svd", "cond"])
    p.add_argument("--format", default="text", choices=["text", "json"])
    p.add_argument("--write-vectors", metavar="PATH",
                   help="write stacked [v; u] vectors to a Matrix Market "
                        "array file")
    p.add_argument("--output", metavar="PATH",
                   help="write the report here instead of stdout")
    return p


def _run(args):
    target, target_values = _parse_target(args.target)
    csr, source = _load_matrix(args)
    if args.tol is not None and not 0.0 < args.tol < 1.0:
        raise CliError("--tol must lie in (0, 1)")

    precond = None
    if args.precond == "jacobi":
        try:
            precond = jacobi_precond_on_normal(csr, side="auto")
        except ValueError as exc:
            raise CliError(str(exc))

    if args.mode == "cond":
        tol = 0.1 if args.tol is None else args.tol
        cfg = SvdsConfig(seed=args.seed, max_matvecs=args.max_matvecs)
        est = estimate_condition_number(csr, precond=precond, cfg=cfg,
                                        rel_tol=tol)
        report = _cond_report(args, csr, source, est, tol)
        _emit(args, emit_report(report, args.format, "cond"))
        return 2 if est.lower_bound else 0

    tol = 1e-12 if args.tol is None else args.tol
    cfg = SvdsConfig(num_svals=args.num_svals, target=target,
                     target_values=target_values, eps=tol,
                     max_basis_size=args.max_basis,
                     min_restart_size=args.min_restart,
                     max_block_size=args.block,
                     method="hybrid" if args.method == "phsvds"
                     else args.method,
                     max_matvecs=args.max_matvecs, seed=args.seed)
    try:
        res = svds_solve(csr, precond=precond, cfg=cfg)
    except ValueError as exc:
        raise CliError(str(exc))

    if args.write_vectors:
        stacked = np.concatenate([res.v, res.u], axis=0)
        write_dense_market(args.write_vectors, stacked)

    report = _svd_report(args, csr, source, res, tol)
    _emit(args, emit_report(report, args.format, "svd"))
    return 0 if res.converged_count == args.num_svals else 2


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    try:
        return _run(args)
    except CliError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
