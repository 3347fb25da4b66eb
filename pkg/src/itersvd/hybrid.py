"""Two-stage driver computing a few extreme singular triplets.

The first stage diagonalizes the normal-equations operator on the smaller
side of the matrix.  It converges quickly but works with squared singular
values, so the residual it can reach bottoms out near machine precision
times the squared matrix norm; for small singular values or tight
tolerances that is not enough.  Triplets whose recomputed two-sided
residual already meets the requested tolerance are returned as is.  The
remaining ones seed a second eigensolve on the stacked symmetric operator
``[[0, A^T], [A, 0]]``, whose spectrum holds the singular values directly,
targeting each value from just below with a refined interior extraction.
The second stage pays more per iteration but starts from good vectors and
tight shifts, so it only polishes.

Vectors on the stacked operator follow the project-wide layout
``[right part (n); left part (m)]``.

The condition-number estimator reuses stage 1 twice (largest then smallest
value, one pair each) with a deliberately loose stopping rule; a residual
below a tenth of the current value pins the value itself to ten percent,
which is all a condition estimate needs.
"""

import time
from dataclasses import dataclass

import numpy as np

from . import kernels
from .eigensolver import (EXTRACT_REFINED, EXTRACT_RR,
                          PRACTICAL_FLOOR_FACTOR, TARGET_CLOSEST_GEQ,
                          TARGET_LARGEST, TARGET_SMALLEST, EigConfig,
                          eig_solve)
from .kernels import EPS, new_block
from .operators import (NormEstimate, SvdOperator, make_augmented_operator,
                        make_normal_operator, select_preconditioner)

TARGETS = ("largest", "smallest", "closest")
METHODS = ("hybrid", "normal", "augmented")

# basis-size policy: small problems targeting a few largest values restart
# harder; everything else gets the roomier space
_BASIS_SMALL = (15, 6)
_BASIS_LARGE = (35, 14)


@dataclass
class SvdsConfig:
    """Parameters for :func:`svds_solve`.

    ``eps`` is the relative accuracy of the returned triplets: each one
    satisfies ``sqrt(||A v - s u||^2 + ||A^T u - s v||^2) < ||A|| * eps``
    when flagged converged.  ``max_matvecs`` counts single products with
    the matrix or its transpose, summed over both stages; it bounds the
    iteration, and the exit adds a few products per requested triplet
    for the honest recheck (fresh pair products plus the recomputed
    two-sided residuals).  ``a_norm``
    short-circuits the running norm estimate when the caller knows the
    spectral norm.  ``initial_left/right`` are optional starting vectors
    (columns pair up; either may be omitted), ``ortho_left/right`` pin
    already-known triplets out of the search (both sides required, same
    column count).  ``stage1_opts``/``stage2_opts`` override individual
    :class:`EigConfig` fields of the inner solves.
    """

    num_svals: int = 1
    target: str = "largest"
    target_values: tuple = ()
    eps: float = 1e-12
    max_basis_size: int = None
    min_restart_size: int = None
    max_block_size: int = 1
    method: str = "hybrid"
    a_norm: float = None
    max_matvecs: int = None
    initial_left: np.ndarray = None
    initial_right: np.ndarray = None
    ortho_left: np.ndarray = None
    ortho_right: np.ndarray = None
    seed: int = 0
    stage1_opts: dict = None
    stage2_opts: dict = None

    def resolved_basis_sizes(self):
        if self.target == "largest" and self.num_svals < 10:
            mbs, mrs = _BASIS_SMALL
        else:
            mbs, mrs = _BASIS_LARGE
        if self.max_basis_size is not None:
            mbs = int(self.max_basis_size)
            mrs = max(1, min(mrs, mbs // 2 - 1))
        if self.min_restart_size is not None:
            mrs = int(self.min_restart_size)
        return mbs, mrs

    def validate(self, m, n):
        if self.num_svals < 0 or self.num_svals > min(m, n):
            raise ValueError("num_svals must lie in [0, min(m, n)]")
        if self.target not in TARGETS:
            raise ValueError("unknown target %r" % (self.target,))
        if self.target == "closest" and not len(self.target_values):
            raise ValueError("closest target needs target_values")
        if self.method not in METHODS:
            raise ValueError("unknown method %r" % (self.method,))
        if not EPS <= self.eps < 1.0:
            raise ValueError("eps must lie in [%g, 1)" % EPS)
        if self.a_norm is not None and self.a_norm <= 0:
            raise ValueError("a_norm must be positive when given")
        mbs, mrs = self.resolved_basis_sizes()
        if self.num_svals > max(mbs - 2, 0) and self.num_svals < min(m, n):
            raise ValueError("num_svals needs a larger max_basis_size")
        have_l = self.ortho_left is not None and self.ortho_left.shape[1] > 0
        have_r = self.ortho_right is not None and \
            self.ortho_right.shape[1] > 0
        if have_l != have_r or (have_l and self.ortho_left.shape[1] !=
                                self.ortho_right.shape[1]):
            raise ValueError("ortho_left/ortho_right must pair up")


@dataclass
class SvdsStats:
    stage1_matvecs: int = 0
    stage2_matvecs: int = 0
    precond_applies: int = 0
    restarts: int = 0
    resets: int = 0
    seconds: float = 0.0


@dataclass
class SvdsResult:
    """Triplets in target order plus run statistics.

    ``rnorms`` are recomputed from fresh products at exit, never copied
    from solver internals.  ``stage1_rnorms`` records the same residual at
    the stage-1 handoff, which shows how much the second stage improved.
    """

    sigma: np.ndarray
    u: np.ndarray
    v: np.ndarray
    rnorms: np.ndarray
    converged: np.ndarray
    stats: SvdsStats
    status: str = "ok"
    stage1_rnorms: np.ndarray = None

    @property
    def converged_count(self):
        return int(self.converged.sum())


@dataclass
class StageBridge:
    """Data handed from the first stage to the second.

    ``guesses`` stacks each pair as ``[v; u] / sqrt(2)`` in the augmented
    layout; ``shifts`` (filled by :func:`stage2_shifts`) are the interior
    targets, one per slot, ascending.  ``order`` records the permutation
    the ascending sort applied, so callers can realign companion arrays.
    """

    sigma_tilde: np.ndarray
    rc_norms: np.ndarray
    guesses: np.ndarray
    tiny: np.ndarray
    shifts: np.ndarray = None
    order: np.ndarray = None


@dataclass
class _Provisional:
    sigma: np.ndarray
    u: np.ndarray
    v: np.ndarray
    r7: np.ndarray
    conv: np.ndarray

    def permute(self, order):
        self.sigma = self.sigma[order]
        self.u = np.asfortranarray(self.u[:, order])
        self.v = np.asfortranarray(self.v[:, order])
        self.r7 = self.r7[order]
        self.conv = self.conv[order]


@dataclass
class CondResult:
    kappa: float
    sigma_max: float
    sigma_min: float
    infinite: bool
    lower_bound: bool
    stats: SvdsStats


def orient_problem(a):
    """Ensure rows >= cols; returns the (possibly transposed) operator and
    whether the caller must swap left/right quantities on output."""
    a = SvdOperator.wrap(a)
    if a.m < a.n:
        return a.transposed(), True
    return a, False


def compute_svd_residual(a, sigma, u, v):
    """Two-sided residual ``sqrt(||A v - s u||^2 + ||A^T u - s v||^2)``."""
    av = a.apply(v)
    atu = a.apply_t(u)
    return float(np.sqrt(np.linalg.norm(av - sigma * u) ** 2 +
                         np.linalg.norm(atu - sigma * v) ** 2))


def stage1_convergence_test(lam, rnorm, est, delta):
    """Stage-1 stopping rule on the normal-equations operator.

    Scales the tolerance by ``sqrt(|lam| * ||C||)`` so that dividing the
    accepted residual by the singular value lands under the final
    two-sided criterion, with an absolute floor at machine precision
    times ``||C||`` below which the residual cannot be driven anyway.
    """
    c = est.c_norm
    return rnorm <= max(np.sqrt(abs(lam) * c) * delta, EPS * c)


def _stage2_split_ok(lam, x, bx, n, a_norm, delta):
    """Second-level stage-2 check: split, normalize, test the full
    two-sided criterion.  ``bx`` is the stacked operator applied to ``x``,
    so no products are spent here."""
    nv = float(np.linalg.norm(x[:n]))
    nu = float(np.linalg.norm(x[n:]))
    if nv == 0.0 or nu == 0.0:
        return False
    sigma = abs(lam)
    v_hat = x[:n] / nv
    u_hat = x[n:] / nu
    av_hat = bx[n:] / nv
    atu_hat = bx[:n] / nu
    r7 = np.sqrt(np.linalg.norm(av_hat - sigma * u_hat) ** 2 +
                 np.linalg.norm(atu_hat - sigma * v_hat) ** 2)
    return bool(r7 < a_norm * delta)


def stage2_convergence_test(lam, x, a, est, delta):
    """Two-level stage-2 acceptance on the stacked operator.

    A cheap eigenresidual test runs first; only when it passes is the
    full two-sided criterion evaluated on the normalized halves.  A
    zero-norm half means the vector lives in the null space of the
    stacked operator and is rejected outright.
    """
    n = a.n
    av = a.apply(x[:n])
    atu = a.apply_t(x[n:])
    bx = np.concatenate([atu, av])
    rnorm = float(np.linalg.norm(bx - lam * np.asarray(x, dtype=np.float64)))
    a_norm = est.a_norm
    if not rnorm < np.sqrt(2.0) * a_norm * delta:
        return False
    return _stage2_split_ok(lam, x, bx, n, a_norm, delta)


def _stack_pair(v, u):
    g = np.concatenate([v, u]) / np.sqrt(2.0)
    return g


def stage1_postprocess(eig, a, est, k=None, rng=None):
    """Turn stage-1 eigenpairs into provisional triplets and bridge data.

    For each pair: ``sigma = sqrt(max(lam, 0))``, the right vector is the
    eigenvector, and the left vector is its image under the matrix,
    renormalized.  Values below ``||A|| * eps_mach * max(m, n)`` are
    numerically zero: sigma is reported as 0, the left vector falls back
    to a seeded random unit vector when the image vanishes, and the slot
    is flagged tiny.  Residuals are recomputed from the fresh products.
    Slots beyond what the eigensolver returned get random stacked guesses.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    m, n = a.m, a.n
    got = eig.eigenvalues.shape[0]
    if k is None:
        k = got
    t = min(got, k)

    sigma = np.zeros(k)
    u = new_block(m, k)
    v = new_block(n, k)
    rc = np.full(k, np.inf)
    r7 = np.full(k, np.inf)
    tiny = np.zeros(k, dtype=bool)
    conv = np.zeros(k, dtype=bool)
    floor = est.a_norm * EPS * max(m, n)

    for i in range(t):
        lam = float(eig.eigenvalues[i])
        vi = np.array(eig.eigenvectors[:, i], dtype=np.float64)
        nvi = np.linalg.norm(vi)
        if nvi > 0:
            vi /= nvi
        v[:, i] = vi
        sig = float(np.sqrt(max(lam, 0.0)))
        av = a.apply(vi)
        nav = float(np.linalg.norm(av))
        if sig < floor:
            tiny[i] = True
            sigma[i] = 0.0
            if nav > 0.0:
                u[:, i] = av / nav
            else:
                u[:, i] = rng.standard_normal(m)
                kernels.orthonormalize(u[:, :i + 1], start_col=i, rng=rng)
        else:
            sigma[i] = sig
            u[:, i] = av / nav
        atu = a.apply_t(u[:, i])
        r7[i] = float(np.sqrt(
            np.linalg.norm(av - sigma[i] * u[:, i]) ** 2 +
            np.linalg.norm(atu - sigma[i] * v[:, i]) ** 2))
        rc[i] = float(eig.residual_norms[i])
        conv[i] = bool(eig.converged[i])

    for i in range(t, k):
        v[:, i] = rng.standard_normal(n)
        u[:, i] = rng.standard_normal(m)
        kernels.orthonormalize(v[:, :i + 1], start_col=i, rng=rng)
        kernels.orthonormalize(u[:, :i + 1], start_col=i, rng=rng)

    guesses = new_block(n + m, k)
    for i in range(k):
        guesses[:, i] = _stack_pair(v[:, i], u[:, i])

    bridge = StageBridge(sigma_tilde=sigma.copy(), rc_norms=rc,
                         guesses=guesses, tiny=tiny)
    prov = _Provisional(sigma=sigma, u=u, v=v, r7=r7, conv=conv)
    return bridge, prov


def stage2_shifts(bridge, est):
    """Interior shifts, one per slot, sorted ascending.

    Each shift sits at the certified lower edge of its value's interval,
    ``sigma - sqrt(2) * rc / sigma``, floored at ``||A|| * eps_mach``;
    tiny or empty slots use the floor directly.  The whole bridge is
    permuted into shift order (stable) so guesses stay paired.
    """
    k = bridge.sigma_tilde.shape[0]
    floor = est.a_norm * EPS
    shifts = np.full(k, floor)
    for i in range(k):
        sig = bridge.sigma_tilde[i]
        rc = bridge.rc_norms[i]
        if bridge.tiny[i] or sig <= 0.0 or not np.isfinite(rc):
            continue
        shifts[i] = max(sig - np.sqrt(2.0) * rc / sig, floor)
    order = np.argsort(shifts, kind="stable")
    bridge.shifts = shifts[order]
    bridge.order = order
    bridge.sigma_tilde = bridge.sigma_tilde[order]
    bridge.rc_norms = bridge.rc_norms[order]
    bridge.guesses = np.asfortranarray(bridge.guesses[:, order])
    bridge.tiny = bridge.tiny[order]
    return bridge.shifts


def _random_bridge(op, k, rng):
    """Bridge for the augmented-only method: random starts, floor shifts."""
    m, n = op.m, op.n
    guesses = np.asfortranarray(rng.standard_normal((n + m, k)))
    kernels.orthonormalize(guesses, rng=rng)
    return StageBridge(sigma_tilde=np.zeros(k), rc_norms=np.full(k, np.inf),
                       guesses=guesses, tiny=np.zeros(k, dtype=bool))


def _eig_overrides(cfg_eig, opts):
    for key, value in (opts or {}).items():
        if not hasattr(cfg_eig, key):
            raise ValueError("unknown eigensolver option %r" % (key,))
        setattr(cfg_eig, key, value)
    return cfg_eig


def _stage1_eig_config(cfg, delta, mbs, mrs, budget_ops):
    if cfg.target == "closest":
        shifts = tuple(sorted(float(s) ** 2 for s in cfg.target_values))
        target, locking, extraction = TARGET_CLOSEST_GEQ, True, EXTRACT_REFINED
    elif cfg.target == "smallest":
        shifts, target, locking, extraction = (), TARGET_SMALLEST, False, \
            EXTRACT_RR
    else:
        shifts, target, locking, extraction = (), TARGET_LARGEST, False, \
            EXTRACT_RR

    def test(lam, rnorm, x, opx, op_norm):
        return rnorm <= max(np.sqrt(abs(lam) * op_norm) * delta,
                            EPS * op_norm)

    e = EigConfig(num_evals=cfg.num_svals, target=target, shifts=shifts,
                  max_basis_size=mbs, min_restart_size=mrs, plus_k=1,
                  max_block_size=cfg.max_block_size, locking=locking,
                  extraction=extraction, convergence_test=test,
                  max_matvecs=budget_ops, seed=cfg.seed)
    return _eig_overrides(e, cfg.stage1_opts)


def _stage2_eig_config(cfg, delta, n, mbs, mrs, num, shifts, budget_ops):
    def test(lam, rnorm, x, opx, op_norm):
        if not rnorm < np.sqrt(2.0) * op_norm * delta:
            return False
        return _stage2_split_ok(lam, x, opx, n, op_norm, delta)

    def practical(lam, rnorm, x, opx, op_norm):
        if not (op_norm > 0.0 and
                rnorm <= PRACTICAL_FLOOR_FACTOR * EPS * op_norm):
            return False
        nv = np.linalg.norm(x[:n])
        nu = np.linalg.norm(x[n:])
        if nv == 0.0 or nu == 0.0:
            return False
        # a genuine triplet splits evenly; a null-space vector puts almost
        # everything in one half
        return min(nv, nu) >= 0.1 * max(nv, nu)

    if cfg.target == "largest":
        e = EigConfig(num_evals=num, target=TARGET_LARGEST,
                      max_basis_size=mbs, min_restart_size=mrs, plus_k=1,
                      max_block_size=cfg.max_block_size, locking=False,
                      extraction=EXTRACT_RR, convergence_test=test,
                      practical_test=practical, max_matvecs=budget_ops,
                      deactivate_krylov_init=True, seed=cfg.seed + 1)
    else:
        e = EigConfig(num_evals=num, target=TARGET_CLOSEST_GEQ,
                      shifts=tuple(shifts), max_basis_size=mbs,
                      min_restart_size=mrs, plus_k=1,
                      max_block_size=cfg.max_block_size, locking=True,
                      extraction=EXTRACT_REFINED, convergence_test=test,
                      practical_test=practical, max_matvecs=budget_ops,
                      deactivate_krylov_init=True, seed=cfg.seed + 1)
    return _eig_overrides(e, cfg.stage2_opts)


def _final_order(cfg, sigma):
    if cfg.target == "largest":
        return np.argsort(-sigma, kind="stable")
    return np.argsort(sigma, kind="stable")


def _status_merge(statuses, all_conv):
    if all_conv:
        return "ok"
    for s in ("budget", "stagnated"):
        if s in statuses:
            return s
    return "ok"


def _empty_result(a, stats):
    return SvdsResult(sigma=np.zeros(0), u=new_block(a.m, 0),
                      v=new_block(a.n, 0), rnorms=np.zeros(0),
                      converged=np.zeros(0, dtype=bool), stats=stats,
                      status="ok", stage1_rnorms=np.zeros(0))


def svds_solve(a, precond=None, cfg=None):
    """Compute ``cfg.num_svals`` singular triplets of ``a``.

    Parameters
    ----------
    a : SvdOperator, SparseMatrixCsr, or dense array
        The matrix; callables go through :meth:`SvdOperator.from_callables`.
    precond : Preconditioner, optional
        Used by whichever stage matches its mode (``"AtA"``/``"AAt"`` for
        the first, ``"augmented"`` for the second); mismatches are skipped
        with a warning.
    cfg : SvdsConfig, optional

    Returns
    -------
    SvdsResult
        ``converged[i]`` certifies the recomputed two-sided residual of
        triplet ``i`` is below ``||A|| * cfg.eps``; ``status`` is ``"ok"``,
        ``"budget"`` or ``"stagnated"`` (partial results are still
        returned, sorted per target).
    """
    t0 = time.perf_counter()
    cfg = cfg if cfg is not None else SvdsConfig()
    a = SvdOperator.wrap(a)
    cfg.validate(a.m, a.n)
    stats = SvdsStats()
    k = cfg.num_svals
    if k == 0:
        stats.seconds = time.perf_counter() - t0
        return _empty_result(a, stats)

    op, swapped = orient_problem(a)
    m, n = op.m, op.n
    delta = float(cfg.eps)
    est = NormEstimate(cfg.a_norm)
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 0x5fd]))
    mbs, mrs = cfg.resolved_basis_sizes()

    left_g, right_g = cfg.initial_left, cfg.initial_right
    ortho_l, ortho_r = cfg.ortho_left, cfg.ortho_right
    if swapped:
        left_g, right_g = right_g, left_g
        ortho_l, ortho_r = ortho_r, ortho_l

    budget = cfg.max_matvecs
    mv0 = op.n_matvecs

    def ops_left():
        if budget is None:
            return None
        return max((budget - (op.n_matvecs - mv0)) // 2, 0)

    statuses = []

    # ---------------- stage 1 ----------------
    if cfg.method in ("hybrid", "normal"):
        c_op = make_normal_operator(op)
        e1 = _stage1_eig_config(cfg, delta, mbs, mrs, ops_left())
        pre1 = select_preconditioner(precond, "AAt" if swapped else "AtA")
        pre1_before = pre1.n_applies if pre1 is not None else 0
        r1 = eig_solve(c_op, e1, guesses=right_g, ortho_constraints=ortho_r,
                       precond=pre1, est=est, est_mode="normal")
        statuses.append(r1.status)
        stats.restarts += r1.stats.restarts
        stats.resets += r1.stats.resets
        if pre1 is not None:
            stats.precond_applies += pre1.n_applies - pre1_before
        bridge, prov = stage1_postprocess(r1, op, est, k=k, rng=rng)
    else:
        bridge = _random_bridge(op, k, rng)
        prov = _Provisional(sigma=np.zeros(k), u=new_block(m, k),
                            v=new_block(n, k), r7=np.full(k, np.inf),
                            conv=np.zeros(k, dtype=bool))
    stats.stage1_matvecs = op.n_matvecs - mv0

    a_norm = est.a_norm
    passed = prov.r7 < a_norm * delta
    run_stage2 = cfg.method == "augmented" or \
        (cfg.method == "hybrid" and not passed.all())

    # ---------------- stage 2 ----------------
    mv1 = op.n_matvecs
    if run_stage2:
        if cfg.target != "largest":
            stage2_shifts(bridge, est)
            prov.permute(bridge.order)
            passed = passed[bridge.order]
        active = np.flatnonzero(~bridge.tiny & ~passed)
        if active.size:
            b_op = make_augmented_operator(op)
            pre2 = select_preconditioner(precond, "augmented")
            pre2_before = pre2.n_applies if pre2 is not None else 0

            frozen = []
            if ortho_l is not None and ortho_l.shape[1] > 0:
                for j in range(ortho_l.shape[1]):
                    frozen.append(_stack_pair(ortho_r[:, j], ortho_l[:, j]))
            for i in np.flatnonzero(bridge.tiny | passed):
                frozen.append(bridge.guesses[:, i])
            ortho_b = None
            if frozen:
                ortho_b = np.asfortranarray(np.stack(frozen, axis=1))

            shifts2 = bridge.shifts[active] if bridge.shifts is not None \
                else ()
            e2 = _stage2_eig_config(cfg, delta, n, mbs, mrs, active.size,
                                    shifts2, ops_left())
            guesses2 = np.asfortranarray(bridge.guesses[:, active])
            r2 = eig_solve(b_op, e2, guesses=guesses2,
                           ortho_constraints=ortho_b, precond=pre2,
                           est=est, est_mode="augmented")
            statuses.append(r2.status)
            stats.restarts += r2.stats.restarts
            stats.resets += r2.stats.resets
            if pre2 is not None:
                stats.precond_applies += pre2.n_applies - pre2_before

            a_norm = est.a_norm
            got = r2.eigenvalues.shape[0]
            for j in range(min(got, active.size)):
                slot = active[j]
                x = r2.eigenvectors[:, j]
                nv = float(np.linalg.norm(x[:n]))
                nu = float(np.linalg.norm(x[n:]))
                if nv == 0.0 or nu == 0.0:
                    continue
                prov.sigma[slot] = abs(float(r2.eigenvalues[j]))
                prov.v[:, slot] = x[:n] / nv
                prov.u[:, slot] = x[n:] / nu
                prov.r7[slot] = compute_svd_residual(
                    op, prov.sigma[slot], prov.u[:, slot], prov.v[:, slot])
    stats.stage2_matvecs = op.n_matvecs - mv1

    # ---------------- assemble ----------------
    stage1_r7 = prov.r7.copy() if not run_stage2 else None
    conv = prov.r7 < a_norm * delta
    order = _final_order(cfg, prov.sigma)
    sigma = prov.sigma[order]
    u = np.asfortranarray(prov.u[:, order])
    v = np.asfortranarray(prov.v[:, order])
    rnorms = prov.r7[order]
    conv = conv[order]

    if run_stage2:
        if cfg.method == "augmented":
            stage1_r7 = np.full(k, np.nan)
        else:
            stage1_r7_full = np.where(bridge.tiny | passed, prov.r7, np.inf)
            # residuals at the handoff: rc / sigma for the slots stage 2
            # re-solved (their r7 fields now hold stage-2 numbers)
            for i in np.flatnonzero(~bridge.tiny & ~passed):
                sig = bridge.sigma_tilde[i]
                if sig > 0 and np.isfinite(bridge.rc_norms[i]):
                    stage1_r7_full[i] = bridge.rc_norms[i] / sig
            stage1_r7 = stage1_r7_full
        stage1_r7 = stage1_r7[order]
    else:
        stage1_r7 = stage1_r7[order]

    if swapped:
        u, v = v, u

    stats.seconds = time.perf_counter() - t0
    return SvdsResult(sigma=sigma, u=u, v=v, rnorms=rnorms, converged=conv,
                      stats=stats, status=_status_merge(statuses,
                                                        bool(conv.all())),
                      stage1_rnorms=stage1_r7)


def estimate_condition_number(a, precond=None, cfg=None, rel_tol=0.1):
    """Estimate ``sigma_max / sigma_min`` with a loose stopping rule.

    Two one-pair solves on the normal-equations operator, largest then
    smallest, each stopped once the eigenresidual drops below ``rel_tol``
    times the current value; the value error is then bounded by the
    residual, i.e. ``rel_tol`` relative.  A smallest squared value at or
    below the rounding floor of the squared operator
    (``||A||^2 * eps_mach * max(m, n)``) reports an infinite condition
    number: the matrix is rank-deficient at this procedure's resolution,
    which caps estimable condition numbers near
    ``1 / sqrt(eps_mach * max(m, n))``.  A smallest solve cut off by the
    budget flags the estimate as a lower bound.
    """
    t0 = time.perf_counter()
    cfg = cfg if cfg is not None else SvdsConfig()
    a = SvdOperator.wrap(a)
    if not 0.0 < rel_tol < 1.0:
        raise ValueError("rel_tol must lie in (0, 1)")
    stats = SvdsStats()
    op, swapped = orient_problem(a)
    est = NormEstimate(cfg.a_norm)
    c_op = make_normal_operator(op)
    pre = select_preconditioner(precond, "AAt" if swapped else "AtA")
    budget = cfg.max_matvecs
    mv0 = op.n_matvecs

    def ops_left():
        if budget is None:
            return None
        return max((budget - (op.n_matvecs - mv0)) // 2, 0)

    def test(lam, rnorm, x, opx, op_norm):
        return rnorm <= abs(lam) * rel_tol

    def one(target, seed, mbs, mrs):
        e = EigConfig(num_evals=1, target=target, max_basis_size=mbs,
                      min_restart_size=mrs, plus_k=1, max_block_size=1,
                      convergence_test=test, max_matvecs=ops_left(),
                      seed=seed)
        return eig_solve(c_op, e, precond=pre, est=est, est_mode="normal")

    pre_before = pre.n_applies if pre is not None else 0
    r_hi = one(TARGET_LARGEST, cfg.seed, *_BASIS_SMALL)
    stats.stage1_matvecs = op.n_matvecs - mv0
    mv1 = op.n_matvecs
    r_lo = one(TARGET_SMALLEST, cfg.seed + 1, *_BASIS_LARGE)
    stats.stage2_matvecs = op.n_matvecs - mv1
    stats.restarts = r_hi.stats.restarts + r_lo.stats.restarts
    stats.resets = r_hi.stats.resets + r_lo.stats.resets
    if pre is not None:
        stats.precond_applies = pre.n_applies - pre_before

    sigma_max = float(np.sqrt(max(r_hi.eigenvalues[0], 0.0))) \
        if r_hi.eigenvalues.size else 0.0
    lam_min = float(r_lo.eigenvalues[0]) if r_lo.eigenvalues.size else 0.0
    sigma_min = float(np.sqrt(max(lam_min, 0.0)))
    # rank test at this procedure's resolution: a smallest eigenvalue of
    # the squared operator at or below its rounding floor is
    # indistinguishable from an exact zero regardless of rounding sign
    infinite = lam_min <= est.c_norm * EPS * max(op.m, op.n)
    lower_bound = (not infinite) and \
        (r_lo.status != "ok" or not bool(np.all(r_lo.converged)))
    kappa = np.inf if infinite else sigma_max / sigma_min
    stats.seconds = time.perf_counter() - t0
    return CondResult(kappa=kappa, sigma_max=sigma_max, sigma_min=sigma_min,
                      infinite=infinite, lower_bound=lower_bound,
                      stats=stats)
