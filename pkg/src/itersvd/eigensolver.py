"""Davidson-type solver for a few eigenpairs of a symmetric operator.

The search space grows one preconditioned residual at a time, collapses by
thick restart keeping the best Ritz vectors plus the previous iteration's
candidate (which recovers locally-optimal convergence), and supports two
extraction rules: standard Rayleigh-Ritz for exterior eigenvalues and a
refined projection at a constant shift for interior ones.  The refined rule
maintains a QR factorization of ``(Op - tau) V`` incrementally so each
iteration costs one small SVD instead of a fresh factorization.

Interior solves hard-lock converged pairs (forced restart, basis kept
orthogonal to the locked set); exterior solves soft-lock them (converged
pairs stay in the basis and a final Rayleigh-Ritz pass polishes the whole
converged set).

Two safeguards keep long runs honest.  When the candidate residual falls
below the error the restarted product ``W = Op V`` may have accumulated
(which grows like ``sqrt(restarts)`` times machine precision), the basis
is reorthonormalized and ``W`` recomputed from fresh products.  And a pair
whose requested tolerance lies below the attainable floor is accepted once
its residual reaches a small multiple of machine precision times the
operator norm, flagged as not user-converged so callers can decide what to
do with it.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .kernels import EPS
from .operators import NormEstimate

TARGET_LARGEST = "largest_algebraic"
TARGET_SMALLEST = "smallest_algebraic"
TARGET_CLOSEST_GEQ = "closest_geq"

EXTRACT_RR = "rayleigh_ritz"
EXTRACT_REFINED = "refined_const_shift"

# Residuals this close to machine precision times the operator norm are as
# converged as the recurrence can make them.
PRACTICAL_FLOOR_FACTOR = 10.0

# Relative improvement of the best residual that counts as progress for the
# stagnation watchdog.
_IMPROVE_FACTOR = 0.999


class BasisCollapseError(RuntimeError):
    """Every expansion direction was dependent several times in a row."""


@dataclass
class EigConfig:
    """Knobs for :func:`eig_solve`.

    ``convergence_test`` and ``practical_test`` take
    ``(lam, rnorm, x, op_x, op_norm)`` and return a bool; ``op_x`` is the
    operator already applied to the candidate ``x``, so tests that need a
    second look at the vector pay no extra products.
    """

    num_evals: int = 1
    target: str = TARGET_LARGEST
    shifts: tuple = ()
    max_basis_size: int = 15
    min_restart_size: int = 6
    plus_k: int = 1
    max_block_size: int = 1
    locking: bool = False
    extraction: str = EXTRACT_RR
    convergence_test: object = None
    practical_test: object = None
    max_matvecs: int = None
    deactivate_krylov_init: bool = False
    seed: int = 0
    disable_reset: bool = False
    stagnation_window: int = 250
    iteration_hook: object = None

    def validate(self, dim):
        if self.num_evals < 0:
            raise ValueError("num_evals must be nonnegative")
        if self.target not in (TARGET_LARGEST, TARGET_SMALLEST,
                               TARGET_CLOSEST_GEQ):
            raise ValueError("unknown target %r" % (self.target,))
        if self.extraction not in (EXTRACT_RR, EXTRACT_REFINED):
            raise ValueError("unknown extraction %r" % (self.extraction,))
        if self.target == TARGET_CLOSEST_GEQ:
            if not len(self.shifts):
                raise ValueError("closest_geq needs at least one shift")
            if not self.locking:
                raise ValueError("interior targets require locking")
        elif self.extraction == EXTRACT_REFINED:
            raise ValueError("refined extraction is tied to interior targets")
        if dim <= self.max_basis_size:
            return  # the space is solved densely; size checks are moot
        if not (0 < self.min_restart_size < self.max_basis_size):
            raise ValueError("need 0 < min_restart_size < max_basis_size")
        if self.plus_k < 0 or self.max_block_size < 1:
            raise ValueError("bad plus_k or max_block_size")
        if self.min_restart_size + self.plus_k >= self.max_basis_size:
            raise ValueError(
                "min_restart_size + plus_k must stay below max_basis_size")
        if self.num_evals > self.max_basis_size - 2:
            raise ValueError("num_evals too large for the basis size")


@dataclass
class EigStats:
    matvecs: int = 0
    precond_applies: int = 0
    restarts: int = 0
    resets: int = 0
    outer_iterations: int = 0


@dataclass
class EigResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residual_norms: np.ndarray
    converged: np.ndarray
    stats: EigStats
    status: str = "ok"   # ok | budget | stagnated

    @property
    def num_converged(self):
        return int(self.converged.sum())


def select_interior_candidate(lams, shift):
    """Index of the preferred interior pair for one shift.

    Picks the smallest value at or above ``shift``; when every value lies
    below the shift, falls back to the closest one from below.
    """
    lams = np.asarray(lams, dtype=np.float64)
    if lams.size == 0:
        raise ValueError("no pairs to select from")
    above = np.flatnonzero(lams >= shift)
    if above.size:
        return int(above[np.argmin(lams[above])])
    return int(np.argmax(lams))


def _interior_order(lams, shift):
    """Pair ordering for interior solves: above the shift ascending, then
    below the shift by distance."""
    lams = np.asarray(lams, dtype=np.float64)
    below = lams < shift
    key = np.where(below, shift - lams, lams - shift)
    return np.lexsort((key, below.astype(np.int64)))


class DavidsonSolver:
    """One solve; create it, then call :meth:`run` (or :meth:`step`)."""

    def __init__(self, op, cfg, guesses=None, ortho_constraints=None,
                 precond=None, est=None, est_mode="normal"):
        cfg.validate(op.dim)
        self.op = op
        self.cfg = cfg
        self.precond = precond
        self.est = est if est is not None else NormEstimate()
        if est_mode not in ("normal", "augmented"):
            raise ValueError("est_mode must be 'normal' or 'augmented'")
        self.est_mode = est_mode
        self.rng = np.random.default_rng(cfg.seed)
        self.stats = EigStats()
        self.status = "ok"
        self.n = op.dim

        self.ext = []
        if ortho_constraints is not None and ortho_constraints.shape[1] > 0:
            c = np.asfortranarray(np.array(ortho_constraints,
                                           dtype=np.float64))
            kernels.orthonormalize(c, rng=self.rng)
            self.ext.append(c)
        self.n_ext = sum(b.shape[1] for b in self.ext)

        self.wanted = max(min(cfg.num_evals, self.n - self.n_ext), 0)
        self.dense = self.n <= cfg.max_basis_size
        gmax = self.n - self.n_ext if self.dense else cfg.max_basis_size

        self.v = kernels.new_block(self.n, gmax)
        self.w = kernels.new_block(self.n, gmax)
        self.h = np.zeros((gmax, gmax))
        self.g = 0
        self.gmax = gmax

        self.locked_vecs = kernels.new_block(self.n, 0)
        self.locked_vals = []
        self.locked_rnorms = []
        self.locked_user = []

        self.q = None
        self.rfac = None
        self.tau = None

        self.restarts_since_reset = 0
        self.prev_coefs = None
        self.prev_coefs_g = 0
        self.collapse_streak = 0
        self._slot_progress = {}
        self._finished = self.wanted == 0

        if not self._finished:
            self._init_basis(guesses)
            if self.g == 0:
                # budget exhausted before a single basis product; there is
                # nothing to iterate on and finalization handles emptiness
                self._finished = True
            elif self.cfg.extraction == EXTRACT_REFINED and not self.dense:
                self._rebuild_qr()

    # ------------------------------------------------------------------
    # plumbing

    @property
    def op_norm(self):
        if self.est_mode == "augmented":
            return self.est.a_norm
        return self.est.c_norm

    def _observe(self, lams):
        if self.est_mode == "augmented":
            self.est.update_from_augmented(lams)
        else:
            self.est.update(lams)

    def _budget_left(self):
        if self.cfg.max_matvecs is None:
            return 10 ** 18
        return self.cfg.max_matvecs - self.stats.matvecs

    def _apply_op(self, x):
        cols = 1 if x.ndim == 1 else x.shape[1]
        self.stats.matvecs += cols
        return self.op.apply(x)

    def _active_shift(self):
        shifts = self.cfg.shifts
        i = min(len(self.locked_vals), len(shifts) - 1)
        return float(shifts[i])

    def _against(self):
        blocks = list(self.ext)
        if self.locked_vecs.shape[1]:
            blocks.append(self.locked_vecs)
        return blocks

    def _order(self, lams):
        if self.cfg.target == TARGET_LARGEST:
            return np.argsort(-lams, kind="stable")
        if self.cfg.target == TARGET_SMALLEST:
            return np.argsort(lams, kind="stable")
        return _interior_order(lams, self._active_shift())

    def _user_test(self, lam, rnorm, x, opx):
        test = self.cfg.convergence_test
        if test is None:
            return rnorm <= max(1e-12 * self.op_norm,
                                PRACTICAL_FLOOR_FACTOR * EPS * self.op_norm)
        return bool(test(lam, rnorm, x, opx, self.op_norm))

    def _practical_test(self, lam, rnorm, x, opx):
        if self.cfg.practical_test is not None:
            return bool(self.cfg.practical_test(lam, rnorm, x, opx,
                                                self.op_norm))
        return self.op_norm > 0.0 and \
            rnorm <= PRACTICAL_FLOOR_FACTOR * EPS * self.op_norm

    # ------------------------------------------------------------------
    # initialization

    def _init_basis(self, guesses):
        if self.dense:
            free = self.gmax
            self.v[:, :free] = self.rng.standard_normal((self.n, free))
            kernels.orthonormalize(self.v[:, :free], against=self.ext,
                                   rng=self.rng)
            self.g = free
            take = min(free, max(self._budget_left(), 0))
            if take:
                self.w[:, :take] = self._apply_op(self.v[:, :take])
            if take < free:
                self.status = "budget"
                self.g = take
            self._update_h_full()
            return

        g0 = 0
        if guesses is not None and guesses.shape[1] > 0:
            take = min(guesses.shape[1], self.gmax - 1)
            self.v[:, :take] = guesses[:, :take]
            kernels.orthonormalize(self.v[:, :take], against=self._against(),
                                   rng=self.rng)
            g0 = take
        if g0 == 0:
            # the random base block spans at least num_evals directions so a
            # degenerate eigenspace of dimension <= num_evals is representable
            # from the first iteration (a single-vector Krylov chain meets a
            # repeated eigenvalue's eigenspace in only one direction)
            b0 = min(max(self.cfg.max_block_size, self.cfg.num_evals),
                     self.gmax - 1)
            self.v[:, :b0] = self.rng.standard_normal((self.n, b0))
            kernels.orthonormalize(self.v[:, :b0], against=self._against(),
                                   rng=self.rng)
            g0 = b0

        if self.cfg.deactivate_krylov_init:
            init_target = g0
        else:
            free = self.n - self.n_ext
            init_target = min(max(self.cfg.min_restart_size, g0),
                              self.gmax - 1, free)

        # products chain off the last column so filling the basis costs
        # exactly one product per vector
        if g0 > 1:
            take = min(g0 - 1, max(self._budget_left(), 0))
            if take:
                self.w[:, :take] = self._apply_op(self.v[:, :take])
            if take < g0 - 1:
                self.status = "budget"
                self.g = take
                self._update_h_full()
                return
        j = g0 - 1
        while True:
            if self._budget_left() < 1:
                self.status = "budget"
                self.g = j
                self._update_h_full()
                return
            wj = self._apply_op(self.v[:, j])
            self.w[:, j] = wj
            if j + 1 >= init_target:
                break
            self.v[:, j + 1] = wj
            kernels.orthonormalize(self.v[:, :j + 2], against=self._against(),
                                   start_col=j + 1, rng=self.rng)
            j += 1
        self.g = init_target
        self._update_h_full()

    def _update_h_full(self):
        g = self.g
        hh = self.v[:, :g].T @ self.w[:, :g]
        self.h[:g, :g] = 0.5 * (hh + hh.T)

    def _rebuild_qr(self):
        self.tau = self._active_shift()
        m = self.w[:, :self.g] - self.tau * self.v[:, :self.g]
        self.q, self.rfac = kernels.qr_factor(m, rng=self.rng)

    # ------------------------------------------------------------------
    # extraction

    def extract_rayleigh_ritz(self):
        """Ritz pairs of the current space, ordered by the target rule."""
        g = self.g
        lams, y = kernels.sym_eig(self.h[:g, :g])
        order = self._order(lams)
        return lams[order], np.asfortranarray(y[:, order])

    def extract_refined(self):
        """Refined candidate at the constant shift.

        Returns ``(lam, y)`` where ``y`` minimizes ``||(Op - tau) V y||``
        over unit coefficient vectors (the smallest right singular vector
        of the R factor) and ``lam`` is its Rayleigh quotient.
        """
        g = self.g
        _, vecs = kernels.small_svd(self.rfac[:g, :g])
        y = vecs[:, -1]
        lam = float(y @ (self.h[:g, :g] @ y))
        return lam, y

    # ------------------------------------------------------------------
    # residuals, reset, stagnation

    def _candidates(self, lams, y, count):
        """Vectors, products and residual norms of the leading pairs."""
        g = self.g
        t = max(min(count, lams.shape[0]), 0)
        yb = y[:, :t]
        x = np.asfortranarray(self.v[:, :g] @ yb)
        opx = np.asfortranarray(self.w[:, :g] @ yb)
        res = opx - x * lams[None, :t]
        rnorms = np.linalg.norm(res, axis=0)
        return x, opx, res, rnorms

    def maybe_reset(self, rnorm):
        """Reorthonormalize and recompute ``W`` when the residual dips below
        the error the restarted recurrence may have accumulated."""
        if self.cfg.disable_reset:
            return False
        threshold = np.sqrt(self.restarts_since_reset) * self.op_norm * EPS
        if rnorm >= threshold:
            return False
        g = self.g
        if self._budget_left() < g:
            return False
        kernels.orthonormalize(self.v[:, :g], against=self._against(),
                               rng=self.rng)
        self.w[:, :g] = self._apply_op(self.v[:, :g])
        self._update_h_full()
        if self.q is not None:
            self._rebuild_qr()
        self.restarts_since_reset = 0
        self.prev_coefs = None
        self.stats.resets += 1
        return True

    def _note_progress(self, slot, rnorm, lam):
        """Stagnation bookkeeping: a shrinking residual or a moving
        eigenvalue estimate both count as progress; only a candidate that
        is pinned in value with a flat residual accumulates staleness."""
        rec = self._slot_progress.get(slot)
        if rec is None:
            self._slot_progress[slot] = [rnorm, 0, lam]
            return 0
        best, stale, lam_ref = rec
        moved = abs(lam - lam_ref) > \
            100.0 * EPS * max(abs(lam), abs(lam_ref))
        if rnorm < best * _IMPROVE_FACTOR or moved:
            self._slot_progress[slot] = [min(rnorm, best), 0, lam]
            return 0
        rec[1] = stale + 1
        return stale + 1

    # ------------------------------------------------------------------
    # restarting and locking

    def _coef_gs(self, columns, limit, against=None):
        """Orthonormalize coefficient vectors in priority order, dropping
        dependent ones; returns a (g, s) block with s <= limit."""
        g = self.g
        kept = []
        base = [] if against is None else list(against)
        for col in columns:
            if len(kept) >= limit:
                break
            c = np.array(col, dtype=np.float64, copy=True)
            for _ in range(2):
                for b in base:
                    c -= b * (b @ c)
                for b in kept:
                    c -= b * (b @ c)
            nrm = np.linalg.norm(c)
            if nrm > 1e-8:
                kept.append(c / nrm)
        out = kernels.new_block(g, len(kept))
        for i, c in enumerate(kept):
            out[:, i] = c
        return out

    def _padded_prev(self):
        if self.prev_coefs is None or self.prev_coefs_g > self.g:
            return []
        cols = []
        for j in range(self.prev_coefs.shape[1]):
            c = np.zeros(self.g)
            c[:self.prev_coefs_g] = self.prev_coefs[:, j]
            cols.append(c)
        return cols

    def _reseed_basis(self):
        """Replace an emptied basis with one random direction."""
        self.v[:, 0] = self.rng.standard_normal(self.n)
        kernels.orthonormalize(self.v[:, :1], against=self._against(),
                               rng=self.rng)
        self.g = 1
        if self._budget_left() < 1:
            self.status = "budget"
            self._finished = True
            self.w[:, 0] = 0.0
        else:
            self.w[:, 0] = self._apply_op(self.v[:, 0])
        self._update_h_full()

    def restart(self, lams, y, conv_count, exclude=None, y_first=None):
        """Thick restart keeping the target-ordered Ritz vectors plus the
        previous iteration's candidate coefficients.

        ``exclude`` removes one coefficient direction (a just-locked pair)
        from the retained set; ``y_first`` puts one coefficient vector (the
        current refined candidate) at the head of the retained set.
        """
        cfg = self.cfg
        g = self.g
        retain_target = max(cfg.min_restart_size, conv_count + 1)
        retain_target = max(min(retain_target, g - 1 if g > 1 else 1,
                                self.gmax - 2), 1)

        priority = []
        if y_first is not None:
            priority.append(y_first)
        priority.extend(y[:, j] for j in range(y.shape[1]))
        against = [exclude] if exclude is not None else None
        sel = self._coef_gs(priority, retain_target, against=against)

        sel_cols = [sel[:, j] for j in range(sel.shape[1])]
        p_budget = max(min(cfg.plus_k, self.gmax - 1 - sel.shape[1]), 0)
        if p_budget > 0:
            plus = self._coef_gs(
                self._padded_prev(), p_budget,
                against=([exclude] if exclude is not None else []) + sel_cols)
        else:
            plus = kernels.new_block(g, 0)

        coefs = np.asfortranarray(np.hstack([sel, plus]))
        s = coefs.shape[1]
        self.stats.restarts += 1
        self.restarts_since_reset += 1
        self.prev_coefs = None
        if s == 0:
            self._reseed_basis()
            if self.q is not None and not self._finished:
                self._rebuild_qr()
            return self.g

        vnew = self.v[:, :g] @ coefs
        wnew = self.w[:, :g] @ coefs
        hnew = coefs.T @ (self.h[:g, :g] @ coefs)
        self.v[:, :s] = vnew
        self.w[:, :s] = wnew
        self.h[:s, :s] = 0.5 * (hnew + hnew.T)
        if self.q is not None:
            self.q, self.rfac = kernels.qr_restart(self.q[:, :g],
                                                   self.rfac[:g, :g], coefs)
        self.g = s
        return s

    def lock_candidate(self, lam, y, x, rnorm, user_flag, lams, yall):
        """Move a converged pair out of the basis and restart without it."""
        xn = x / np.linalg.norm(x)
        cols = self.locked_vecs.shape[1]
        grown = kernels.new_block(self.n, cols + 1)
        grown[:, :cols] = self.locked_vecs
        grown[:, cols] = xn
        kernels.orthonormalize(grown, against=self.ext, start_col=cols,
                               rng=self.rng)
        self.locked_vecs = grown
        self.locked_vals.append(float(lam))
        self.locked_rnorms.append(float(rnorm))
        self.locked_user.append(bool(user_flag))

        if len(self.locked_vals) >= self.wanted:
            self._finished = True
            return
        self.restart(lams, yall, 0, exclude=y)
        if self.q is not None and not self._finished:
            # the refined factorization now belongs to the next shift
            self._rebuild_qr()

    # ------------------------------------------------------------------
    # main loop

    def step(self):
        """One outer iteration; returns a dict describing the candidate."""
        cfg = self.cfg
        self.stats.outer_iterations += 1
        info = {"restarted": False, "reset": False, "locked": False,
                "done": False}

        lams, y = self.extract_rayleigh_ritz()
        self._observe(lams)

        if cfg.extraction == EXTRACT_REFINED:
            lam_c, y_c = self.extract_refined()
            x_c = self.v[:, :self.g] @ y_c
            opx_c = self.w[:, :self.g] @ y_c
            res_c = opx_c - lam_c * x_c
            rnorm_c = float(np.linalg.norm(res_c))
            conv_count = 0
            y_first = y_c
            res_block = res_c[:, None]
        else:
            probe = 1 if cfg.locking else \
                min(self.wanted + cfg.max_block_size, self.g)
            x, opx, res, rnorms = self._candidates(lams, y, probe)
            conv_count = 0
            if not cfg.locking:
                for i in range(min(self.wanted, rnorms.shape[0])):
                    ok = self._user_test(lams[i], rnorms[i], x[:, i],
                                         opx[:, i]) or \
                        self._practical_test(lams[i], rnorms[i], x[:, i],
                                             opx[:, i])
                    if not ok:
                        break
                    conv_count += 1
            ci = min(conv_count, rnorms.shape[0] - 1)
            lam_c, y_c = float(lams[ci]), y[:, ci]
            x_c, opx_c = x[:, ci], opx[:, ci]
            rnorm_c = float(rnorms[ci])
            y_first = None
            res_block = res[:, ci:min(ci + cfg.max_block_size,
                                      res.shape[1])]

        slot = len(self.locked_vals) if cfg.locking else conv_count
        info.update(lam=lam_c, rnorm=rnorm_c, x=x_c, conv_count=conv_count,
                    g=self.g, slot=slot,
                    tau=self.tau if self.q is not None else None)
        if cfg.iteration_hook is not None:
            cfg.iteration_hook(self, dict(info, rr_values=lams, rr_coefs=y,
                                          y_refined=y_first))

        if self.maybe_reset(rnorm_c):
            info["reset"] = True
            return info

        if not cfg.locking and conv_count >= self.wanted:
            self._finished = True
            info["done"] = True
            return info

        if cfg.locking:
            ok_user = self._user_test(lam_c, rnorm_c, x_c, opx_c)
            if ok_user or self._practical_test(lam_c, rnorm_c, x_c, opx_c):
                self.lock_candidate(lam_c, y_c, x_c, rnorm_c, ok_user,
                                    lams, y)
                info["locked"] = True
                info["done"] = self._finished
                return info

        if cfg.stagnation_window is not None and \
                self._note_progress(slot, rnorm_c, lam_c) > \
                cfg.stagnation_window:
            self.status = "stagnated"
            self._finished = True
            info["done"] = True
            return info

        if self._budget_left() < cfg.max_block_size:
            self.status = "budget"
            self._finished = True
            info["done"] = True
            return info

        restarted = False
        if self.g >= self.gmax:
            # the retained span keeps the candidate, so the residual block
            # computed above still expands the restarted basis correctly
            self.restart(lams, y, conv_count, y_first=y_first)
            restarted = True
            info["restarted"] = True
            if self._finished:
                info["done"] = True
                return info

        self._expand(res_block)

        if not restarted:
            if cfg.extraction == EXTRACT_REFINED:
                self.prev_coefs = y_c[:, None].copy()
            else:
                hi = min(conv_count + max(cfg.plus_k, 1), y.shape[1])
                self.prev_coefs = y[:, conv_count:hi].copy()
            self.prev_coefs_g = info["g"]
        return info

    def _expand(self, res_block):
        cfg = self.cfg
        b = min(res_block.shape[1], self.gmax - self.g)
        if b <= 0:
            return
        block = res_block[:, :b]
        if self.precond is not None:
            block = self.precond.apply(np.asfortranarray(block))
            self.stats.precond_applies += b
        g = self.g
        self.v[:, g:g + b] = block
        replaced = kernels.orthonormalize(self.v[:, :g + b],
                                          against=self._against(),
                                          start_col=g, rng=self.rng)
        if len(replaced) == b:
            self.collapse_streak += 1
            if self.collapse_streak >= 3:
                raise BasisCollapseError(
                    "no independent expansion direction after 3 retries")
        else:
            self.collapse_streak = 0

        wnew = self._apply_op(self.v[:, g:g + b])
        self.w[:, g:g + b] = wnew
        hcol = self.v[:, :g + b].T @ wnew
        self.h[:g + b, g:g + b] = hcol
        self.h[g:g + b, :g] = hcol[:g].T
        blk = self.h[g:g + b, g:g + b]
        self.h[g:g + b, g:g + b] = 0.5 * (blk + blk.T)
        if self.q is not None:
            for j in range(b):
                col = wnew[:, j] - self.tau * self.v[:, g + j]
                self.q, self.rfac, _ = kernels.qr_append(self.q, self.rfac,
                                                         col, rng=self.rng)
        self.g = g + b

    # ------------------------------------------------------------------
    # finalization

    def finalize_soft_locked(self):
        """Extra Rayleigh-Ritz over the leading converged pairs, with fresh
        products and honestly recomputed residuals."""
        lams, y = self.extract_rayleigh_ritz()
        t = min(self.wanted, self.g)
        x = np.asfortranarray(self.v[:, :self.g] @ y[:, :t])
        wx = self._apply_op(x) if t else kernels.new_block(self.n, 0)
        h2 = x.T @ wx
        lam2, z = kernels.sym_eig(0.5 * (h2 + h2.T))
        order = self._order(lam2)
        lam2 = lam2[order]
        z = z[:, order]
        x2 = np.asfortranarray(x @ z)
        wx2 = wx @ z
        res = wx2 - x2 * lam2[None, :]
        rnorms = np.linalg.norm(res, axis=0)
        conv = np.array([self._user_test(lam2[i], rnorms[i], x2[:, i],
                                         wx2[:, i]) for i in range(t)],
                        dtype=bool)
        return lam2, x2, rnorms, conv

    def _finalize_locked(self):
        t = len(self.locked_vals)
        x = np.asfortranarray(self.locked_vecs[:, :t])
        if t == 0:
            return (np.zeros(0), kernels.new_block(self.n, 0), np.zeros(0),
                    np.zeros(0, dtype=bool))
        wx = self._apply_op(x)
        lam = np.einsum("ij,ij->j", x, wx)
        res = wx - x * lam[None, :]
        rnorms = np.linalg.norm(res, axis=0)
        conv = np.array([self._user_test(lam[i], rnorms[i], x[:, i],
                                         wx[:, i]) for i in range(t)],
                        dtype=bool)
        return lam, x, rnorms, conv

    def _run_dense(self):
        """Exact solve once the basis spans the whole admissible space."""
        lams_all, y_all = kernels.sym_eig(self.h[:self.g, :self.g])
        self._observe(lams_all)
        if self.cfg.target == TARGET_CLOSEST_GEQ:
            shifts = self.cfg.shifts
            chosen = []
            open_idx = list(range(lams_all.shape[0]))
            # a budget-truncated basis may hold fewer pairs than wanted
            for i in range(min(self.wanted, lams_all.shape[0])):
                s = float(shifts[min(i, len(shifts) - 1)])
                pick = open_idx[select_interior_candidate(
                    lams_all[open_idx], s)]
                open_idx.remove(pick)
                chosen.append(pick)
        else:
            order = self._order(lams_all)
            chosen = list(order[:self.wanted])
        lam = lams_all[chosen]
        x = np.asfortranarray(self.v[:, :self.g] @ y_all[:, chosen])
        opx = self.w[:, :self.g] @ y_all[:, chosen]
        res = opx - x * lam[None, :]
        rnorms = np.linalg.norm(res, axis=0)
        conv = np.array([self._user_test(lam[i], rnorms[i], x[:, i],
                                         opx[:, i])
                         for i in range(lam.shape[0])], dtype=bool)
        return EigResult(lam, x, np.asarray(rnorms), conv, self.stats,
                         self.status)

    def run(self):
        if self.wanted == 0:
            return EigResult(np.zeros(0), kernels.new_block(self.n, 0),
                             np.zeros(0), np.zeros(0, dtype=bool),
                             self.stats, self.status)
        if self.dense:
            return self._run_dense()
        while not self._finished:
            self.step()
        if self.cfg.locking:
            lam, x, rnorms, conv = self._finalize_locked()
        else:
            lam, x, rnorms, conv = self.finalize_soft_locked()
        return EigResult(np.asarray(lam, dtype=np.float64), x,
                         np.asarray(rnorms, dtype=np.float64), conv,
                         self.stats, self.status)


def eig_solve(op, cfg, guesses=None, ortho_constraints=None, precond=None,
              est=None, est_mode="normal"):
    """Compute ``cfg.num_evals`` eigenpairs of a symmetric operator.

    Parameters
    ----------
    op : LinearOperator
        Symmetric operator to diagonalize.
    cfg : EigConfig
    guesses : ndarray (dim, j), optional
        Initial basis columns; a random start plus Krylov fill-in is used
        otherwise.  ``cfg.deactivate_krylov_init`` suppresses the fill-in
        so the basis starts from the guesses alone.
    ortho_constraints : ndarray (dim, c), optional
        The search space and all returned vectors stay orthogonal to these
        columns.
    precond : Preconditioner, optional
    est : NormEstimate, optional
        Shared running norm estimate; created fresh when omitted.
    est_mode : str
        ``"normal"`` when ``op`` is the normal-equations (or any generic
        symmetric) operator, ``"augmented"`` when it is the stacked one,
        so the estimate is read and updated in consistent units.

    Returns
    -------
    EigResult
        Pairs in target order, with residual norms recomputed from fresh
        products at exit and per-pair converged flags from the user test.
    """
    solver = DavidsonSolver(op, cfg, guesses=guesses,
                            ortho_constraints=ortho_constraints,
                            precond=precond, est=est, est_mode=est_mode)
    return solver.run()
