"""Davidson eigensolver behavior: extraction, restarts, locking, interior
targeting, the reorthogonalization reset, and bookkeeping."""

import numpy as np
import pytest

from oracles import davidson_reference, jacobi_eigh, jacobi_svd
from itersvd import (BasisCollapseError, EigConfig, LinearOperator,
                     Preconditioner, SpectrumSpec, SvdOperator, eig_solve,
                     make_augmented_operator, synth_matrix)
from itersvd.eigensolver import (EPS, DavidsonSolver,
                                 select_interior_candidate)


def _diag_op(values):
    d = np.asarray(values, dtype=np.float64)
    return LinearOperator(d.shape[0], lambda x: d[:, None] * x
                          if x.ndim == 2 else d * x)


def _dense_op(a):
    return LinearOperator(a.shape[0], lambda x: a @ x)


def _tol_test(tol):
    return lambda lam, rnorm, x, opx, op_norm: rnorm <= tol


_NEVER = lambda lam, rnorm, x, opx, op_norm: False  # noqa: E731


class Stop(Exception):
    """Raised by hooks to end a run after enough samples."""


def _solver(op, **cfg_kw):
    cfg = EigConfig(**cfg_kw)
    return DavidsonSolver(op, cfg)


class TestExteriorBasics:
    def test_diagonal_largest_dense_path(self):
        res = eig_solve(_diag_op(np.arange(1.0, 11.0)),
                        EigConfig(num_evals=2, target="largest_algebraic",
                                  convergence_test=_tol_test(1e-10), seed=1))
        assert np.allclose(res.eigenvalues, [10.0, 9.0], atol=1e-10)
        assert res.converged.all()
        for col, want in zip((0, 1), (9, 8)):
            v = res.eigenvectors[:, col]
            assert abs(abs(v[want]) - 1.0) <= 1e-9

    def test_diagonal_largest_iterative_path(self):
        res = eig_solve(_diag_op(np.arange(1.0, 11.0)),
                        EigConfig(num_evals=2, target="largest_algebraic",
                                  max_basis_size=6, min_restart_size=3,
                                  convergence_test=_tol_test(1e-10), seed=1))
        assert np.allclose(res.eigenvalues, [10.0, 9.0], atol=1e-9)
        assert res.converged.all()

    def test_ortho_constraints_deflate_top(self):
        e10 = np.zeros((10, 1), order="F")
        e10[9, 0] = 1.0
        for mbs in (15, 6):
            res = eig_solve(_diag_op(np.arange(1.0, 11.0)),
                            EigConfig(num_evals=1,
                                      target="largest_algebraic",
                                      max_basis_size=mbs, min_restart_size=3,
                                      convergence_test=_tol_test(1e-10),
                                      seed=1),
                            ortho_constraints=e10)
            assert abs(res.eigenvalues[0] - 9.0) <= 1e-9
            assert abs(res.eigenvectors[9, 0]) <= 1e-10

    def test_smallest_target(self):
        res = eig_solve(_diag_op(np.arange(1.0, 31.0)),
                        EigConfig(num_evals=3, target="smallest_algebraic",
                                  max_basis_size=12, min_restart_size=5,
                                  convergence_test=_tol_test(1e-10), seed=2))
        assert np.allclose(res.eigenvalues, [1.0, 2.0, 3.0], atol=1e-9)

    def test_zero_wanted_returns_empty(self):
        res = eig_solve(_diag_op(np.arange(1.0, 11.0)),
                        EigConfig(num_evals=0, target="largest_algebraic"))
        assert res.eigenvalues.shape == (0,)
        assert res.stats.matvecs == 0


class TestFirstStepArithmetic:
    def test_rayleigh_quotient_and_residual_by_hand(self):
        # two live coordinates (values 1 and 100) inside a larger diagonal
        # so the solver takes the iterative path; the first extraction from
        # the single guess (e1+e2)/sqrt(2) is fully predictable
        d = np.concatenate([[1.0, 100.0], np.full(18, 50.0)])
        x0 = np.zeros((20, 1), order="F")
        x0[0, 0] = x0[1, 0] = 1.0 / np.sqrt(2.0)
        grabbed = []

        def hook(solver, info):
            grabbed.append((info["lam"], info["rnorm"], info["x"].copy()))
            raise Stop

        cfg = EigConfig(num_evals=1, target="largest_algebraic",
                        max_basis_size=15, min_restart_size=6,
                        deactivate_krylov_init=True,
                        convergence_test=_NEVER, practical_test=_NEVER,
                        iteration_hook=hook, seed=0)
        with pytest.raises(Stop):
            eig_solve(_diag_op(d), cfg, guesses=x0)
        lam, rnorm, x = grabbed[0]
        assert abs(lam - 50.5) <= 1e-12 * 50.5
        # residual = Op x0 - 50.5 x0 = (-49.5, 49.5, 0, ...)/sqrt(2)
        assert abs(rnorm - 49.5) <= 1e-10
        r = d * x - lam * x
        assert np.allclose(r[:2], np.array([-49.5, 49.5]) / np.sqrt(2.0),
                           atol=1e-10)
        assert np.abs(r[2:]).max() <= 1e-10

    def test_twenty_steps_match_straight_line_reference(self):
        rng = np.random.default_rng(42)
        a = rng.standard_normal((100, 100))
        a = a + a.T
        x0 = rng.standard_normal(100)
        ref = davidson_reference(a, x0, 20)
        seq = []

        def hook(solver, info):
            seq.append(info["rnorm"])
            if len(seq) >= 20:
                raise Stop

        cfg = EigConfig(num_evals=1, target="largest_algebraic",
                        max_basis_size=25, min_restart_size=6,
                        deactivate_krylov_init=True,
                        convergence_test=_NEVER, practical_test=_NEVER,
                        iteration_hook=hook, seed=0)
        guess = np.asfortranarray((x0 / np.linalg.norm(x0))[:, None])
        with pytest.raises(Stop):
            eig_solve(_dense_op(a), cfg, guesses=guess)
        assert np.abs(np.array(seq) - ref).max() <= 1e-8


class TestAgainstDenseOracle:
    def test_sparse_symmetric_smallest_five(self):
        rng = np.random.default_rng(7)
        a = rng.standard_normal((150, 150))
        a *= np.abs(rng.standard_normal((150, 150))) > 1.0
        a = a + a.T
        w_ref, _ = jacobi_eigh(a)
        res = eig_solve(_dense_op(a),
                        EigConfig(num_evals=5, target="smallest_algebraic",
                                  max_basis_size=35, min_restart_size=14,
                                  convergence_test=_tol_test(1e-10), seed=3))
        assert res.converged.all()
        assert np.abs(res.eigenvalues - w_ref[:5]).max() <= 1e-9

    def test_converged_vectors_match_oracle_directions(self):
        sigma = np.concatenate([[9.0, 7.0, 5.0, 3.0, 2.0],
                                np.linspace(0.9, 0.1, 35)])
        a = synth_matrix(SpectrumSpec(sigma=sigma, m=40, n=40, seed=8))
        h = a.to_dense() @ a.to_dense().T  # eigenvalues sigma^2, wide gaps
        w_ref, v_ref = jacobi_eigh(h)
        res = eig_solve(_dense_op(h),
                        EigConfig(num_evals=5, target="largest_algebraic",
                                  max_basis_size=18, min_restart_size=7,
                                  convergence_test=_tol_test(1e-11), seed=4))
        assert res.converged.all()
        for i in range(5):
            ref = v_ref[:, -(i + 1)]
            got = res.eigenvectors[:, i]
            angle = np.arccos(min(1.0, abs(float(ref @ got))))
            assert angle <= 1e-6


class TestIterationProperties:
    def test_largest_ritz_value_is_monotone_across_restarts(self):
        rng = np.random.default_rng(11)
        a = rng.standard_normal((120, 120))
        a = a + a.T
        track = {"prev": -np.inf}

        def hook(solver, info):
            lam = float(np.max(info["rr_values"]))
            assert lam >= track["prev"] - 1e-12 * max(1.0, abs(lam))
            track["prev"] = lam

        res = eig_solve(_dense_op(a),
                        EigConfig(num_evals=2, target="largest_algebraic",
                                  max_basis_size=10, min_restart_size=4,
                                  convergence_test=_tol_test(1e-9),
                                  iteration_hook=hook, seed=5))
        assert res.converged.all()
        assert res.stats.restarts >= 2

    def test_rayleigh_quotient_grows_after_expansion(self):
        rng = np.random.default_rng(13)
        a = rng.standard_normal((60, 60))
        a = a + a.T
        lams = []

        def hook(solver, info):
            lams.append(info["lam"])
            if len(lams) >= 12:
                raise Stop

        cfg = EigConfig(num_evals=1, target="largest_algebraic",
                        max_basis_size=30, min_restart_size=6,
                        convergence_test=_NEVER, practical_test=_NEVER,
                        iteration_hook=hook, seed=0)
        with pytest.raises(Stop):
            eig_solve(_dense_op(a), cfg)
        diffs = np.diff(np.array(lams))
        assert (diffs >= -1e-12 * abs(lams[0])).all()

    def test_plus_k_zero_restart_leaves_diagonal_projection(self):
        rng = np.random.default_rng(17)
        a = rng.standard_normal((80, 80))
        a = a + a.T
        solver = _solver(_dense_op(a), num_evals=2,
                         target="largest_algebraic", max_basis_size=9,
                         min_restart_size=4, plus_k=0,
                         convergence_test=_NEVER, practical_test=_NEVER,
                         seed=0)
        checked = 0
        for _ in range(80):
            info = solver.step()
            if info["restarted"] and not info["done"]:
                # the step appended one expansion column after compressing,
                # so the retained Ritz block is everything before it
                s = solver.g - 1
                h = solver.h[:s, :s]
                off = np.abs(h - np.diag(np.diag(h))).max()
                assert off <= 1e-12 * max(1.0, np.abs(h).max())
                checked += 1
            if checked >= 3:
                break
        assert checked >= 3

    def test_candidate_residual_survives_restart(self):
        rng = np.random.default_rng(19)
        a = rng.standard_normal((90, 90))
        a = a + a.T
        solver = _solver(_dense_op(a), num_evals=1,
                         target="largest_algebraic", max_basis_size=8,
                         min_restart_size=3, convergence_test=_NEVER,
                         practical_test=_NEVER, seed=0)
        hist = [solver.step() for _ in range(60)]
        compared = 0
        for prev, nxt in zip(hist, hist[1:]):
            # near the working-precision floor the extraction jitters at
            # rounding level, so only well-resolved residuals are compared
            if prev["restarted"] and prev["rnorm"] > 1e-10:
                assert nxt["rnorm"] <= prev["rnorm"] * (1.0 + 1e-10)
                compared += 1
        assert compared >= 5

    def test_matvec_accounting_is_exact(self):
        rng = np.random.default_rng(23)
        a = rng.standard_normal((70, 70))
        a = a + a.T
        op = _dense_op(a)
        res = eig_solve(op, EigConfig(num_evals=2,
                                      target="largest_algebraic",
                                      max_basis_size=12, min_restart_size=5,
                                      convergence_test=_tol_test(1e-9),
                                      seed=6))
        assert res.converged.all()
        assert res.stats.matvecs == op.n_applies


class TestResets:
    def test_counter_zero_never_triggers(self):
        solver = _fresh_solver()
        assert solver.restarts_since_reset == 0
        assert not solver.maybe_reset(0.0)
        assert solver.stats.resets == 0

    def test_forced_trigger_restores_invariants(self):
        solver = _fresh_solver()
        # degrade the cached products, then force the trigger condition
        solver.v[:, 0] += 1e-9
        solver.w[:, 1] += 1e-8
        solver.restarts_since_reset = 25
        assert solver.maybe_reset(solver.op_norm * EPS)
        assert solver.restarts_since_reset == 0
        assert solver.stats.resets == 1
        g = solver.g
        v = solver.v[:, :g]
        assert np.abs(v.T @ v - np.eye(g)).max() <= 1e-13
        fresh = solver.op.apply(np.asfortranarray(v))
        scale = max(solver.op_norm, 1.0)
        assert np.abs(solver.w[:, :g] - fresh).max() <= 1e-13 * scale

    def test_disable_reset_switch(self):
        solver = _fresh_solver(disable_reset=True)
        solver.restarts_since_reset = 25
        assert not solver.maybe_reset(solver.op_norm * EPS)


def _fresh_solver(**overrides):
    rng = np.random.default_rng(29)
    a = rng.standard_normal((40, 40))
    a = a + a.T
    solver = _solver(_dense_op(a), num_evals=1, target="largest_algebraic",
                     max_basis_size=10, min_restart_size=4,
                     convergence_test=_NEVER, seed=0, **overrides)
    for _ in range(6):
        solver.step()
    return solver


class TestLockingAndInterior:
    def test_locking_finds_multiple_copies(self):
        # the orthogonality constraint forces the second converged pair
        # onto the remaining copy of the doubled eigenvalue
        res = eig_solve(_diag_op([1.0, 1.0, 2.0]),
                        EigConfig(num_evals=2, target="smallest_algebraic",
                                  locking=True,
                                  convergence_test=_tol_test(1e-10), seed=7))
        assert res.converged.all()
        assert np.allclose(res.eigenvalues, [1.0, 1.0], atol=1e-8)
        cross = abs(float(res.eigenvectors[:, 0] @ res.eigenvectors[:, 1]))
        assert cross <= 1e-8

    def test_sequential_locks_give_distinct_ascending_values(self):
        res = eig_solve(_diag_op(np.arange(1.0, 21.0)),
                        EigConfig(num_evals=3, target="smallest_algebraic",
                                  locking=True, max_basis_size=8,
                                  min_restart_size=3,
                                  convergence_test=_tol_test(1e-10), seed=7))
        assert res.converged.all()
        assert np.allclose(res.eigenvalues, [1.0, 2.0, 3.0], atol=1e-8)

    def test_locked_vectors_stay_orthogonal_to_basis(self):
        d = np.arange(1.0, 41.0)
        worst = {"v": 0.0}

        def hook(solver, info):
            if solver.locked_vecs.shape[1] > 0:
                g = solver.g
                cross = np.abs(solver.locked_vecs.T @ solver.v[:, :g]).max()
                worst["v"] = max(worst["v"], float(cross))

        res = eig_solve(_diag_op(d),
                        EigConfig(num_evals=3, target="smallest_algebraic",
                                  locking=True, max_basis_size=10,
                                  min_restart_size=4,
                                  convergence_test=_tol_test(1e-9),
                                  iteration_hook=hook, seed=8))
        assert res.converged.all()
        assert worst["v"] <= 1e-10

    def test_select_interior_candidate_prefers_just_above(self):
        lams = np.array([-0.5, 0.2, 1.1])
        assert select_interior_candidate(lams, 0.1) == 1

    def test_select_interior_candidate_falls_back_below(self):
        lams = np.array([-0.5, -0.2, -2.0])
        assert select_interior_candidate(lams, 0.1) == 1

    def test_interior_locking_in_shift_order_matches_oracle(self):
        sigma = np.geomspace(0.05, 1.0, 30)[::-1].copy()
        a = synth_matrix(SpectrumSpec(sigma=sigma, m=50, n=30, seed=10))
        sig_ref, _, _ = jacobi_svd(a.to_dense())
        smallest3 = np.sort(sig_ref)[:3]
        op = make_augmented_operator(SvdOperator.wrap(a))
        shifts = (smallest3 * (1.0 - 1e-3)).tolist()
        res = eig_solve(op, EigConfig(num_evals=3, target="closest_geq",
                                      shifts=shifts, locking=True,
                                      extraction="refined_const_shift",
                                      max_basis_size=35, min_restart_size=14,
                                      convergence_test=_tol_test(1e-9),
                                      seed=11),
                        est_mode="augmented")
        assert res.converged.all()
        # locked in ascending shift order, each matching +sigma (never
        # -sigma, never a zero of the stacked operator's null space)
        assert np.abs(res.eigenvalues - smallest3).max() <= 1e-8

    def test_refined_candidate_minimizes_shifted_norm(self):
        sigma = np.geomspace(0.1, 1.0, 25)[::-1].copy()
        a = synth_matrix(SpectrumSpec(sigma=sigma, m=45, n=25, seed=12))
        op = make_augmented_operator(SvdOperator.wrap(a))
        smallest = float(np.min(sigma))
        samples = {"count": 0}

        def hook(solver, info):
            if info["y_refined"] is None or solver.q is None:
                return
            g = solver.g
            shifted = solver.w[:, :g] - solver.tau * solver.v[:, :g]
            refined_norm = np.linalg.norm(shifted @ info["y_refined"])
            ritz_norms = np.linalg.norm(shifted @ info["rr_coefs"], axis=0)
            assert refined_norm <= ritz_norms.min() * (1.0 + 1e-10) + 1e-14
            samples["count"] += 1
            if samples["count"] >= 10:
                raise Stop

        cfg = EigConfig(num_evals=1, target="closest_geq",
                        shifts=[smallest * (1.0 - 1e-4)], locking=True,
                        extraction="refined_const_shift",
                        max_basis_size=20, min_restart_size=8,
                        convergence_test=_NEVER, practical_test=_NEVER,
                        iteration_hook=hook, seed=13)
        with pytest.raises(Stop):
            eig_solve(op, cfg, est_mode="augmented")
        assert samples["count"] >= 10


class TestTermination:
    def test_budget_exhaustion_returns_partial(self):
        rng = np.random.default_rng(31)
        a = rng.standard_normal((200, 200))
        a = a + a.T
        res = eig_solve(_dense_op(a),
                        EigConfig(num_evals=4, target="largest_algebraic",
                                  max_basis_size=12, min_restart_size=5,
                                  convergence_test=_tol_test(1e-13),
                                  max_matvecs=40, seed=14))
        assert res.status == "budget"
        # the exit pass recomputes the returned pairs' products honestly,
        # so the count may exceed the cap by at most num_evals
        assert res.stats.matvecs <= 40 + 4
        assert not res.converged.all()

    def test_zero_budget_with_refined_guesses_returns_empty(self):
        # a budget exhausted before the first basis product leaves nothing
        # to factorize; the run must end as a partial result, not crash in
        # the refined-extraction machinery
        sigma = np.geomspace(0.1, 1.0, 25)[::-1].copy()
        a = synth_matrix(SpectrumSpec(sigma=sigma, m=45, n=25, seed=18))
        op = make_augmented_operator(SvdOperator.wrap(a))
        guess = np.zeros((70, 1), order="F")
        guess[0, 0] = 1.0
        res = eig_solve(op, EigConfig(num_evals=1, target="closest_geq",
                                      shifts=[float(sigma.min())],
                                      locking=True,
                                      extraction="refined_const_shift",
                                      convergence_test=_tol_test(1e-9),
                                      max_matvecs=0, seed=18),
                        guesses=guess, est_mode="augmented")
        assert res.status == "budget"
        assert not res.converged.any()

    def test_practical_floor_exit_flags_unconverged(self):
        d = np.arange(1.0, 51.0)
        res = eig_solve(_diag_op(d),
                        EigConfig(num_evals=1, target="largest_algebraic",
                                  max_basis_size=12, min_restart_size=5,
                                  convergence_test=_NEVER, seed=15))
        assert res.status == "ok"
        assert not res.converged.any()
        # the returned residual actually sits at the working-precision floor
        assert res.residual_norms[0] <= 100.0 * EPS * 50.0

    def test_stagnation_detected(self):
        d = np.arange(1.0, 31.0)
        res = eig_solve(_diag_op(d),
                        EigConfig(num_evals=1, target="largest_algebraic",
                                  max_basis_size=8, min_restart_size=3,
                                  convergence_test=_NEVER,
                                  practical_test=_NEVER,
                                  stagnation_window=40, seed=16))
        assert res.status == "stagnated"

    def test_basis_collapse_raises_after_retries(self):
        d = np.arange(1.0, 31.0)
        fixed = np.zeros((30, 1), order="F")
        fixed[0, 0] = 1.0
        pre = Preconditioner(
            "AtA", lambda block: np.tile(fixed, (1, block.shape[1])))
        with pytest.raises(BasisCollapseError):
            eig_solve(_diag_op(d),
                      EigConfig(num_evals=1, target="largest_algebraic",
                                max_basis_size=8, min_restart_size=3,
                                convergence_test=_NEVER,
                                practical_test=_NEVER, seed=17),
                      guesses=np.asfortranarray(fixed), precond=pre)


class TestConfigValidation:
    def test_interior_requires_locking(self):
        cfg = EigConfig(num_evals=1, target="closest_geq", shifts=[1.0],
                        locking=False)
        with pytest.raises(ValueError):
            cfg.validate(100)

    def test_refined_requires_interior(self):
        cfg = EigConfig(num_evals=1, target="largest_algebraic",
                        extraction="refined_const_shift")
        with pytest.raises(ValueError):
            cfg.validate(100)

    def test_restart_size_budget(self):
        cfg = EigConfig(num_evals=1, target="largest_algebraic",
                        max_basis_size=10, min_restart_size=9, plus_k=1)
        with pytest.raises(ValueError):
            cfg.validate(100)

    def test_unknown_target_rejected(self):
        with pytest.raises(ValueError):
            EigConfig(num_evals=1, target="weirdest").validate(10)
