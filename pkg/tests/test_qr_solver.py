import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from attrition_pqr.errors import SolverError
from attrition_pqr.qr import (WqrProblem, assemble_problem, assemble_wpqr, check_loss,
                              estimating_equation, influence, solve, solve_enumerate,
                              subgradient_slack)
from attrition_pqr.propensity import PropensityFit, Mechanism

from conftest import make_panel


def brute_force_objective(problem):
    """Independent oracle: best objective over all basic solutions."""
    X = problem.design_matrix()
    y = problem.response
    w = problem.weight
    taur = problem.tau_rows()
    m = X.shape[1]
    best = np.inf
    for subset in itertools.combinations(range(X.shape[0]), m):
        sub = X[list(subset)]
        try:
            theta = np.linalg.solve(sub, y[list(subset)])
        except np.linalg.LinAlgError:
            continue
        if not np.all(np.isfinite(theta)):
            continue
        r = y - X @ theta
        obj = float(np.sum(w * r * (taur - (r < 0))))
        best = min(best, obj)
    return best


class TestCheckLoss:
    def test_examples(self):
        assert check_loss(2, 0.5) == pytest.approx(1.0)
        assert check_loss(-1, 0.25) == pytest.approx(0.75)
        assert check_loss(0, 0.9) == 0.0

    def test_nonnegative_zero_only_at_zero(self):
        u = np.linspace(-3, 3, 41)
        vals = check_loss(u, 0.3)
        assert np.all(vals >= 0)
        assert np.all((vals == 0) == (u == 0))

    def test_tau_domain(self):
        with pytest.raises(ValueError):
            check_loss(1.0, 0.0)
        with pytest.raises(ValueError):
            influence(1.0, 1.0)


class TestInfluence:
    def test_examples(self):
        assert influence(-3, 0.5) == pytest.approx(-0.5)
        assert influence(4, 0.25) == pytest.approx(0.25)
        # strict inequality in the indicator: value tau at zero
        assert influence(0, 0.7) == pytest.approx(0.7)


class TestSolve:
    def test_intercept_median(self):
        prob = WqrProblem.from_rows(
            [([1.0], 1.0, 1.0), ([1.0], 2.0, 1.0), ([1.0], 9.0, 1.0)], tau=0.5)
        sol = solve(prob)
        assert sol.coefficients[0] == pytest.approx(2.0, abs=1e-6)

    def test_weighted_median(self):
        # 3 * rho(0) + 1 * rho(1) = 0.5 beats 3 * rho(-1) + 0 = 1.5
        prob = WqrProblem.from_rows([([1.0], 0.0, 3.0), ([1.0], 1.0, 1.0)], tau=0.5)
        sol = solve(prob, tol=1e-12)
        assert sol.coefficients[0] == pytest.approx(0.0, abs=1e-8)
        assert sol.objective == pytest.approx(0.5, abs=1e-8)

    def test_scale_equivariance(self):
        rng = np.random.default_rng(1)
        X = np.column_stack([np.ones(30), rng.normal(size=30)])
        y = rng.normal(size=30)
        w = rng.uniform(0.5, 2.0, 30)
        a = solve(WqrProblem(dense=X, response=y, weight=w, tau=0.3), tol=1e-11)
        b = solve(WqrProblem(dense=X, response=7.0 * y, weight=w, tau=0.3), tol=1e-11)
        assert np.allclose(7.0 * a.coefficients, b.coefficients, atol=1e-6)

    def test_weight_invariance(self):
        rng = np.random.default_rng(2)
        X = np.column_stack([np.ones(25), rng.normal(size=25)])
        y = rng.normal(size=25)
        w = rng.uniform(0.5, 2.0, 25)
        a = solve(WqrProblem(dense=X, response=y, weight=w, tau=0.6), tol=1e-11)
        b = solve(WqrProblem(dense=X, response=y, weight=3.5 * w, tau=0.6), tol=1e-11)
        assert np.allclose(a.coefficients, b.coefficients, atol=1e-7)
        assert b.objective == pytest.approx(3.5 * a.objective, rel=1e-7)

    def test_fraction_property(self):
        rng = np.random.default_rng(3)
        for tau in (0.25, 0.5, 0.8):
            n = 60
            X = np.column_stack([np.ones(n), rng.normal(size=n)])
            y = rng.normal(size=n)
            sol = solve(WqrProblem(dense=X, response=y, weight=np.ones(n), tau=tau))
            r = sol.residuals
            ztol = 1e-6 * max(1.0, np.abs(y).max())
            assert np.sum(r < -ztol) <= tau * n
            assert np.sum(r > ztol) <= (1 - tau) * n

    def test_unidentified_column(self):
        X = np.column_stack([np.ones(5), np.zeros(5)])
        prob = WqrProblem(dense=X, response=np.arange(5.0), weight=np.ones(5), tau=0.5)
        with pytest.raises(SolverError) as err:
            solve(prob)
        assert err.value.column == 1

    def test_non_convergence_raises(self):
        rng = np.random.default_rng(4)
        X = np.column_stack([np.ones(50), rng.normal(size=50)])
        prob = WqrProblem(dense=X, response=rng.normal(size=50),
                          weight=np.ones(50), tau=0.5)
        with pytest.raises(SolverError, match="convergence"):
            solve(prob, max_iter=1, tol=1e-14)

    def test_invalid_problem_rejected(self):
        with pytest.raises(ValueError):
            WqrProblem(dense=np.ones((2, 1)), response=np.zeros(2),
                       weight=np.zeros(2), tau=0.5)
        with pytest.raises(ValueError):
            WqrProblem(dense=np.ones((2, 1)), response=np.zeros(2),
                       weight=np.ones(2), tau=1.0)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10_000))
    def test_subgradient_optimality(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(5, 40))
        p = int(rng.integers(1, 4))
        X = rng.normal(size=(n, p))
        X[:, 0] = 1.0
        y = rng.normal(scale=2.0, size=n)
        w = rng.uniform(0.2, 3.0, n)
        tau = float(rng.uniform(0.1, 0.9))
        prob = WqrProblem(dense=X, response=y, weight=w, tau=tau)
        sol = solve(prob, tol=1e-10, max_iter=300)
        lhs, rhs = subgradient_slack(prob, sol.coefficients, ztol=1e-5)
        assert np.all(lhs <= rhs + 1e-4 * (1 + np.abs(y).max()))


class TestOracleEquivalence:
    def test_small_problems_match_enumeration(self):
        rng = np.random.default_rng(17)
        for _ in range(120):
            p = int(rng.integers(1, 3))
            n = int(rng.integers(p + 1, 9))
            X = rng.normal(size=(n, p))
            if rng.random() < 0.5:
                X[:, 0] = 1.0
            y = rng.normal(scale=3.0, size=n)
            w = rng.uniform(0.1, 3.0, n)
            tau = float(rng.uniform(0.05, 0.95))
            prob = WqrProblem(dense=X, response=y, weight=w, tau=tau)
            ip = solve(prob, tol=1e-12, max_iter=300)
            assert abs(ip.objective - brute_force_objective(prob)) < 1e-8

    def test_library_enumeration_agrees(self):
        rng = np.random.default_rng(23)
        X = rng.normal(size=(6, 2))
        y = rng.normal(size=6)
        prob = WqrProblem(dense=X, response=y, weight=np.ones(6), tau=0.4)
        en = solve_enumerate(prob)
        assert en.objective == pytest.approx(brute_force_objective(prob), abs=1e-12)


class TestAssemble:
    def make_pi(self, n, t_len, value=1.0):
        pi = np.full((n, t_len), value)
        pi[:, 0] = 1.0
        return PropensityFit(mechanism=Mechanism.UNFEASIBLE, gamma={}, pi=pi,
                             cond_pi=pi.copy(), floor=0.01, loglik=0.0, iterations=0)

    def test_counts_fully_observed(self):
        ds = make_panel(np.arange(4.0).reshape(2, 2), np.ones((2, 2), dtype=np.int8))
        prob = assemble_wpqr(ds, self.make_pi(2, 2), tau=0.5, lam=1.0)
        assert prob.n_rows == 6
        assert prob.is_penalty.sum() == 2
        assert np.all(prob.weight[~prob.is_penalty] == 1.0)
        assert np.all(prob.weight[prob.is_penalty] == 2.0)

    def test_missing_cell_omitted(self):
        mask = np.array([[1, 1], [1, 0]], dtype=np.int8)
        ds = make_panel(np.arange(4.0).reshape(2, 2), mask)
        prob = assemble_wpqr(ds, self.make_pi(2, 2), tau=0.5, lam=1.0)
        assert (~prob.is_penalty).sum() == 3

    def test_huge_lambda_zeroes_effects(self):
        rng = np.random.default_rng(8)
        n, t_len = 12, 4
        resp = rng.normal(size=(n, t_len)) + rng.normal(size=(n, 1))
        ds = make_panel(resp, np.ones((n, t_len), dtype=np.int8),
                        x=rng.normal(size=(n, t_len)))
        prob = assemble_wpqr(ds, self.make_pi(n, t_len), tau=0.5, lam=1e6)
        sol = solve(prob)
        alpha = sol.coefficients[prob.n_dense:]
        assert np.all(alpha == 0.0)

    def test_lambda_must_be_positive(self):
        ds = make_panel(np.arange(4.0).reshape(2, 2), np.ones((2, 2), dtype=np.int8))
        with pytest.raises(ValueError):
            assemble_wpqr(ds, self.make_pi(2, 2), tau=0.5, lam=0.0)

    def test_monotone_penalty_path(self):
        rng = np.random.default_rng(9)
        n, t_len = 20, 5
        alpha_true = rng.normal(size=(n, 1))
        resp = alpha_true + rng.normal(size=(n, t_len))
        ds = make_panel(resp, np.ones((n, t_len), dtype=np.int8),
                        x=rng.normal(size=(n, t_len)))
        weights = ds.mask.astype(float)
        norms = []
        for lam in (0.25, 0.5, 1.0, 2.0, 4.0, 8.0):
            prob = assemble_problem(ds, weights, 0.5, lam, intercept=True,
                                    subjects=True, penalty_tau=0.5, penalty_scale=2.0)
            sol = solve(prob, tol=1e-10)
            norms.append(np.abs(sol.coefficients[prob.n_dense:]).sum())
        assert all(b <= a + 1e-6 for a, b in zip(norms, norms[1:]))


class TestEstimatingEquation:
    def test_at_solution_within_slack(self):
        prob = WqrProblem.from_rows(
            [([1.0], 1.0, 1.0), ([1.0], 2.0, 1.0), ([1.0], 9.0, 1.0)], tau=0.5)
        sol = solve(prob)
        m = estimating_equation(prob, sol.coefficients)
        assert abs(m[0]) <= prob.weight.max() / prob.nt_norm + 1e-9

    def test_all_positive_responses(self):
        prob = WqrProblem.from_rows(
            [([1.0], 1.0, 1.0), ([1.0], 2.0, 1.0), ([1.0], 3.0, 1.0),
             ([1.0], 4.0, 1.0)], tau=0.5)
        m = estimating_equation(prob, np.zeros(1))
        assert m[0] == pytest.approx(-0.5)

    def test_perturbation_flips_sign(self):
        prob = WqrProblem.from_rows(
            [([1.0], 1.0, 1.0), ([1.0], 2.0, 1.0), ([1.0], 9.0, 1.0)], tau=0.5)
        sol = solve(prob)
        up = estimating_equation(prob, sol.coefficients + 0.5)
        down = estimating_equation(prob, sol.coefficients - 0.5)
        assert up[0] > 0 > down[0]

    def test_penalty_sign_convention(self):
        # one data row, one penalty row; alpha > 0 at the evaluation point
        prob = WqrProblem(dense=np.array([[1.0], [0.0]]),
                          response=np.array([2.0, 0.0]),
                          weight=np.array([1.0, 3.0]), tau=0.7,
                          subject=np.array([0, 0]), n_subjects=1,
                          is_penalty=np.array([False, True]))
        coef = np.array([0.0, 1.0])
        m = estimating_equation(prob, coef)
        # data part: -(1/1) * 1 * psi(2 - 1) = -0.7; penalty part: +3 * psi(1) = +2.1
        assert m[1] == pytest.approx(-0.7 + 3 * 0.7)
