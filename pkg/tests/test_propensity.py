import numpy as np
import pytest

from attrition_pqr.dgp import DesignConfig, generate
from attrition_pqr.errors import PropensityError, SeparationError
from attrition_pqr.panel import PanelDataset, StreamRecord
from attrition_pqr.propensity import (Mechanism, PropensityFit, build_first_stage,
                                      fit_logit, inverse_weights)

from conftest import make_panel


class TestFitLogit:
    def test_intercept_half(self):
        gamma, _ = fit_logit(np.ones((10, 1)), np.array([1, 0] * 5, dtype=float))
        assert gamma[0] == pytest.approx(0.0, abs=1e-8)

    def test_intercept_three_of_four(self):
        gamma, ll = fit_logit(np.ones((4, 1)), np.array([1.0, 1.0, 1.0, 0.0]))
        assert gamma[0] == pytest.approx(np.log(3.0), abs=1e-6)
        p = 0.75
        assert ll == pytest.approx(4 * (p * np.log(p) + (1 - p) * np.log(1 - p)), rel=1e-6)

    def test_separation_detected(self):
        x = np.linspace(-1, 1, 20)
        F = np.column_stack([np.ones(20), x])
        labels = (x > 0).astype(float)
        with pytest.raises(SeparationError):
            fit_logit(F, labels)

    def test_one_class_rejected(self):
        with pytest.raises(ValueError):
            fit_logit(np.ones((5, 1)), np.ones(5))

    def test_rank_deficiency_rejected(self):
        F = np.column_stack([np.ones(8), np.ones(8)])
        with pytest.raises(ValueError, match="rank"):
            fit_logit(F, np.array([1, 0] * 4, dtype=float))

    def test_recovers_true_coefficients(self):
        rng = np.random.default_rng(0)
        n = 50_000
        F = np.column_stack([np.ones(n), rng.normal(size=n), rng.normal(size=n)])
        gamma_true = np.array([0.4, -0.8, 1.2])
        p = 1.0 / (1.0 + np.exp(-F @ gamma_true))
        labels = (rng.random(n) < p).astype(float)
        gamma, _ = fit_logit(F, labels)
        assert np.max(np.abs(gamma - gamma_true)) < 0.05


class TestBuildFirstStage:
    def test_mcar_matches_retention(self):
        rng = np.random.default_rng(1)
        n, t_len = 4000, 3
        mask = np.ones((n, t_len), dtype=np.int8)
        for t in (1, 2):
            stay = rng.random(n) < 0.9
            mask[:, t] = mask[:, t - 1] * stay
        resp = np.where(mask == 1, rng.normal(size=(n, t_len)), np.nan)
        ds = make_panel(resp, mask)
        fit = build_first_stage(ds, Mechanism.MCAR)
        at_risk = ds.mask[:, 0] == 1
        assert np.allclose(fit.cond_pi[at_risk, 1],
                           ds.mask[at_risk, 1].mean(), atol=1e-9)
        assert fit.cond_pi[at_risk, 1].mean() == pytest.approx(0.9, abs=0.02)
        assert np.all(fit.pi[:, 0] == 1.0)

    def test_fully_observed_probabilities_one(self, small_panel):
        full = make_panel(np.ones((3, 3)), np.ones((3, 3), dtype=np.int8),
                          x=np.arange(9.0).reshape(3, 3))
        for mech in (Mechanism.MCAR, Mechanism.MAR):
            fit = build_first_stage(full, mech)
            assert np.all(fit.pi == 1.0)

    def test_inverse_weight_moment(self):
        # weighted observed cells recover the at-risk population on average
        cfg = DesignConfig.design("d3", 2500, 5, seed=42)
        gen = generate(cfg)
        fit = build_first_stage(gen.dataset, Mechanism.MAR)
        mask = gen.dataset.mask
        ratios = []
        for t in range(1, 5):
            at_risk = mask[:, t - 1] == 1
            ratios.append(np.mean(mask[at_risk, t] / fit.cond_pi[at_risk, t]))
        assert 0.97 <= np.mean(ratios) <= 1.03

    def test_mechanism_nesting_when_selection_ignorable(self):
        # when dropout is unrelated to the responses, both the
        # streaming-backed stage and the observables stage estimate the
        # same staying probability, so their fits converge with n
        diffs = []
        for n in (400, 3000):
            cfg = DesignConfig.design("d6", n, 2, seed=3, rho0=0.0, rho1=0.0,
                                      theta2=0.0, sel_intercept=1.0)
            gen = generate(cfg)
            mar = build_first_stage(gen.dataset, Mechanism.MAR)
            ref = build_first_stage(gen.dataset, Mechanism.HW_STREAM)
            at_risk = gen.dataset.mask[:, 0] == 1
            diffs.append(np.abs(mar.pi[at_risk, 1] - ref.pi[at_risk, 1]).mean())
        assert diffs[1] < diffs[0]
        assert diffs[1] < 0.05

    def test_unfeasible_requires_true_pi(self, small_panel):
        with pytest.raises(PropensityError):
            build_first_stage(small_panel, Mechanism.UNFEASIBLE)

    def test_hw_requires_streaming(self, small_panel):
        with pytest.raises(PropensityError, match="streaming"):
            build_first_stage(small_panel, Mechanism.HW_STREAM)

    def test_hw_missing_coverage(self):
        mask = np.array([[1, 1], [1, 0]], dtype=np.int8)
        ds = make_panel(np.ones((2, 2)), mask)
        ds = PanelDataset(n_subjects=2, n_periods=2, response=ds.response,
                          treat=ds.treat, covars=ds.covars, mask=ds.mask,
                          streaming=(StreamRecord(0, 1.5, 0.3),))
        with pytest.raises(PropensityError, match="streaming record"):
            build_first_stage(ds, Mechanism.HW_STREAM)

    def test_floor_applied(self):
        pi = np.array([[1.0, 0.5], [1.0, 0.001]])
        mask = np.array([[1, 1], [1, 1]], dtype=np.int8)
        ds = make_panel(np.ones((2, 2)), mask)
        fit = build_first_stage(ds, Mechanism.UNFEASIBLE, true_pi=pi, floor=0.01)
        assert fit.pi[1, 1] == pytest.approx(0.01)


class TestInverseWeights:
    def make_fit(self, cond):
        cond = np.asarray(cond, dtype=float)
        pi = np.clip(np.cumprod(cond, axis=1), 0.01, 1.0)
        return PropensityFit(mechanism=Mechanism.UNFEASIBLE, gamma={}, pi=pi,
                             cond_pi=cond, floor=0.01, loglik=0.0, iterations=0)

    def test_unit_probabilities_give_mask(self):
        mask = np.array([[1, 1], [1, 0]], dtype=np.int8)
        ds = make_panel(np.ones((2, 2)), mask)
        w = inverse_weights(self.make_fit(np.ones((2, 2))), ds)
        assert np.array_equal(w, mask.astype(float))

    def test_reciprocal(self):
        mask = np.ones((1, 2), dtype=np.int8)
        ds = make_panel(np.ones((1, 2)), mask)
        w = inverse_weights(self.make_fit([[1.0, 0.5]]), ds)
        assert w[0, 1] == pytest.approx(2.0)

    def test_unobserved_weight_zero(self):
        mask = np.array([[1, 0]], dtype=np.int8)
        ds = make_panel(np.ones((1, 2)), mask)
        w = inverse_weights(self.make_fit([[1.0, 0.5]]), ds)
        assert w[0, 1] == 0.0

    def test_conditional_equals_cumulative_at_t2(self):
        mask = np.ones((3, 2), dtype=np.int8)
        ds = make_panel(np.ones((3, 2)), mask)
        fit = self.make_fit(np.column_stack([np.ones(3), [0.5, 0.8, 0.9]]))
        assert np.allclose(inverse_weights(fit, ds),
                           inverse_weights(fit, ds, conditional=True))
