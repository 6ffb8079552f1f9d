import numpy as np
import pytest

from attrition_pqr.dgp import DesignConfig, generate
from attrition_pqr.estimators import (EstimatorKind, EstimatorSpec, estimate,
                                      estimate_multi_tau, sandwich_covariance)
from attrition_pqr.propensity import Mechanism, PropensityFit, build_first_stage

from conftest import make_panel


def unit_propensity(n, t_len):
    pi = np.ones((n, t_len))
    return PropensityFit(mechanism=Mechanism.UNFEASIBLE, gamma={}, pi=pi,
                         cond_pi=pi.copy(), floor=0.01, loglik=0.0, iterations=0)


@pytest.fixture(scope="module")
def sim_panel():
    gen = generate(DesignConfig.design("d3", 60, 5, seed=77))
    return gen.dataset


class TestEstimate:
    def test_weighted_equals_unweighted_at_unit_pi(self, sim_panel):
        prop = unit_propensity(sim_panel.n_subjects, sim_panel.n_periods)
        for weighted, plain in (("wfe", "fe"), ("wpqr", "pqr"), ("wqr", "qr")):
            lam = 1.0 if plain == "pqr" else None
            fw = estimate(sim_panel, EstimatorSpec(kind=weighted, tau=0.5, lambda_=lam),
                          propensity=prop)
            fp = estimate(sim_panel, EstimatorSpec(kind=plain, tau=0.5, lambda_=lam))
            assert np.array_equal(fw.vartheta, fp.vartheta)

    def test_location_equivariance(self, sim_panel):
        fit = estimate(sim_panel, EstimatorSpec(kind="pqr", tau=0.5, lambda_=1.0))
        shifted_resp = sim_panel.response + 5.0
        ds2 = make_panel(shifted_resp, sim_panel.mask, x=sim_panel.covars[:, :, 1])
        fit2 = estimate(ds2, EstimatorSpec(kind="pqr", tau=0.5, lambda_=1.0))
        i_const = fit.param_names.index("const")
        i_x = fit.param_names.index("x1")
        assert fit2.vartheta[i_const] - fit.vartheta[i_const] == pytest.approx(5.0, abs=1e-5)
        assert fit2.vartheta[i_x] == pytest.approx(fit.vartheta[i_x], abs=1e-6)

    def test_fe_has_no_intercept(self, sim_panel):
        fit = estimate(sim_panel, EstimatorSpec(kind="fe", tau=0.5))
        assert "const" not in fit.param_names
        fit_p = estimate(sim_panel, EstimatorSpec(kind="pqr", tau=0.5, lambda_=1.0))
        assert "const" in fit_p.param_names
        assert fit.alpha is not None and fit.alpha.shape == (sim_panel.n_subjects,)

    def test_penalized_requires_lambda(self, sim_panel):
        with pytest.raises(ValueError, match="lambda"):
            estimate(sim_panel, EstimatorSpec(kind="pqr", tau=0.5))

    def test_weighted_requires_propensity(self, sim_panel):
        with pytest.raises(ValueError, match="first-stage"):
            estimate(sim_panel, EstimatorSpec(kind="wqr", tau=0.5))

    def test_residuals_on_observed_cells(self, sim_panel):
        fit = estimate(sim_panel, EstimatorSpec(kind="qr", tau=0.5))
        assert np.all(np.isnan(fit.residuals[sim_panel.mask == 0]))
        assert np.all(np.isfinite(fit.residuals[sim_panel.mask == 1]))


class TestMultiTau:
    def test_single_tau_matches_wpqr(self, sim_panel):
        # lam |a| with lam = T/2 equals the single-quantile penalty
        # T * lam' * rho_{1/2}(a) at lam' = 1 up to the penalty form identity
        t_len = sim_panel.n_periods
        multi = estimate_multi_tau(
            sim_panel, EstimatorSpec(kind="wpqr", tau=(0.5,), lambda_=t_len / 2.0,
                                     tau_weights=(1.0,)),
            propensity=unit_propensity(sim_panel.n_subjects, t_len))
        # the single-tau problem normalizes the data rows identically
        single = estimate(sim_panel, EstimatorSpec(kind="pqr", tau=0.5, lambda_=t_len / 2.0))
        assert np.allclose(multi.vartheta[0], single.vartheta, atol=1e-6)

    def test_equal_weights_default(self, sim_panel):
        fit = estimate_multi_tau(sim_panel,
                                 EstimatorSpec(kind="pqr", tau=(0.25, 0.5, 0.75),
                                               lambda_=1.0))
        assert fit.tau_weights == pytest.approx((1 / 3, 1 / 3, 1 / 3))
        assert fit.vartheta.shape == (3, 2)
        assert fit.alpha.shape == (sim_panel.n_subjects,)

    def test_large_lambda_gives_pooled_slopes(self, sim_panel):
        taus = (0.25, 0.75)
        multi = estimate_multi_tau(sim_panel,
                                   EstimatorSpec(kind="pqr", tau=taus, lambda_=1e6))
        assert np.all(multi.alpha == 0.0)
        for j, tau in enumerate(taus):
            pooled = estimate(sim_panel, EstimatorSpec(kind="qr", tau=tau))
            assert np.allclose(multi.vartheta[j], pooled.vartheta, atol=1e-4)


class TestSandwich:
    def test_shape_and_psd(self, sim_panel):
        fit = estimate(sim_panel, EstimatorSpec(kind="pqr", tau=0.5, lambda_=1.0))
        cov = sandwich_covariance(fit, sim_panel)
        assert cov.shape == (2, 2)
        assert np.allclose(cov, cov.T)
        assert np.linalg.eigvalsh(cov).min() >= -1e-10
        assert fit.covariance is cov

    def test_pooled_kind_rejected(self, sim_panel):
        fit = estimate(sim_panel, EstimatorSpec(kind="qr", tau=0.5))
        with pytest.raises(ValueError):
            sandwich_covariance(fit, sim_panel)

    def test_weighted_needs_stage(self, sim_panel):
        prop = build_first_stage(sim_panel, Mechanism.MAR)
        fit = estimate(sim_panel, EstimatorSpec(kind="wfe", tau=0.5), propensity=prop)
        with pytest.raises(ValueError):
            sandwich_covariance(fit, sim_panel)
        cov = sandwich_covariance(fit, sim_panel, pi_hat=prop)
        assert np.isfinite(cov).all()

    def test_variance_shrinks_with_t(self):
        # sampling variance of the slope drops roughly like 1/T
        slopes = {}
        for t_len in (5, 25):
            vals = []
            for rep in range(60):
                gen = generate(DesignConfig.design("d5", 120, t_len, seed=900 + rep))
                fit = estimate(gen.dataset,
                               EstimatorSpec(kind="pqr", tau=0.5, lambda_=1.0))
                vals.append(fit.coef("x1"))
            slopes[t_len] = np.var(vals)
        ratio = slopes[25] / slopes[5]
        assert 0.12 < ratio < 0.35
