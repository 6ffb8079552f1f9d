"""Tuning-parameter selection for the penalized estimators.

Two rules are provided.  The robust rule simulates the supremum statistic

    L = max_j | sum_it w_it (X_j,it / sd_j) (tau - 1{u_it <= tau}) | / s_j,

with u_it i.i.d. uniform and independent of the design, w_it the
inverse-probability weights, and s_j the standard deviation of column j's
weighted sum (self-normalization, which keeps the supremum pivotal under
any attrition pattern).  The maximum runs over all p + N design columns,
incidence columns included.  The selected level is

    lambda = kappa * sqrt(tau (1 - tau)) * sqrt(T) * sd_z
             * Q_{1-c}(L / sqrt(tau (1 - tau))),

where sd_z is the binary standard deviation of an incidence column; the
anchor equals the scale of the unstandardized T * max |(1/NT) sum ...|
statistic on a fully observed panel.  Defaults kappa = 2 and c = 0.1.
Because the weights enter the statistic, the selected value is
insensitive to the attrition level.

The MLE rule fits a Gaussian one-way random-effects model to the observed
cells by profiled maximum likelihood and returns the ratio of the residual
to the effect standard deviation, capped (with a warning) when the effect
variance degenerates.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .panel import PanelDataset
from .propensity import PropensityFit, inverse_weights

__all__ = ["LambdaMethod", "LambdaChoice", "robust_lambda", "mle_lambda"]


class LambdaMethod(str, enum.Enum):
    ROBUST = "robust"
    MLE_RATIO = "mle"
    FIXED = "fixed"


@dataclass(frozen=True)
class LambdaChoice:
    method: LambdaMethod
    value: float
    kappa: float | None = None
    c: float | None = None
    draws: int | None = None

    def to_jsonable(self) -> dict:
        return {"method": self.method.value, "value": self.value,
                "kappa": self.kappa, "c": self.c, "draws": self.draws}


def _order_quantile(sorted_vals: np.ndarray, q: float) -> float:
    """Lower (order-statistic) empirical quantile."""
    k = int(np.ceil(q * sorted_vals.size))
    return float(sorted_vals[max(k - 1, 0)])


def robust_lambda(dataset: PanelDataset, pi_hat: PropensityFit | None, tau: float,
                  kappa: float = 2.0, c: float = 0.1, draws: int = 1000,
                  seed: int = 0, batch: int = 200) -> LambdaChoice:
    """Simulation-based penalty level, robust to the attrition level.

    ``pi_hat = None`` means unit weights (no attrition correction).  The
    statistic weights observed cells by the per-period conditional staying
    probability (each period's weighted cell count then matches its at-risk
    population), which keeps the supremum statistic bounded under heavy
    attrition.  Reproducible given (seed, draws); simulation runs in
    batches to bound memory.  Column standard deviations are taken over
    the full (i, t) grid; a degenerate non-constant column is an error.
    """
    if not 0.0 < tau < 1.0:
        raise ValueError("tau must lie in (0, 1)")
    if not 0.0 < c < 1.0:
        raise ValueError("c must lie in (0, 1)")
    n, t_len = dataset.n_subjects, dataset.n_periods
    w = (inverse_weights(pi_hat, dataset, conditional=True) if pi_hat is not None
         else dataset.mask.astype(float))
    i_idx, t_idx = dataset.observed_cells()
    w_obs = w[i_idx, t_idx]

    dense_all = np.concatenate([dataset.treat, dataset.covars], axis=2)
    p = dense_all.shape[2]
    sd = dense_all.reshape(-1, p).std(axis=0)
    const = np.all(dense_all == dense_all[:1, :1, :], axis=(0, 1))
    sd = np.where(const, 1.0, sd)
    if np.any(sd == 0.0):
        j = int(np.nonzero(sd == 0.0)[0][0])
        raise ValueError(f"design column {j} is degenerate (zero variance)")
    dense_obs = dense_all[i_idx, t_idx, :] / sd

    # each weighted column sum is studentized by its own standard
    # deviation, which makes the supremum pivotal under any attrition
    # pattern; the sqrt(T) * sd_z anchor restores the scale of the
    # unstandardized statistic on a fully observed panel (sd_z is the
    # binary standard deviation of an incidence column, T ones in NT)
    share = t_len / (n * t_len)
    sd_z = np.sqrt(share * (1.0 - share))
    scale = np.sqrt(tau * (1.0 - tau))
    col_dense = np.sqrt(((w_obs[:, None] * dense_obs) ** 2).sum(axis=0))
    col_dense[col_dense == 0.0] = np.inf
    col_sub = np.sqrt(np.bincount(i_idx, weights=w_obs ** 2, minlength=n))
    col_sub[col_sub == 0.0] = np.inf

    rng = np.random.Generator(np.random.Philox(key=seed))
    sup = np.empty(draws)
    done = 0
    while done < draws:
        b = min(batch, draws - done)
        u = rng.random((b, w_obs.size))
        e = (tau - (u <= tau)) * w_obs
        dense_part = np.abs(e @ dense_obs) / col_dense
        sub_part = np.zeros((b, n))
        for k in range(b):
            sub_part[k] = np.bincount(i_idx, weights=e[k], minlength=n)
        sub_part = np.abs(sub_part) / col_sub
        sup[done:done + b] = np.maximum(dense_part.max(axis=1), sub_part.max(axis=1))
        done += b
    sup.sort()
    # kappa * sqrt(tau(1-tau)) multiplies the statistic, whose psi draws
    # are standardized by the same sqrt(tau(1-tau)); the factors cancel
    anchor = np.sqrt(float(t_len)) * sd_z
    value = kappa * anchor * _order_quantile(sup, 1.0 - c)
    return LambdaChoice(method=LambdaMethod.ROBUST, value=float(value),
                        kappa=kappa, c=c, draws=draws)


def mle_lambda(dataset: PanelDataset, cap: float = 1e3) -> LambdaChoice:
    """Penalty level sigma_u / sigma_alpha from a Gaussian random-effects fit.

    The one-way error-components model y_it = V_it' b + a_i + e_it is fit
    to the observed cells only, profiling the likelihood over the variance
    ratio.  Returns the capped value with a warning when the effect
    variance collapses.
    """
    i_idx, t_idx = dataset.observed_cells()
    counts = np.bincount(i_idx, minlength=dataset.n_subjects)
    if not np.any(counts >= 2):
        raise ValueError("no subject has two or more observed periods")
    y = dataset.response[i_idx, t_idx]
    X = dataset.design_blocks((i_idx, t_idx))
    n_obs = y.size

    order = np.argsort(i_idx, kind="stable")
    i_s, y_s, X_s = i_idx[order], y[order], X[order]
    counts_s = np.bincount(i_s, minlength=dataset.n_subjects)
    keep_sub = counts_s > 0
    t_i = counts_s[keep_sub]
    starts = np.concatenate([[0], np.cumsum(t_i)])[:-1]
    groups = np.repeat(np.arange(t_i.size), t_i)

    def profile_negloglik(log_psi: float) -> float:
        return _profiled(log_psi)[0]

    def _profiled(log_psi: float):
        psi = np.exp(log_psi)
        theta = 1.0 - 1.0 / np.sqrt(1.0 + psi * t_i)
        ybar = np.bincount(groups, weights=y_s) / t_i
        Xbar = np.stack([np.bincount(groups, weights=X_s[:, j]) / t_i
                         for j in range(X_s.shape[1])], axis=1)
        yt = y_s - theta[groups] * ybar[groups]
        Xt = X_s - theta[groups, None] * Xbar[groups]
        beta, *_ = np.linalg.lstsq(Xt, yt, rcond=None)
        resid = yt - Xt @ beta
        sigma2 = float(resid @ resid) / n_obs
        logdet = float(np.sum(np.log1p(psi * t_i)))
        nll = 0.5 * (n_obs * np.log(sigma2) + logdet + n_obs)
        return nll, sigma2, psi

    res = minimize_scalar(profile_negloglik, bounds=(-31.0, 15.0), method="bounded",
                          options={"xatol": 1e-8})
    if not res.success:
        raise RuntimeError("variance-component optimization did not converge")
    _, sigma2_u, psi = _profiled(res.x)
    if psi <= 1.0 / cap ** 2:
        warnings.warn("effect variance is degenerate; lambda capped")
        return LambdaChoice(method=LambdaMethod.MLE_RATIO, value=float(cap))
    return LambdaChoice(method=LambdaMethod.MLE_RATIO,
                        value=float(1.0 / np.sqrt(psi)))
