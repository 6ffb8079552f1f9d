"""Panel quantile estimators and large-sample inference for the slope block.

Six estimator kinds share one solver:

* ``qr`` / ``wqr``   - pooled quantile regression with an intercept, the
                       weighted version reweighting observed cells by the
                       inverse staying probability;
* ``fe`` / ``wfe``   - subject incidence columns, no overall intercept
                       (intercept and effects are not jointly identified),
                       no penalty;
* ``pqr`` / ``wpqr`` - intercept plus incidence columns plus one penalty
                       pseudo-row per subject with weight lambda, which
                       shrinks individual effects and sets some exactly to
                       zero, restoring identification.

``sandwich_covariance`` estimates the limiting covariance
tau (1 - tau) D1^{-1} D0 D1^{-1} of the slope block by plug-in: cell-level
densities at zero via a Gaussian (Powell) kernel on the residuals with a
Hall-Sheather bandwidth, the effect-density at zero via a kernel density
of the fitted effects, and the subject-level correction phi_i = e_i -
lambda * g(0) / T entering both matrices.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import ndtri

from .panel import PanelDataset
from .propensity import PropensityFit, inverse_weights
from .qr import WqrProblem, WqrSolution, assemble_problem, solve

__all__ = [
    "EstimatorKind",
    "EstimatorSpec",
    "QuantileFit",
    "MultiQuantileFit",
    "estimate",
    "estimate_multi_tau",
    "sandwich_covariance",
]


class EstimatorKind(str, enum.Enum):
    QR = "qr"
    WQR = "wqr"
    FE = "fe"
    WFE = "wfe"
    PQR = "pqr"
    WPQR = "wpqr"


_WEIGHTED = {EstimatorKind.WQR, EstimatorKind.WFE, EstimatorKind.WPQR}
_PENALIZED = {EstimatorKind.PQR, EstimatorKind.WPQR}
_WITH_EFFECTS = {EstimatorKind.FE, EstimatorKind.WFE, EstimatorKind.PQR, EstimatorKind.WPQR}


@dataclass(frozen=True)
class EstimatorSpec:
    """What to fit: estimator kind, quantile(s), penalty and first stage."""

    kind: EstimatorKind
    tau: float | tuple
    lambda_: float | None = None
    tau_weights: tuple | None = None
    mechanism: str | None = None
    label: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", EstimatorKind(self.kind))
        if self.kind in _PENALIZED and self.lambda_ is not None and self.lambda_ <= 0:
            raise ValueError("penalized estimators require lambda > 0")
        if self.tau_weights is not None:
            w = np.asarray(self.tau_weights, dtype=float)
            if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
                raise ValueError("tau weights must be nonnegative and sum to 1")

    @property
    def name(self) -> str:
        return self.label or self.kind.value


@dataclass
class QuantileFit:
    """One fitted panel quantile regression."""

    spec: EstimatorSpec
    tau: float
    param_names: list[str]
    vartheta: np.ndarray
    alpha: np.ndarray | None
    residuals: np.ndarray
    lambda_used: float
    objective: float
    iterations: int
    dual_gap: float
    n_obs: int
    covariance: np.ndarray | None = None

    def coef(self, name: str) -> float:
        return float(self.vartheta[self.param_names.index(name)])

    def std_errors(self) -> np.ndarray | None:
        if self.covariance is None:
            return None
        return np.sqrt(np.clip(np.diag(self.covariance), 0.0, None))

    def to_jsonable(self) -> dict:
        se = self.std_errors()
        return {
            "estimator": self.spec.kind.value,
            "tau": self.tau,
            "lambda": self.lambda_used,
            "coefficients": {n: float(v) for n, v in zip(self.param_names, self.vartheta)},
            "std_errors": (None if se is None
                           else {n: float(v) for n, v in zip(self.param_names, se)}),
            "n_obs": self.n_obs,
            "objective": self.objective,
            "iterations": self.iterations,
            "dual_gap": self.dual_gap,
            "n_zero_effects": (None if self.alpha is None
                               else int(np.sum(self.alpha == 0.0))),
        }


@dataclass
class MultiQuantileFit:
    """Joint fit across several quantiles with one shared set of effects."""

    spec: EstimatorSpec
    taus: tuple
    tau_weights: tuple
    param_names: list[str]
    vartheta: np.ndarray  # (J, p)
    alpha: np.ndarray
    lambda_used: float
    objective: float
    iterations: int
    dual_gap: float

    def slopes(self, tau: float) -> np.ndarray:
        return self.vartheta[self.taus.index(tau)]


def _weights_for(dataset: PanelDataset, spec: EstimatorSpec,
                 propensity: PropensityFit | None) -> np.ndarray:
    if spec.kind in _WEIGHTED:
        if propensity is None:
            raise ValueError(f"{spec.kind.value} requires a first-stage propensity fit")
        return inverse_weights(propensity, dataset)
    return dataset.mask.astype(float)


def estimate(dataset: PanelDataset, spec: EstimatorSpec,
             propensity: PropensityFit | None = None,
             **solver_options) -> QuantileFit:
    """Fit one estimator at a single quantile.

    Pooled kinds drop the incidence columns, fixed-effects kinds drop the
    intercept, penalized kinds carry both plus penalty rows with weight
    ``spec.lambda_``.  Weighted kinds reweight rows by the inverse
    cumulative staying probability from ``propensity``.
    """
    if not np.isscalar(spec.tau):
        raise ValueError("estimate() takes a scalar tau; see estimate_multi_tau")
    kind = spec.kind
    lam = spec.lambda_ or 0.0
    if kind in _PENALIZED and lam <= 0:
        raise ValueError(f"{kind.value} requires lambda > 0")
    weights = _weights_for(dataset, spec, propensity)
    # penalized kinds carry the absolute-value penalty lam * |alpha_i|,
    # realized as tau = 1/2 pseudo-rows with weight 2 * lam
    problem = assemble_problem(
        dataset, weights, float(spec.tau),
        lam if kind in _PENALIZED else 0.0,
        intercept=kind not in (EstimatorKind.FE, EstimatorKind.WFE),
        subjects=kind in _WITH_EFFECTS,
        penalty_tau=0.5, penalty_scale=2.0,
    )
    solution = solve(problem, **solver_options)
    p = problem.n_dense
    vartheta = solution.coefficients[:p]
    alpha = solution.coefficients[p:] if kind in _WITH_EFFECTS else None
    i_idx, t_idx = dataset.observed_cells()
    resid = np.full((dataset.n_subjects, dataset.n_periods), np.nan)
    resid[i_idx, t_idx] = solution.residuals[: i_idx.size]
    return QuantileFit(
        spec=spec, tau=float(spec.tau), param_names=problem.names[:p],
        vartheta=vartheta, alpha=alpha, residuals=resid,
        lambda_used=lam if kind in _PENALIZED else 0.0,
        objective=solution.objective, iterations=solution.iterations,
        dual_gap=solution.dual_gap, n_obs=int(i_idx.size))


def estimate_multi_tau(dataset: PanelDataset, spec: EstimatorSpec,
                       propensity: PropensityFit | None = None,
                       **solver_options) -> MultiQuantileFit:
    """Joint fit over a quantile grid with shared individual effects.

    The stacked problem holds one copy of the data rows per quantile
    (weight omega_j times the cell weight, quantile-specific slope block)
    and a single absolute-value penalty on the shared effects, realized as
    tau = 1/2 penalty rows scaled by 2 (|a| = 2 * rho_{1/2}(a)); this keeps
    the problem a linear program.  Equal omega_j = 1/J by default.
    """
    taus = tuple(float(t) for t in np.atleast_1d(spec.tau))
    j_count = len(taus)
    lam = spec.lambda_ or 0.0
    if lam <= 0:
        raise ValueError("the multi-quantile estimator requires lambda > 0")
    omegas = spec.tau_weights or tuple(1.0 / j_count for _ in taus)
    if len(omegas) != j_count:
        raise ValueError("tau_weights must match the quantile grid")
    weights = _weights_for(dataset, spec, propensity)
    i_idx, t_idx = dataset.observed_cells()
    w_cells = weights[i_idx, t_idx]
    dense = np.column_stack([
        dataset.treat[i_idx, t_idx, :], dataset.covars[i_idx, t_idx, :]])
    n_data, p = dense.shape
    n_sub = dataset.n_subjects

    dense_all = np.vstack([np.tile(dense, (j_count, 1)), np.zeros((n_sub, p))])
    resp_all = np.concatenate([np.tile(dataset.response[i_idx, t_idx], j_count),
                               np.zeros(n_sub)])
    weight_all = np.concatenate(
        [np.concatenate([om * w_cells for om in omegas]),
         np.full(n_sub, 2.0 * lam)])
    tau_all = np.concatenate(
        [np.repeat(taus, n_data), np.full(n_sub, 0.5)])
    block_all = np.concatenate(
        [np.repeat(np.arange(j_count), n_data), np.zeros(n_sub, dtype=int)])
    subject_all = np.concatenate(
        [np.tile(i_idx.astype(np.int64), j_count), np.arange(n_sub, dtype=np.int64)])
    pen_all = np.concatenate([np.zeros(j_count * n_data, bool), np.ones(n_sub, bool)])
    names = [f"d{j + 1}" for j in range(dataset.n_treat)] + ["const"] \
        + [f"x{j + 1}" for j in range(dataset.n_covars - 1)]

    problem = WqrProblem(dense=dense_all, response=resp_all, weight=weight_all,
                         tau=tau_all, subject=subject_all, block=block_all,
                         n_blocks=j_count, n_subjects=n_sub, is_penalty=pen_all,
                         nt_norm=float(dataset.n_subjects * dataset.n_periods),
                         names=None)
    solution = solve(problem, **solver_options)
    vartheta = solution.coefficients[: j_count * p].reshape(j_count, p)
    alpha = solution.coefficients[j_count * p:]
    return MultiQuantileFit(spec=spec, taus=taus, tau_weights=tuple(omegas),
                            param_names=names, vartheta=vartheta, alpha=alpha,
                            lambda_used=lam, objective=solution.objective,
                            iterations=solution.iterations,
                            dual_gap=solution.dual_gap)


def _hall_sheather(tau: float, n: int) -> float:
    z = ndtri(0.975)
    num = 1.5 * float(np.exp(-0.5 * ndtri(tau) ** 2) / np.sqrt(2 * np.pi)) ** 2
    den = 2.0 * ndtri(tau) ** 2 + 1.0
    return n ** (-1.0 / 3.0) * z ** (2.0 / 3.0) * (num / den) ** (1.0 / 3.0)


def _bofinger(tau: float, n: int) -> float:
    phi = float(np.exp(-0.5 * ndtri(tau) ** 2) / np.sqrt(2 * np.pi))
    return n ** (-0.2) * ((4.5 * phi ** 4) / (2 * ndtri(tau) ** 2 + 1) ** 2) ** 0.2


_BANDWIDTHS = {"hall-sheather": _hall_sheather, "bofinger": _bofinger}


def sandwich_covariance(fit: QuantileFit, dataset: PanelDataset,
                        pi_hat: PropensityFit | None = None,
                        bandwidth_rule: str = "hall-sheather") -> np.ndarray:
    """Plug-in covariance of the slope block, tau(1-tau) D1^-1 D0 D1^-1 / NT.

    Cell densities f_i(0|X) come from a Gaussian kernel on the residuals
    with the requested bandwidth rule; the effect density at zero from a
    Gaussian kernel density of the fitted effects (Silverman bandwidth).
    Requires a fit with incidence columns (fe/wfe/pqr/wpqr); weighted kinds
    must pass the same first stage that produced the fit.
    """
    kind = fit.spec.kind
    if kind not in _WITH_EFFECTS:
        raise ValueError("sandwich covariance is defined for fe/wfe/pqr/wpqr fits")
    if kind in _WEIGHTED and pi_hat is None:
        raise ValueError("weighted fits need the first-stage probabilities")
    tau = fit.tau
    n, t_len = dataset.n_subjects, dataset.n_periods
    w = (inverse_weights(pi_hat, dataset) if kind in _WEIGHTED
         else dataset.mask.astype(float))
    intercept = kind in _PENALIZED
    covars = dataset.covars if intercept else dataset.covars[:, :, 1:]
    V = np.concatenate([dataset.treat, covars], axis=2)
    p = V.shape[2]

    r = fit.residuals[dataset.mask == 1]
    n_obs = r.size
    bw = _BANDWIDTHS[bandwidth_rule](tau, n_obs)
    lo, hi = max(tau - bw, 1e-4), min(tau + bw, 1 - 1e-4)
    iqr = np.subtract(*np.percentile(r, [75, 25]))
    spread = min(float(np.std(r)), float(iqr) / 1.34) or 1.0
    h = (ndtri(hi) - ndtri(lo)) * spread
    fgrid = np.zeros((n, t_len))
    obs = dataset.mask == 1
    fgrid[obs] = np.exp(-0.5 * (fit.residuals[obs] / h) ** 2) / (h * np.sqrt(2 * np.pi))

    fw = fgrid * w
    E = np.einsum("nt,ntp->np", fw, V) / t_len
    e = fw.sum(axis=1) / t_len
    # the Hessian block carries the weight once (Jacobian of the weighted
    # score); the squared weight belongs to the score variance D0 only
    Jmat = np.einsum("nt,ntp,ntq->npq", fw, V, V) / t_len

    lam = fit.lambda_used
    g0 = 0.0
    if lam > 0 and fit.alpha is not None:
        a = fit.alpha
        sd = float(np.std(a))
        iqr_a = float(np.subtract(*np.percentile(a, [75, 25])))
        ha = 0.9 * min(sd, iqr_a / 1.34 if iqr_a > 0 else np.inf) * n ** (-0.2)
        if not np.isfinite(ha) or ha <= 0:
            warnings.warn("degenerate effect distribution; penalty correction dropped")
        else:
            g0 = float(np.mean(np.exp(-0.5 * (a / ha) ** 2)) / (ha * np.sqrt(2 * np.pi)))
    phi = e - lam * g0 / t_len
    # a nonpositive phi marks a subject whose effect the penalty pins at
    # zero (sparsely observed relative to lambda): no estimation feedback
    pinned = phi <= 0.05 * e
    phi_safe = np.where(pinned, 1.0, phi)
    m = np.where(pinned[:, None], 0.0, E / phi_safe[:, None])
    D1 = (Jmat - np.einsum("np,nq->npq", E, m)).mean(axis=0)
    D1 = 0.5 * (D1 + D1.T)
    Vt = V * w[:, :, None]
    centered = Vt - m[:, None, :]
    D0 = np.einsum("ntp,ntq->pq", centered, centered) / (n * t_len)
    D0 = D0 - (lam ** 2 / t_len) * (m.T @ m) / n
    D0 = 0.5 * (D0 + D0.T)
    try:
        D1inv = np.linalg.inv(D1)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError("singular D1 matrix in sandwich covariance") from exc
    cov = tau * (1.0 - tau) * D1inv @ D0 @ D1inv / (n * t_len)
    cov = 0.5 * (cov + cov.T)
    fit.covariance = cov
    return cov
