"""First-stage estimation of staying probabilities under different attrition models.

For each period t >= 2 a logit of the staying indicator on a
mechanism-specific feature set is fitted over the at-risk subjects (those
still in the panel at t-1):

* ``mcar``       - intercept only (dropout unrelated to anything),
* ``mar``        - lagged response plus current covariates (selection on
                   observables),
* ``hw_stream``  - the current response where observed and the nearest
                   streaming measurement where not, plus subject-average
                   covariates (selection on unobservables backed by a
                   streaming sample),
* ``unfeasible`` - externally supplied true per-period probabilities, used
                   to benchmark the feasible estimators in simulations.

The per-period conditional probabilities are floored, composed into
cumulative staying probabilities, and the inverse-probability weights are
s_it divided by the cumulative probability.  A flag switches to
per-period-conditional weighting, which coincides with the cumulative
convention when T = 2.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import PropensityError, SeparationError
from .panel import PanelDataset

__all__ = [
    "Mechanism",
    "PropensityFit",
    "fit_logit",
    "build_first_stage",
    "inverse_weights",
]

_GAMMA_BOUND = 30.0


class Mechanism(str, enum.Enum):
    MCAR = "mcar"
    MAR = "mar"
    HW_STREAM = "hw_stream"
    UNFEASIBLE = "unfeasible"


@dataclass
class PropensityFit:
    """First-stage output.

    ``pi`` holds the cumulative staying probabilities (product of the
    per-period conditional probabilities up to t), ``cond_pi`` the
    conditional ones; both are floored at ``floor`` and equal 1 in the
    first period.  ``gamma`` maps period index t (0-based, t >= 1) to the
    fitted logit coefficients for that period (None where the fit was
    degenerate, e.g. no dropouts).
    """

    mechanism: Mechanism
    gamma: dict[int, np.ndarray | None]
    pi: np.ndarray
    cond_pi: np.ndarray
    floor: float
    loglik: float
    iterations: int

    def to_jsonable(self) -> dict:
        return {
            "mechanism": self.mechanism.value,
            "floor": self.floor,
            "loglik": self.loglik,
            "iterations": self.iterations,
            "gamma": {str(t): (None if g is None else list(map(float, g)))
                      for t, g in self.gamma.items()},
        }


def _sigmoid(v):
    out = np.empty_like(v)
    pos = v >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-v[pos]))
    ev = np.exp(v[~pos])
    out[~pos] = ev / (1.0 + ev)
    return out


def fit_logit(features: np.ndarray, labels: np.ndarray, *, tol: float = 1e-8,
              max_iter: int = 60) -> tuple[np.ndarray, float]:
    """Maximum-likelihood logit via Newton-Raphson.

    Requires at least one positive and one negative label and a
    full-column-rank feature matrix.  Convergence is declared when the
    score norm falls below ``tol``.  Divergence of the coefficient norm is
    reported as ``SeparationError`` (the MLE does not exist under complete
    separation).
    """
    F = np.atleast_2d(np.asarray(features, dtype=float))
    y = np.asarray(labels, dtype=float).reshape(F.shape[0])
    if not (np.any(y == 1.0) and np.any(y == 0.0)):
        raise ValueError("labels must include at least one 0 and one 1")
    if np.linalg.matrix_rank(F) < F.shape[1]:
        raise ValueError("feature matrix is rank deficient")
    scale = F.std(axis=0)
    scale[scale == 0] = 1.0
    gamma = np.zeros(F.shape[1])
    for it in range(1, max_iter + 1):
        eta = F @ gamma
        p = _sigmoid(eta)
        grad = F.T @ (y - p)
        if np.max(np.abs(grad)) < tol:
            break
        wdiag = np.maximum(p * (1.0 - p), 1e-10)
        H = F.T @ (F * wdiag[:, None])
        try:
            step = np.linalg.solve(H, grad)
        except np.linalg.LinAlgError as exc:
            raise ValueError("singular Hessian in logit fit") from exc
        gamma = gamma + step
        if np.max(np.abs(gamma) * scale) > _GAMMA_BOUND:
            raise SeparationError(
                "logit fit diverged; labels appear separable by the features")
    else:
        raise SeparationError("logit fit did not converge")
    eta = F @ gamma
    loglik = float(np.sum(y * eta - np.logaddexp(0.0, eta)))
    return gamma, loglik


def _nearest_stream(dataset: PanelDataset, period: int) -> dict[int, float]:
    """Latest streaming value in the (t-1, t] window, per subject.

    ``period`` is the 0-based period index; streaming times live on the
    1-based axis, so the window is (period, period + 1].
    """
    lo, hi = float(period), float(period + 1)
    best: dict[int, tuple[float, float]] = {}
    for rec in dataset.streaming or ():
        if lo < rec.time <= hi:
            cur = best.get(rec.subject)
            if cur is None or rec.time >= cur[0]:
                best[rec.subject] = (rec.time, rec.value)
    return {i: v for i, (_, v) in best.items()}


def _features_for(dataset: PanelDataset, mechanism: Mechanism, t: int,
                  at_risk: np.ndarray) -> np.ndarray:
    n_at = int(at_risk.sum())
    if mechanism is Mechanism.MCAR:
        return np.ones((n_at, 1))
    if mechanism is Mechanism.MAR:
        lag = dataset.response[at_risk, t - 1]
        cur = np.column_stack([
            dataset.covars[at_risk, t, :], dataset.treat[at_risk, t, :]])
        return np.column_stack([cur, lag])
    if mechanism is Mechanism.HW_STREAM:
        stream = _nearest_stream(dataset, t)
        idx = np.nonzero(at_risk)[0]
        w = np.empty(idx.size)
        for k, i in enumerate(idx):
            if dataset.mask[i, t]:
                w[k] = dataset.response[i, t]
            elif i in stream:
                w[k] = stream[i]
            else:
                raise PropensityError(
                    f"no streaming record covers subject {i} at period {t}")
        vbar = np.concatenate([dataset.treat, dataset.covars[:, :, 1:]], axis=2)
        vbar_mean = vbar.mean(axis=1)[idx]
        return _dedupe_columns(np.column_stack([np.ones(idx.size), w, vbar_mean]))
    raise ValueError(f"no feature map for mechanism {mechanism}")


def _dedupe_columns(mat: np.ndarray) -> np.ndarray:
    """Drop columns that exactly duplicate an earlier one."""
    keep = []
    for j in range(mat.shape[1]):
        if not any(np.array_equal(mat[:, j], mat[:, k]) for k in keep):
            keep.append(j)
    return mat[:, keep]


def build_first_stage(dataset: PanelDataset, mechanism: Mechanism | str, *,
                      floor: float = 0.01,
                      true_pi: np.ndarray | None = None) -> PropensityFit:
    """Fit the sequential first stage and return floored staying probabilities.

    Probabilities are per-period logits on the at-risk set; subjects not at
    risk get placeholder 1 (their weight is zero anyway).  ``unfeasible``
    skips estimation and uses ``true_pi`` (conditional per-period
    probabilities) directly.
    """
    mechanism = Mechanism(mechanism)
    n, t_len = dataset.n_subjects, dataset.n_periods
    cond = np.ones((n, t_len))
    gamma: dict[int, np.ndarray | None] = {}
    loglik = 0.0
    iters = 0
    if mechanism is Mechanism.UNFEASIBLE:
        if true_pi is None:
            raise PropensityError("unfeasible mechanism requires true_pi")
        cond = np.asarray(true_pi, dtype=float).copy()
        cond[:, 0] = 1.0
    else:
        if mechanism is Mechanism.HW_STREAM and not dataset.streaming:
            raise PropensityError("hw_stream mechanism requires a streaming sample")
        for t in range(1, t_len):
            at_risk = dataset.mask[:, t - 1] == 1
            if not at_risk.any():
                # everyone has dropped: no observed cells remain to weight
                cond[:, t:] = floor
                break
            labels = dataset.mask[at_risk, t].astype(float)
            if labels.min() == labels.max():
                # no dropouts (or no stayers): a logit MLE does not exist
                cond[at_risk, t] = 1.0 if labels[0] == 1.0 else floor
                gamma[t] = None
                continue
            feats = _features_for(dataset, mechanism, t, at_risk)
            try:
                g, ll = fit_logit(feats, labels)
            except (SeparationError, ValueError):
                # too few dropouts to identify the full model; fall back to
                # the retention rate (intercept-only logit in closed form)
                share = labels.mean()
                cond[at_risk, t] = share
                gamma[t] = None
                loglik += float(labels.size * (share * np.log(share)
                                               + (1 - share) * np.log(1 - share)))
                continue
            gamma[t] = g
            loglik += ll
            iters += 1
            cond[at_risk, t] = _sigmoid(feats @ g)
    cond = np.clip(cond, floor, 1.0)
    cond[:, 0] = 1.0
    pi = np.clip(np.cumprod(cond, axis=1), floor, 1.0)
    return PropensityFit(mechanism=mechanism, gamma=gamma, pi=pi, cond_pi=cond,
                         floor=floor, loglik=loglik, iterations=iters)


def inverse_weights(fit: PropensityFit, dataset: PanelDataset, *,
                    conditional: bool = False) -> np.ndarray:
    """Inverse-probability weights s_it / pi_hat_it on the full grid.

    Uses the cumulative staying probability by default so that the weighted
    observed sample matches full-population moments marginally; with
    ``conditional`` the per-period probability is used instead (identical
    when T = 2).  Unobserved cells get weight 0.
    """
    pi = fit.cond_pi if conditional else fit.pi
    if pi.shape != (dataset.n_subjects, dataset.n_periods):
        raise PropensityError("propensity fit does not cover this dataset")
    if np.any(pi < fit.floor - 1e-12):
        raise PropensityError("probabilities fell below the configured floor")
    return dataset.mask / pi
