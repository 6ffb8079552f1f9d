"""Simulation designs: benchmark panels and the synthetic-population experiment.

The benchmark designs share one process: a location-scale panel response

    y*_it = alpha_i + b0 + b1 * x_it + (1 + g * x_it) * u_it,
    x_it  = 0.3 * alpha_i + z_it,  z_it ~ chi^2_3,

with absorbing dropout from period 2 on,

    s_it = 1{ c0 + r0 * y*_it + r1 * y_{i,t-1} + th1 * x_it + th2 * a_i - v_it > 0 },

v_it standard logistic.  The true conditional-quantile slope on x is
b1 + g * Q_u(tau).  Designs d1a..d5 vary the error law, the individual
effect law and the selection coefficients; d6 switches to Gaussian
covariates with individual effects built from within-subject covariate
averages, T = 2, selection on the latent current response, and a streaming
sample drawn between the two periods.

The synthetic-population experiment draws household-level binary
covariates and treatment, builds log-responses from user-supplied
population coefficients, and generates dropout with normal selection noise
so that attrition increases with the selection loading on the current
response while rho0 = rho1 = 0 gives none.

Generators are pure functions of (config, seed) using a counter-based
Philox stream, so replications can run in parallel in any order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.special import ndtri

from .panel import PanelDataset, StreamRecord

__all__ = [
    "DesignConfig",
    "GeneratedPanel",
    "PopulationSpec",
    "generate",
    "generate_empirical",
    "demo_population",
    "DESIGN_NAMES",
]

DESIGN_NAMES = ("d1a", "d1b", "d2a", "d2b", "d3", "d4", "d5", "d6", "empirical")

_ERROR_PPF: dict[str, Callable[[float], float]] = {
    "chi2_3": lambda q: 2.0 * _gammaincinv_3over2(q),
    "cauchy": lambda q: math.tan(math.pi * (q - 0.5)),
    "normal": lambda q: float(ndtri(q)),
}


def _gammaincinv_3over2(q: float) -> float:
    from scipy.special import gammaincinv

    return float(gammaincinv(1.5, q))


def _sigmoid(v: np.ndarray) -> np.ndarray:
    out = np.empty_like(v)
    pos = v >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-v[pos]))
    ev = np.exp(v[~pos])
    out[~pos] = ev / (1.0 + ev)
    return out


@dataclass(frozen=True)
class DesignConfig:
    """Full parameterization of one simulation design."""

    design_id: str
    n_subjects: int
    n_periods: int
    error_dist: str = "chi2_3"
    alpha_dist: str = "uniform"
    rho0: float = 0.0
    rho1: float = 0.0
    theta1: float = 0.0
    theta2: float = 0.0
    sel_intercept: float = 0.0
    x_loading: float = 0.3
    gamma_scale: float = 0.5
    beta0: float = 0.0
    beta1: float = 1.0
    pi_alpha: float = 1.0
    pi_eta: float = 1.0
    selection_noise: tuple = ("logistic",)
    stream_draws: int = 3
    seed: int = 0

    @classmethod
    def design(cls, name: str, n_subjects: int, n_periods: int | None = None,
               seed: int = 0, **overrides) -> "DesignConfig":
        """Preset configuration for one of the named designs."""
        name = name.lower()
        presets = {
            "d1a": dict(error_dist="chi2_3", alpha_dist="uniform"),
            "d1b": dict(error_dist="chi2_3", alpha_dist="uniform", theta1=1.0, theta2=1.0),
            "d2a": dict(error_dist="cauchy", alpha_dist="uniform"),
            "d2b": dict(error_dist="cauchy", alpha_dist="uniform", theta1=1.0, theta2=1.0),
            "d3": dict(error_dist="chi2_3", alpha_dist="normal", theta1=1.0, theta2=1.0,
                       x_loading=0.48),
            "d4": dict(error_dist="chi2_3", alpha_dist="normal", rho1=0.5, x_loading=0.42),
            "d5": dict(error_dist="normal", alpha_dist="normal", rho1=0.5, beta0=5.0,
                       x_loading=0.42),
            "d6": dict(error_dist="normal", rho0=1.0, theta2=3.0, gamma_scale=0.0,
                       sel_intercept=-6.5),
        }
        if name not in presets:
            raise ValueError(f"unknown design {name!r}; expected one of {DESIGN_NAMES[:-1]}")
        if n_periods is None:
            n_periods = 2 if name == "d6" else 5
        kw = dict(design_id=name, n_subjects=int(n_subjects),
                  n_periods=int(n_periods), seed=int(seed))
        kw.update(presets[name])
        kw.update(overrides)
        cfg = cls(**kw)
        if cfg.n_subjects < 2 or cfg.n_periods < 2:
            raise ValueError("designs require at least 2 subjects and 2 periods")
        return cfg

    def has_selection(self) -> bool:
        return any(v != 0.0 for v in (self.rho0, self.rho1, self.theta1, self.theta2))

    def to_jsonable(self) -> dict:
        out = {k: getattr(self, k) for k in self.__dataclass_fields__}
        out["selection_noise"] = list(self.selection_noise)
        return out


@dataclass
class GeneratedPanel:
    """A generated dataset plus the quantities only the simulator knows."""

    dataset: PanelDataset
    true_pi: np.ndarray
    config: DesignConfig | None
    target_param: str
    slope_base: float
    slope_scale: float
    error_dist: str
    latent: dict = field(default_factory=dict)

    def true_slope(self, tau: float, raw: bool = False) -> float:
        """Slope of the tau-th conditional quantile on the target regressor.

        With ``raw`` the location coefficient is returned instead of the
        tau-specific one (they coincide when the scale loading is zero).
        """
        if raw or self.slope_scale == 0.0:
            return self.slope_base
        return self.slope_base + self.slope_scale * _ERROR_PPF[self.error_dist](tau)


def _selection_draw(rng: np.random.Generator, noise: tuple, n: int) -> np.ndarray:
    if noise[0] == "logistic":
        return rng.logistic(size=n)
    if noise[0] == "normal":
        _, mean, sd = noise
        return rng.normal(mean, sd, size=n)
    raise ValueError(f"unknown selection noise {noise!r}")


def _noise_cdf(noise: tuple, v: np.ndarray) -> np.ndarray:
    if noise[0] == "logistic":
        return _sigmoid(v)
    if noise[0] == "normal":
        from scipy.special import ndtr

        _, mean, sd = noise
        return ndtr((v - mean) / sd)
    raise ValueError(f"unknown selection noise {noise!r}")


def generate(config: DesignConfig) -> GeneratedPanel:
    """Draw one panel from a benchmark design.

    Reproducible: identical config (including seed) gives a bit-identical
    panel.  Masks are monotone by construction; the first period is always
    observed.  ``true_pi`` holds the conditional per-period staying
    probabilities implied by the selection equation (1 in period 1 and for
    designs without selection).
    """
    if config.design_id == "d6":
        return _generate_d6(config)
    if config.design_id == "empirical":
        raise ValueError("use generate_empirical for the synthetic-population design")
    rng = np.random.Generator(np.random.Philox(key=config.seed))
    n, t_len = config.n_subjects, config.n_periods
    if config.alpha_dist == "uniform":
        alpha = rng.uniform(0.0, 1.0, n)
    elif config.alpha_dist == "normal":
        alpha = rng.standard_normal(n)
    else:
        raise ValueError(f"unknown alpha_dist {config.alpha_dist!r}")
    z = rng.chisquare(3, size=(n, t_len))
    x = config.x_loading * alpha[:, None] + z
    if config.error_dist == "chi2_3":
        u = rng.chisquare(3, size=(n, t_len))
    elif config.error_dist == "cauchy":
        u = rng.standard_cauchy(size=(n, t_len))
    elif config.error_dist == "normal":
        u = rng.standard_normal(size=(n, t_len))
    else:
        raise ValueError(f"unknown error_dist {config.error_dist!r}")
    ystar = alpha[:, None] + config.beta0 + config.beta1 * x \
        + (1.0 + config.gamma_scale * x) * u

    mask = np.ones((n, t_len), dtype=np.int8)
    cond_pi = np.ones((n, t_len))
    if config.has_selection():
        for t in range(1, t_len):
            index = (config.sel_intercept + config.rho0 * ystar[:, t]
                     + config.rho1 * ystar[:, t - 1]
                     + config.theta1 * x[:, t] + config.theta2 * alpha)
            v = _selection_draw(rng, config.selection_noise, n)
            stay = index - v > 0.0
            mask[:, t] = mask[:, t - 1] * stay
            cond_pi[:, t] = _noise_cdf(config.selection_noise, index)

    response = np.where(mask == 1, ystar, np.nan)
    covars = np.stack([np.ones((n, t_len)), x], axis=2)
    treat = np.zeros((n, t_len, 0))
    dataset = PanelDataset(n_subjects=n, n_periods=t_len, response=response,
                           treat=treat, covars=covars, mask=mask)
    return GeneratedPanel(dataset=dataset, true_pi=cond_pi, config=config,
                          target_param="x1", slope_base=config.beta1,
                          slope_scale=config.gamma_scale,
                          error_dist=config.error_dist,
                          latent=dict(alpha=alpha, x=x, u=u, ystar=ystar))


def _generate_d6(config: DesignConfig) -> GeneratedPanel:
    """Gaussian design with endogenous effects and a streaming sample.

    Individual effects average the subject's own covariates, the selection
    equation loads on the latent current response (selection on
    unobservables), and ``stream_draws`` auxiliary response measurements
    per subject are taken at uniform times inside each inter-period window.
    """
    rng = np.random.Generator(np.random.Philox(key=config.seed))
    n, t_len = config.n_subjects, config.n_periods
    x = rng.normal(1.0, 1.0, size=(n, t_len))
    w = rng.normal(1.0, 1.0, size=(n, t_len))
    xi1 = rng.standard_normal(n)
    xi2 = rng.uniform(0.0, 1.0, n)
    # the outcome effect averages the auxiliary covariate (independent of
    # the regressor, keeping the slope estimand clean), while the selection
    # effect averages the regressor itself: dropout then loads on both the
    # latent response and the regressor history
    alpha = w.mean(axis=1) * config.pi_alpha + xi1
    eta = x.mean(axis=1) * config.pi_eta + 2.0 * xi2
    u = rng.standard_normal(size=(n, t_len))
    ystar = alpha[:, None] + config.beta0 + config.beta1 * x \
        + (1.0 + config.gamma_scale * x) * u

    mask = np.ones((n, t_len), dtype=np.int8)
    cond_pi = np.ones((n, t_len))
    for t in range(1, t_len):
        index = (config.sel_intercept + config.rho0 * ystar[:, t]
                 + config.rho1 * ystar[:, t - 1]
                 + config.theta1 * x[:, t] + config.theta2 * eta)
        v = _selection_draw(rng, config.selection_noise, n)
        mask[:, t] = mask[:, t - 1] * (index - v > 0.0)
        cond_pi[:, t] = _noise_cdf(config.selection_noise, index)

    # streaming measurements inside (t-1, t]: same subject and the window's
    # covariate (adjacent-time readings share it), fresh transitory noise,
    # so the streaming response has the law of the period-t response
    records = []
    for t in range(1, t_len):
        for j in range(config.stream_draws):
            h = rng.uniform(float(t), float(t + 1), size=n)
            us = rng.standard_normal(n)
            vals = alpha + config.beta0 + config.beta1 * x[:, t] \
                + (1.0 + config.gamma_scale * x[:, t]) * us
            records.extend(StreamRecord(i, float(h[i]), float(vals[i]))
                           for i in range(n))
    response = np.where(mask == 1, ystar, np.nan)
    covars = np.stack([np.ones((n, t_len)), x], axis=2)
    treat = np.zeros((n, t_len, 0))
    dataset = PanelDataset(n_subjects=n, n_periods=t_len, response=response,
                           treat=treat, covars=covars, mask=mask,
                           streaming=tuple(records))
    return GeneratedPanel(dataset=dataset, true_pi=cond_pi, config=config,
                          target_param="x1", slope_base=config.beta1,
                          slope_scale=config.gamma_scale,
                          error_dist=config.error_dist,
                          latent=dict(alpha=alpha, eta=eta, x=x, w=w, u=u,
                                      ystar=ystar))


@dataclass(frozen=True)
class PopulationSpec:
    """Population coefficients feeding the synthetic attrition experiment."""

    block: str
    tau: float
    beta0: float
    delta: float
    beta1: tuple
    covar_probs: tuple
    treat_share: float

    def mean_level(self) -> float:
        return self.beta0 + self.treat_share * self.delta + float(
            np.dot(self.beta1, self.covar_probs))


# Household-level binary covariate frequencies for the bundled demo
# population (shares of the control group in the source experiment).
_DEMO_COVAR_PROBS = (0.251, 0.647, 0.147, 0.060, 0.721, 0.538,
                     0.426, 0.885, 0.555, 0.181, 0.221)
_DEMO_BETA1 = (-0.08, 0.12, 0.05, 0.15, 0.10, 0.06, 0.09, -0.04, -0.06, 0.03, 0.02)
_DEMO_TREAT_SHARE = 200.0 / 670.0

# Treatment effects by pricing block and quantile (published population
# regressions, first two months of the trial), and demo intercepts placed
# on a log-usage scale calibrated so heavy selection (rho0 = 1) reproduces
# the published attrition shares at T = 59.
_DEMO_DELTA = {
    ("night", 0.1): 0.021, ("night", 0.5): -0.044, ("night", 0.9): -0.041,
    ("peak", 0.1): -0.078, ("peak", 0.5): -0.143, ("peak", 0.9): -0.008,
    ("day", 0.1): -0.090, ("day", 0.5): -0.085, ("day", 0.9): 0.017,
}
_DEMO_BETA0 = {
    ("night", 0.1): -3.927, ("night", 0.5): -2.831, ("night", 0.9): -1.812,
    ("peak", 0.1): -2.628, ("peak", 0.5): -1.272, ("peak", 0.9): -0.074,
    ("day", 0.1): -2.368, ("day", 0.5): -1.289, ("day", 0.9): -0.234,
}


def demo_population(block: str = "peak", tau: float = 0.5) -> PopulationSpec:
    """Bundled synthetic stand-in for the unavailable source population."""
    key = (block, tau)
    if key not in _DEMO_DELTA:
        raise ValueError(f"no demo population for block={block!r}, tau={tau}")
    return PopulationSpec(block=block, tau=tau, beta0=_DEMO_BETA0[key],
                          delta=_DEMO_DELTA[key], beta1=_DEMO_BETA1,
                          covar_probs=_DEMO_COVAR_PROBS,
                          treat_share=_DEMO_TREAT_SHARE)


def generate_empirical(pop: PopulationSpec, rho0: float, rho1: float,
                       n_subjects: int, n_periods: int, seed: int = 0) -> GeneratedPanel:
    """Panel from the synthetic-population experiment.

    Time-invariant binary covariates and treatment are drawn at the
    population frequencies; log-responses add an individual effect
    d * xi1 + sqrt(0.5) * xi2 and standard normal noise to the population
    regression function.  Dropout from period 2 on keeps a subject with
    probability Phi(rho0 * logy_t + rho1 * logy_{t-1} + 5), so rho0 =
    rho1 = 0 gives no attrition and attrition rises with rho0.  One
    streaming response draw per subject is taken inside every inter-period
    window.
    """
    if rho0 < 0 or rho1 < 0:
        raise ValueError("rho0 and rho1 must be nonnegative")
    rng = np.random.Generator(np.random.Philox(key=seed))
    n, t_len = int(n_subjects), int(n_periods)
    k = len(pop.beta1)
    d = (rng.random(n) < pop.treat_share).astype(float)
    x = (rng.random((n, k)) < np.asarray(pop.covar_probs)).astype(float)
    xi1 = rng.standard_normal(n)
    xi2 = rng.standard_normal(n)
    alpha = d * xi1 + math.sqrt(0.5) * xi2
    mu = pop.beta0 + pop.delta * d + x @ np.asarray(pop.beta1)
    u = rng.standard_normal(size=(n, t_len))
    logy = (mu + alpha)[:, None] + u

    mask = np.ones((n, t_len), dtype=np.int8)
    cond_pi = np.ones((n, t_len))
    from scipy.special import ndtr

    for t in range(1, t_len):
        index = rho0 * logy[:, t] + rho1 * logy[:, t - 1] + 5.0
        v = rng.standard_normal(n)
        mask[:, t] = mask[:, t - 1] * (index + v > 0.0)
        cond_pi[:, t] = ndtr(index)

    records = []
    for t in range(1, t_len):
        h = rng.uniform(float(t), float(t + 1), size=n)
        us = rng.standard_normal(n)
        vals = mu + alpha + us
        records.extend(StreamRecord(i, float(h[i]), float(vals[i]))
                       for i in range(n))

    response = np.where(mask == 1, logy, np.nan)
    covars = np.concatenate([
        np.ones((n, t_len, 1)),
        np.broadcast_to(x[:, None, :], (n, t_len, k)),
    ], axis=2)
    treat = np.broadcast_to(d[:, None, None], (n, t_len, 1))
    dataset = PanelDataset(n_subjects=n, n_periods=t_len, response=response,
                           treat=np.array(treat), covars=np.array(covars), mask=mask,
                           streaming=tuple(records))
    config = DesignConfig(design_id="empirical", n_subjects=n, n_periods=t_len,
                          error_dist="normal", rho0=rho0, rho1=rho1, seed=seed,
                          selection_noise=("normal", -5.0, 1.0))
    return GeneratedPanel(dataset=dataset, true_pi=cond_pi, config=config,
                          target_param="d1", slope_base=pop.delta,
                          slope_scale=0.0, error_dist="normal",
                          latent=dict(alpha=alpha, mu=mu, u=u, logy=logy,
                                      pop=pop))
