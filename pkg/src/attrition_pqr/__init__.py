"""Weighted penalized quantile regression for panel data with attrition.

A two-step estimator for panel quantile models where subjects drop out
permanently: a first stage fits the per-period staying probabilities under
a chosen attrition model (including one backed by auxiliary streaming
measurements of the response), and a second stage minimizes the
inverse-probability-weighted check loss with a penalty that shrinks the
incidence-coded individual effects, some of them to exact zeros.  A
Monte Carlo harness replicates the accompanying benchmark tables at desk
scale, and a CLI exposes estimation, simulation, replication and penalty
selection.
"""

from .dgp import DesignConfig, GeneratedPanel, PopulationSpec, demo_population, \
    generate, generate_empirical
from .errors import PanelFormatError, PropensityError, SeparationError, SolverError
from .estimators import EstimatorKind, EstimatorSpec, MultiQuantileFit, QuantileFit, \
    estimate, estimate_multi_tau, sandwich_covariance
from .harness import McCell, McReport, replicate_table, run_mc
from .lambda_select import LambdaChoice, LambdaMethod, mle_lambda, robust_lambda
from .panel import AttritionSummary, PanelDataset, StreamRecord, attrition_summary, \
    load_panel, load_streaming, validate, write_panel, write_streaming
from .propensity import Mechanism, PropensityFit, build_first_stage, fit_logit, \
    inverse_weights
from .qr import WqrProblem, WqrSolution, assemble_problem, assemble_wpqr, check_loss, \
    estimating_equation, influence, solve, solve_enumerate, subgradient_slack

__version__ = "0.1.0"

__all__ = [
    "AttritionSummary", "DesignConfig", "EstimatorKind", "EstimatorSpec",
    "GeneratedPanel", "LambdaChoice", "LambdaMethod", "McCell", "McReport",
    "Mechanism", "MultiQuantileFit", "PanelDataset", "PanelFormatError",
    "PopulationSpec", "PropensityError", "PropensityFit", "QuantileFit",
    "SeparationError", "SolverError", "StreamRecord", "WqrProblem", "WqrSolution",
    "assemble_problem", "assemble_wpqr", "attrition_summary", "build_first_stage",
    "check_loss", "demo_population", "estimate", "estimate_multi_tau",
    "estimating_equation", "fit_logit", "generate", "generate_empirical",
    "influence", "inverse_weights", "load_panel", "load_streaming", "mle_lambda",
    "replicate_table", "robust_lambda", "run_mc", "sandwich_covariance", "solve",
    "solve_enumerate", "subgradient_slack", "validate", "write_panel",
    "write_streaming",
]
