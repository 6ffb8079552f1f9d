"""Command-line surface: estimation, simulation, replication and tuning.

Subcommands
-----------
estimate        fit one panel quantile estimator to a CSV panel
simulate        draw a panel from a named design and write it to CSV
replicate-table run a benchmark exhibit and score it against embedded values
select-lambda   pick the penalty level by the robust or the MLE rule

Exit codes: 0 success (and, for replicate-table, all scored cells passed);
1 input validation failure; 2 solver or harness failure; 3 first-stage
failure; 64 usage error.  Every command is deterministic given --seed
(ATTRITION_PQR_SEED serves as a fallback).  When --out is given, report
commands also render a matplotlib figure next to the delimited output.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from pathlib import Path

from .errors import PanelFormatError, PropensityError, SeparationError, SolverError

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_SOLVER = 2
EXIT_PROPENSITY = 3
EXIT_USAGE = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def _positive_float(value: str) -> float:
    x = float(value)
    if x <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {value}")
    return x


def _env_seed(default: int = 0) -> int:
    return int(os.environ.get("ATTRITION_PQR_SEED", default))


def build_parser() -> _Parser:
    parser = _Parser(prog="attrition-pqr",
                     description="Panel quantile regression under attrition")
    sub = parser.add_subparsers(dest="command", required=True)

    est = sub.add_parser("estimate", parents=[_config_parent()],
                         help="fit an estimator to a panel CSV")
    est.add_argument("--panel", help="long-format panel CSV")
    est.add_argument("--streaming", help="streaming-sample CSV (subject_id, h, w_value)")
    est.add_argument("--schema", help="JSON column-name map for the panel file")
    est.add_argument("--estimator", choices=["qr", "wqr", "fe", "wfe", "pqr", "wpqr"],
                     default=None, help="defaults to wpqr")
    est.add_argument("--tau", type=float, default=None, help="defaults to 0.5")
    est.add_argument("--lambda", dest="lambda_", type=_positive_float,
                     help="fixed penalty level for pqr/wpqr")
    est.add_argument("--lambda-method", choices=["robust", "mle"],
                     help="select the penalty level instead of fixing it")
    est.add_argument("--kappa", type=float, default=2.0)
    est.add_argument("--c", dest="c_level", type=float, default=0.1)
    est.add_argument("--draws", type=int, default=1000)
    est.add_argument("--mechanism", choices=["mcar", "mar", "stream"],
                     help="first-stage attrition model for weighted estimators")
    est.add_argument("--floor", type=float, default=0.01)
    est.add_argument("--no-se", action="store_true",
                     help="skip the sandwich standard errors")
    est.add_argument("--plot", help="write a coefficient figure to this path")
    _io_args(est)

    sim = sub.add_parser("simulate", parents=[_config_parent()],
                         help="generate a panel from a named design")
    sim.add_argument("--design", required=True,
                     choices=["d1a", "d1b", "d2a", "d2b", "d3", "d4", "d5", "d6",
                              "empirical"])
    sim.add_argument("--n", type=int, default=200)
    sim.add_argument("--t", type=int, default=None)
    sim.add_argument("--rho0", type=float, default=None)
    sim.add_argument("--rho1", type=float, default=None)
    sim.add_argument("--block", default="peak", help="population block (empirical)")
    sim.add_argument("--tau-pop", type=float, default=0.5,
                     help="population quantile the coefficients come from (empirical)")
    sim.add_argument("--out", required=True, help="panel CSV destination")
    sim.add_argument("--streaming-out", help="streaming CSV destination")
    sim.add_argument("--seed", type=int, default=None)

    rep = sub.add_parser("replicate-table", parents=[_config_parent()],
                         help="replicate a benchmark exhibit at desk scale")
    rep.add_argument("--table", required=True,
                     choices=["1", "2", "3", "4", "5", "t1", "t2", "t3", "t4", "t5",
                              "fig1", "fig2"])
    rep.add_argument("--scale", type=_positive_float, default=0.1,
                     help="fraction of the original replication count")
    rep.add_argument("--workers", type=int, default=1)
    _io_args(rep)

    lam = sub.add_parser("select-lambda", parents=[_config_parent()],
                         help="choose the penalty level for a panel")
    lam.add_argument("--panel", required=True)
    lam.add_argument("--streaming")
    lam.add_argument("--schema")
    lam.add_argument("--method", choices=["robust", "mle"], default="robust")
    lam.add_argument("--tau", type=float, default=0.5)
    lam.add_argument("--kappa", type=float, default=2.0)
    lam.add_argument("--c", dest="c_level", type=float, default=0.1)
    lam.add_argument("--draws", type=int, default=1000)
    lam.add_argument("--mechanism", choices=["mcar", "mar", "stream"], default="mar")
    lam.add_argument("--floor", type=float, default=0.01)
    _io_args(lam)
    return parser


def _config_parent() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--config", help="JSON file with default argument values")
    return parent


def _io_args(p) -> None:
    p.add_argument("--out", help="output path (figure written alongside)")
    p.add_argument("--format", choices=["json", "csv", "text"], default="json")
    p.add_argument("--seed", type=int, default=None)


def _apply_config(args: argparse.Namespace) -> None:
    if not getattr(args, "config", None):
        return
    with open(args.config, encoding="utf-8") as fh:
        values = json.load(fh)
    for key, val in values.items():
        attr = key.replace("-", "_")
        if getattr(args, attr, None) in (None, False):
            setattr(args, attr, val)


def _emit(text: str, out_path) -> None:
    if out_path:
        Path(out_path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _load_panel(args):
    from .panel import load_panel, validate

    schema = json.loads(args.schema) if getattr(args, "schema", None) else None
    dataset = load_panel(args.panel, schema=schema,
                         streaming_path=getattr(args, "streaming", None))
    problems = validate(dataset)
    if problems:
        raise PanelFormatError("; ".join(problems))
    return dataset


def _first_stage(dataset, args, mechanism):
    from .propensity import Mechanism, build_first_stage

    name = {"mcar": Mechanism.MCAR, "mar": Mechanism.MAR,
            "stream": Mechanism.HW_STREAM}[mechanism]
    return build_first_stage(dataset, name, floor=args.floor)


def _cmd_estimate(args) -> int:
    from .estimators import EstimatorSpec, estimate, sandwich_covariance
    from .lambda_select import LambdaChoice, LambdaMethod, mle_lambda, robust_lambda

    dataset = _load_panel(args)
    kind = args.estimator or "wpqr"
    args.tau = 0.5 if args.tau is None else args.tau
    weighted = kind in ("wqr", "wfe", "wpqr")
    mechanism = args.mechanism
    stage = None
    if weighted:
        if mechanism is None:
            mechanism = "stream" if dataset.streaming else "mar"
            if mechanism == "mar":
                warnings.warn("no --mechanism given; defaulting to the "
                              "selection-on-observables (mar) first stage")
        stage = _first_stage(dataset, args, mechanism)

    choice = None
    lam = args.lambda_
    if kind in ("pqr", "wpqr"):
        seed = args.seed if args.seed is not None else _env_seed()
        if args.lambda_method == "robust":
            choice = robust_lambda(dataset, stage, args.tau, kappa=args.kappa,
                                   c=args.c_level, draws=args.draws, seed=seed)
            lam = choice.value
        elif args.lambda_method == "mle":
            choice = mle_lambda(dataset)
            lam = choice.value
        elif lam is None:
            raise PanelFormatError(
                "pqr/wpqr need --lambda or --lambda-method")
        else:
            choice = LambdaChoice(method=LambdaMethod.FIXED, value=lam)

    spec = EstimatorSpec(kind=kind, tau=args.tau, lambda_=lam, mechanism=mechanism)
    fit = estimate(dataset, spec, propensity=stage)
    if not args.no_se and kind in ("fe", "wfe", "pqr", "wpqr"):
        sandwich_covariance(fit, dataset, pi_hat=stage)

    payload = fit.to_jsonable()
    payload["lambda_choice"] = choice.to_jsonable() if choice else None
    payload["mechanism"] = mechanism
    payload["first_stage"] = stage.to_jsonable() if stage else None
    if args.format == "json":
        _emit(json.dumps(payload, indent=2), args.out)
    elif args.format == "csv":
        lines = ["name,coefficient,std_error"]
        se = fit.std_errors()
        for j, name in enumerate(fit.param_names):
            se_j = "" if se is None else repr(float(se[j]))
            lines.append(f"{name},{fit.vartheta[j]!r},{se_j}")
        _emit("\n".join(lines) + "\n", args.out)
    else:
        se = fit.std_errors()
        lines = [f"{kind} fit at tau={args.tau:g}, lambda={lam or 0:g}, "
                 f"n_obs={fit.n_obs}"]
        for j, name in enumerate(fit.param_names):
            se_txt = "" if se is None else f"  ({se[j]:.4f})"
            lines.append(f"  {name:<10}{fit.vartheta[j]:+12.6f}{se_txt}")
        _emit("\n".join(lines) + "\n", args.out)
    if args.plot:
        from .plots import fit_figure, save_figure

        save_figure(fit_figure(fit), args.plot)
    return EXIT_OK


def _cmd_simulate(args) -> int:
    from .dgp import DesignConfig, demo_population, generate, generate_empirical
    from .panel import write_panel, write_streaming

    seed = args.seed if args.seed is not None else _env_seed()
    if args.design == "empirical":
        pop = demo_population(args.block, args.tau_pop)
        gen = generate_empirical(pop, args.rho0 or 0.0, args.rho1 or 0.0,
                                 args.n, args.t or 25, seed=seed)
    else:
        overrides = {}
        if args.rho0 is not None:
            overrides["rho0"] = args.rho0
        if args.rho1 is not None:
            overrides["rho1"] = args.rho1
        cfg = DesignConfig.design(args.design, args.n, args.t, seed=seed, **overrides)
        gen = generate(cfg)
    write_panel(gen.dataset, args.out)
    if gen.dataset.streaming:
        stream_path = args.streaming_out or _sibling(args.out, "_streaming.csv")
        write_streaming(gen.dataset.streaming, stream_path)
    return EXIT_OK


def _sibling(path, suffix: str) -> str:
    p = Path(path)
    return str(p.with_name(p.stem + suffix))


def _cmd_replicate(args) -> int:
    from .harness import replicate_table

    seed = args.seed if args.seed is not None else _env_seed()
    report = replicate_table(args.table, scale=args.scale, seed=seed,
                             workers=args.workers)
    if args.format == "json":
        _emit(report.to_json(), args.out)
    elif args.format == "csv":
        _emit(report.to_csv(), args.out)
    else:
        _emit(report.to_text(), args.out)
    if args.out:
        from .plots import report_figure, save_figure

        save_figure(report_figure(report), _sibling(args.out, ".png"))
    scored = [c.passed for c in report.cells if c.passed is not None]
    if scored and not all(scored):
        return EXIT_SOLVER
    return EXIT_OK


def _cmd_select_lambda(args) -> int:
    from .lambda_select import mle_lambda, robust_lambda

    dataset = _load_panel(args)
    seed = args.seed if args.seed is not None else _env_seed()
    if args.method == "robust":
        stage = _first_stage(dataset, args, args.mechanism)
        choice = robust_lambda(dataset, stage, args.tau, kappa=args.kappa,
                               c=args.c_level, draws=args.draws, seed=seed)
    else:
        choice = mle_lambda(dataset)
    payload = choice.to_jsonable()
    if args.format == "json":
        _emit(json.dumps(payload, indent=2), args.out)
    elif args.format == "csv":
        keys = list(payload)
        _emit(",".join(keys) + "\n" + ",".join(str(payload[k]) for k in keys) + "\n",
              args.out)
    else:
        _emit(" ".join(f"{k}={v}" for k, v in payload.items()), args.out)
    return EXIT_OK


_COMMANDS = {
    "estimate": _cmd_estimate,
    "simulate": _cmd_simulate,
    "replicate-table": _cmd_replicate,
    "select-lambda": _cmd_select_lambda,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        _apply_config(args)
        return _COMMANDS[args.command](args)
    except (PanelFormatError, FileNotFoundError, json.JSONDecodeError) as exc:
        sys.stderr.write(f"input error: {exc}\n")
        return EXIT_VALIDATION
    except (SeparationError, PropensityError) as exc:
        sys.stderr.write(f"first-stage error: {exc}\n")
        return EXIT_PROPENSITY
    except (SolverError, RuntimeError) as exc:
        sys.stderr.write(f"solver error: {exc}\n")
        return EXIT_SOLVER
    except ValueError as exc:
        sys.stderr.write(f"input error: {exc}\n")
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
