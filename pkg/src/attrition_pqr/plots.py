"""Figure rendering for reports and fits.

All functions return a matplotlib Figure; the CLI writes them to files next
to the delimited output.  The Agg backend is forced so rendering works
headless.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["report_figure", "fit_figure", "save_figure"]


def _fig1_figure(report):
    designs = sorted({c.extra.get("design") for c in report.cells if c.extra.get("design")})
    taus = sorted({c.tau for c in report.cells})
    fig, axes = plt.subplots(2, len(designs), figsize=(3.2 * len(designs), 6.0),
                             sharex=True, squeeze=False)
    for j, design in enumerate(designs):
        ax_b, ax_r = axes[0][j], axes[1][j]
        for tau in taus:
            sub = [c for c in report.cells
                   if c.extra.get("design") == design and abs(c.tau - tau) < 1e-9]
            pqr = sorted((c for c in sub if c.estimator == "pqr"), key=lambda c: c.lam)
            fe = [c for c in sub if c.estimator == "fe"]
            if not pqr:
                continue
            lams = [c.lam for c in pqr]
            ax_b.plot(lams, [c.bias for c in pqr], marker=".", label=f"tau={tau:g}")
            ax_r.plot(lams, [c.rmse for c in pqr], marker=".")
            if fe:
                ax_b.axhline(fe[0].bias, ls="--", lw=0.8,
                             color=ax_b.lines[-1].get_color())
                ax_r.axhline(fe[0].rmse, ls="--", lw=0.8,
                             color=ax_r.lines[-1].get_color())
        ax_b.axhline(0.0, color="k", lw=0.6)
        ax_b.set_title(design)
        ax_r.set_xlabel("penalty $\\lambda$")
        if j == 0:
            ax_b.set_ylabel("bias")
            ax_r.set_ylabel("RMSE")
    axes[0][0].legend(fontsize=8)
    fig.suptitle("Penalized vs fixed-effects fits (dashed: fixed effects)")
    fig.tight_layout()
    return fig


def _fig2_figure(report):
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    for rule, marker in (("robust", "o"), ("mle", "s")):
        sub = sorted((c for c in report.cells if c.label == rule),
                     key=lambda c: c.extra["rho0"])
        ax.plot([c.extra["rho0"] for c in sub], [c.mean_lambda for c in sub],
                marker=marker, label=rule)
    ax.set_xlabel("selection loading $\\rho_0$")
    ax.set_ylabel("selected $\\lambda$")
    ax.set_title("Penalty selection across attrition levels")
    ax.legend()
    fig.tight_layout()
    return fig


def _table_figure(report):
    taus = sorted({c.tau for c in report.cells})
    sizes = sorted({(c.n_subjects, c.n_periods) for c in report.cells})
    fig, axes = plt.subplots(len(sizes), len(taus),
                             figsize=(3.0 * len(taus), 2.4 * len(sizes)),
                             squeeze=False, sharey="row")
    for i, (n, t_len) in enumerate(sizes):
        for j, tau in enumerate(taus):
            ax = axes[i][j]
            sub = [c for c in report.cells
                   if (c.n_subjects, c.n_periods) == (n, t_len)
                   and abs(c.tau - tau) < 1e-9]
            labels = [c.label for c in sub]
            xs = np.arange(len(sub))
            ax.bar(xs, [c.bias for c in sub], color="tab:blue", alpha=0.8)
            tgt = [c.target_bias for c in sub]
            if any(v is not None for v in tgt):
                ax.plot(xs, [np.nan if v is None else v for v in tgt], "k_",
                        markersize=14, label="benchmark")
            ax.axhline(0.0, color="k", lw=0.6)
            ax.set_xticks(xs)
            ax.set_xticklabels(labels, rotation=60, fontsize=7)
            if i == 0:
                ax.set_title(f"tau={tau:g}")
            if j == 0:
                ax.set_ylabel(f"N={n}, T={t_len}\nbias")
    fig.suptitle(f"Replication {report.table_id} (reps={report.reps})")
    fig.tight_layout()
    return fig


def report_figure(report):
    """Render the appropriate figure for a replication report."""
    if report.table_id == "fig1":
        return _fig1_figure(report)
    if report.table_id == "fig2":
        return _fig2_figure(report)
    return _table_figure(report)


def fit_figure(fit):
    """Coefficient plot with 95% intervals when a covariance is attached."""
    fig, ax = plt.subplots(figsize=(5.0, 0.5 + 0.4 * len(fit.param_names)))
    ys = np.arange(len(fit.param_names))
    ax.plot(fit.vartheta, ys, "o")
    se = fit.std_errors()
    if se is not None:
        ax.errorbar(fit.vartheta, ys, xerr=1.96 * se, fmt="none", ecolor="tab:blue")
    ax.axvline(0.0, color="k", lw=0.6)
    ax.set_yticks(ys)
    ax.set_yticklabels(fit.param_names)
    ax.set_xlabel("coefficient")
    ax.set_title(f"{fit.spec.kind.value} fit at tau={fit.tau:g}"
                 + (f", lambda={fit.lambda_used:g}" if fit.lambda_used else ""))
    fig.tight_layout()
    return fig


def save_figure(fig, path) -> None:
    fig.savefig(path, dpi=150)
    plt.close(fig)
