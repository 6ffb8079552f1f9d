"""Check-loss primitives and the weighted penalized quantile-regression solver.

Every estimator in the package reduces to one problem shape: minimize

    sum_k  weight_k * rho_tau_k(response_k - design_k' theta)

over theta in R^(J*p + N), where each row's design vector is a dense block
of width p (one of J slope blocks) plus at most one "incidence" entry in a
trailing block of N subject columns.  Data rows carry inverse-probability
weights; penalty pseudo-rows (response 0, design = one subject column)
shrink the individual effects and produce exact zeros.

The solver runs a primal-dual interior-point (Frisch-Newton) iteration with
a Mehrotra predictor-corrector step on the bounded-variable dual LP

    max c'a   s.t.  A'a = A'(1 - tau),  0 <= a <= 1,

whose equality multipliers are the regression coefficients.  Row weights
are folded into the rows beforehand (w * rho_tau(u) = rho_tau(w * u)).
The per-iteration normal matrix has arrow structure (dense slope blocks, a
diagonal subject block) and is solved through its Schur complement, so the
cost is linear in the number of rows and subjects.

Sign conventions: the penalty enters the objective as +weight*rho_tau, while
the estimating-equation diagnostic reports the penalty block with a minus
sign in front of psi_tau(z_i' alpha); the two conventions differ on the
penalty block and the diagnostic deliberately follows the latter.  psi_tau
at an exactly-zero argument returns tau (strict inequality in the
indicator); the solver itself never evaluates psi at zero.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve, LinAlgError

from .errors import SolverError

__all__ = [
    "check_loss",
    "influence",
    "WqrProblem",
    "WqrSolution",
    "solve",
    "solve_enumerate",
    "assemble_wpqr",
    "estimating_equation",
    "subgradient_slack",
]


def _check_tau(tau) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(tau, dtype=float))
    if np.any(arr <= 0.0) or np.any(arr >= 1.0):
        raise ValueError(f"tau must lie strictly in (0, 1), got {tau}")
    return arr


def check_loss(u, tau):
    """Quantile check function u * (tau - 1{u < 0}).

    Nonnegative, zero only at u = 0; its minimizer over a sample is the
    tau-th quantile.  Accepts scalars or arrays.
    """
    _check_tau(tau)
    u = np.asarray(u, dtype=float)
    out = u * (tau - (u < 0))
    return float(out) if out.ndim == 0 else out


def influence(u, tau):
    """Quantile influence (subgradient) function tau - 1{u < 0}.

    At u = 0 the strict inequality applies, so the value is tau.  Used in
    diagnostics only; the solver works on the LP formulation directly.
    """
    _check_tau(tau)
    u = np.asarray(u, dtype=float)
    out = tau - (u < 0.0)
    return float(out) if out.ndim == 0 else out


@dataclass
class WqrProblem:
    """Weighted check-loss minimization in sparse row form.

    Each row k has design (dense_k placed in slope block ``block_k``,
    ``zval_k`` in subject column ``subject_k``), response, nonnegative
    weight and quantile level.  ``subject_k = -1`` means no subject entry.
    Parameter vector layout: J*p slope coefficients (block by block), then
    N subject coefficients.
    """

    dense: np.ndarray
    response: np.ndarray
    weight: np.ndarray
    tau: float | np.ndarray
    subject: np.ndarray | None = None
    zval: np.ndarray | None = None
    block: np.ndarray | None = None
    n_blocks: int = 1
    n_subjects: int = 0
    is_penalty: np.ndarray | None = None
    nt_norm: float | None = None
    names: list[str] | None = None
    _tau_rows: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.dense = np.atleast_2d(np.asarray(self.dense, dtype=float))
        n = self.dense.shape[0]
        self.response = np.asarray(self.response, dtype=float).reshape(n)
        self.weight = np.asarray(self.weight, dtype=float).reshape(n)
        if self.subject is None:
            self.subject = np.full(n, -1, dtype=np.int64)
        else:
            self.subject = np.asarray(self.subject, dtype=np.int64).reshape(n)
        if self.zval is None:
            self.zval = np.where(self.subject >= 0, 1.0, 0.0)
        else:
            self.zval = np.asarray(self.zval, dtype=float).reshape(n)
        self.subject = np.where(self.zval == 0.0, -1, self.subject)
        if self.block is None:
            self.block = np.zeros(n, dtype=np.int64)
        else:
            self.block = np.asarray(self.block, dtype=np.int64).reshape(n)
        if self.is_penalty is None:
            self.is_penalty = np.zeros(n, dtype=bool)
        else:
            self.is_penalty = np.asarray(self.is_penalty, dtype=bool).reshape(n)
        tau_arr = _check_tau(self.tau)
        self._tau_rows = np.broadcast_to(tau_arr, (n,)).astype(float) if tau_arr.size in (1, n) else None
        if self._tau_rows is None:
            raise ValueError("tau must be scalar or one value per row")
        if np.any(self.weight < 0):
            raise ValueError("row weights must be nonnegative")
        if not np.any(self.weight > 0):
            raise ValueError("at least one row must have positive weight")
        if self.subject.max(initial=-1) >= self.n_subjects:
            raise ValueError("subject index out of range")
        if self.block.max(initial=0) >= self.n_blocks:
            raise ValueError("block index out of range")
        if self.nt_norm is None:
            self.nt_norm = float(np.count_nonzero(~self.is_penalty))

    @classmethod
    def from_rows(cls, rows, tau, n_subjects: int = 0, **kw) -> "WqrProblem":
        """Build from (design_vector, response, weight) triples.

        Design vectors have length p + n_subjects; the trailing block may
        hold at most one nonzero entry per row (the subject incidence).
        """
        design = np.atleast_2d(np.asarray([r[0] for r in rows], dtype=float))
        resp = np.asarray([r[1] for r in rows], dtype=float)
        wgt = np.asarray([r[2] for r in rows], dtype=float)
        if n_subjects:
            dense, tail = design[:, :-n_subjects], design[:, -n_subjects:]
            subject = np.full(len(rows), -1, dtype=np.int64)
            zv = np.zeros(len(rows))
            for k, row_tail in enumerate(tail):
                nz = np.nonzero(row_tail)[0]
                if nz.size > 1:
                    raise ValueError("rows may touch at most one subject column")
                if nz.size == 1:
                    subject[k] = nz[0]
                    zv[k] = row_tail[nz[0]]
            return cls(dense=dense, response=resp, weight=wgt, tau=tau,
                       subject=subject, zval=zv, n_subjects=n_subjects, **kw)
        return cls(dense=design, response=resp, weight=wgt, tau=tau, **kw)

    @property
    def n_rows(self) -> int:
        return self.dense.shape[0]

    @property
    def n_dense(self) -> int:
        return self.dense.shape[1]

    @property
    def n_params(self) -> int:
        return self.n_blocks * self.n_dense + self.n_subjects

    def tau_rows(self) -> np.ndarray:
        return self._tau_rows

    def design_matrix(self) -> np.ndarray:
        """Dense (n_rows, n_params) matrix; intended for small problems."""
        p = self.n_dense
        out = np.zeros((self.n_rows, self.n_params))
        for j in range(self.n_blocks):
            rows = self.block == j
            out[rows, j * p:(j + 1) * p] = self.dense[rows]
        has = self.subject >= 0
        out[has, self.n_blocks * p + self.subject[has]] += self.zval[has]
        return out

    def predict(self, coefficients: np.ndarray) -> np.ndarray:
        p = self.n_dense
        coefficients = np.asarray(coefficients, dtype=float)
        slopes = coefficients[: self.n_blocks * p].reshape(self.n_blocks, p)
        out = np.einsum("ij,ij->i", self.dense, slopes[self.block]) if p else np.zeros(self.n_rows)
        has = self.subject >= 0
        if self.n_subjects and has.any():
            alpha = coefficients[self.n_blocks * p:]
            out = out + np.where(has, self.zval * alpha[np.where(has, self.subject, 0)], 0.0)
        return out

    def residuals(self, coefficients: np.ndarray) -> np.ndarray:
        return self.response - self.predict(coefficients)

    def objective_value(self, coefficients: np.ndarray) -> float:
        r = self.residuals(coefficients)
        return float(np.sum(self.weight * r * (self._tau_rows - (r < 0))))


@dataclass(frozen=True)
class WqrSolution:
    """Solver output: coefficients, attained objective and diagnostics."""

    coefficients: np.ndarray
    objective: float
    iterations: int
    dual_gap: float
    residuals: np.ndarray


class _ArrowDesign:
    """Scaled design with slope-block / subject arrow structure."""

    def __init__(self, problem: WqrProblem, keep: np.ndarray):
        w = problem.weight[keep]
        self.X = problem.dense[keep] * w[:, None]
        self.zv = problem.zval[keep] * w
        self.c = problem.response[keep] * w
        self.tau = problem.tau_rows()[keep]
        self.block = problem.block[keep]
        self.subject = problem.subject[keep]
        self.J = problem.n_blocks
        self.p = problem.n_dense
        self.N = problem.n_subjects
        self.n = self.X.shape[0]
        self.m = self.J * self.p + self.N
        self.rows_by_block = (
            [np.arange(self.n)] if self.J == 1
            else [np.nonzero(self.block == j)[0] for j in range(self.J)]
        )
        self.has_sub = self.subject >= 0
        self.sub_rows = np.nonzero(self.has_sub)[0]
        self.sub_ids = self.subject[self.sub_rows]
        self.sub_z = self.zv[self.sub_rows]

    def check_identified(self):
        p, J = self.p, self.J
        for j, rows in enumerate(self.rows_by_block):
            if p == 0:
                continue
            norms = np.abs(self.X[rows]).sum(axis=0) if rows.size else np.zeros(p)
            bad = np.nonzero(norms == 0.0)[0]
            if bad.size:
                col = j * p + bad[0]
                raise SolverError(f"unidentified design column {col}", column=int(col))
        if self.N:
            counts = np.bincount(self.sub_ids, weights=np.abs(self.sub_z), minlength=self.N)
            bad = np.nonzero(counts == 0.0)[0]
            if bad.size:
                col = J * p + bad[0]
                raise SolverError(f"unidentified subject column {col}", column=int(col))

    def matvec(self, theta: np.ndarray) -> np.ndarray:
        slopes = theta[: self.J * self.p].reshape(self.J, self.p)
        if self.p:
            out = (self.X @ slopes[0]) if self.J == 1 else np.einsum(
                "ij,ij->i", self.X, slopes[self.block])
        else:
            out = np.zeros(self.n)
        if self.N and self.sub_rows.size:
            alpha = theta[self.J * self.p:]
            out[self.sub_rows] += self.sub_z * alpha[self.sub_ids]
        return out

    def rmatvec(self, v: np.ndarray) -> np.ndarray:
        out = np.empty(self.m)
        p = self.p
        for j, rows in enumerate(self.rows_by_block):
            if p:
                out[j * p:(j + 1) * p] = self.X[rows].T @ v[rows]
        if self.N:
            out[self.J * p:] = np.bincount(
                self.sub_ids, weights=self.sub_z * v[self.sub_rows], minlength=self.N)
        return out

    def normal_solver(self, q: np.ndarray):
        """Factor A Q A' (Q = diag(q) > 0) and return a solve closure."""
        p, J, N = self.p, self.J, self.N
        md = J * p
        if N:
            D = np.bincount(self.sub_ids, weights=(q[self.sub_rows] * self.sub_z ** 2),
                            minlength=N)
            if np.any(D <= 0):
                raise SolverError("degenerate subject block in normal matrix")
        if md:
            S = np.zeros((md, md))
            C = np.zeros((md, N)) if N else None
            for j, rows in enumerate(self.rows_by_block):
                Xj = self.X[rows]
                qj = q[rows]
                S[j * p:(j + 1) * p, j * p:(j + 1) * p] = Xj.T @ (Xj * qj[:, None])
                if N:
                    jr = rows[self.has_sub[rows]] if self.J > 1 else self.sub_rows
                    ids = self.subject[jr]
                    vals = q[jr] * self.zv[jr]
                    for l in range(p):
                        C[j * p + l] = np.bincount(ids, weights=vals * self.X[jr, l],
                                                   minlength=N)
            if N:
                CoverD = C / D
                S = S - CoverD @ C.T
            factor = None
            ridge = 0.0
            base = max(np.trace(S) / md, 1e-12)
            for attempt in range(4):
                try:
                    factor = cho_factor(S + ridge * np.eye(md), lower=True,
                                        check_finite=False)
                    break
                except LinAlgError:
                    ridge = base * (1e-11 * 100 ** attempt)
            if factor is None:
                raise SolverError("normal matrix factorization failed")

            def nsolve(rhs: np.ndarray) -> np.ndarray:
                rd, rs = rhs[:md], rhs[md:]
                if N:
                    yd = cho_solve(factor, rd - CoverD @ rs, check_finite=False)
                    ys = (rs - C.T @ yd) / D
                    return np.concatenate([yd, ys])
                return cho_solve(factor, rd, check_finite=False)
        else:
            def nsolve(rhs: np.ndarray) -> np.ndarray:
                return rhs / D
        return nsolve


def solve(problem: WqrProblem, *, tol: float = 1e-7, max_iter: int = 200,
          step_factor: float = 0.99995, zero_snap_tol: float = 1e-8) -> WqrSolution:
    """Minimize the weighted check loss by a primal-dual interior point.

    Convergence: relative duality gap below ``tol`` (default 1e-7) within
    ``max_iter`` iterations (default 200); otherwise ``SolverError``.  The
    subgradient condition |sum w a_j psi(r)| <= sum_{r=0} w |a_j| holds on
    every converged solution up to gap-level slack.

    Subject coefficients within ``zero_snap_tol`` of zero are snapped to
    exactly 0 when the problem carries penalty rows, reflecting the exact
    sparsity of the piecewise-linear penalty.
    """
    keep = problem.weight > 0
    A = _ArrowDesign(problem, keep)
    A.check_identified()
    n = A.n
    if n < 1:
        raise SolverError("no rows with positive weight")

    x = 1.0 - A.tau
    s = A.tau.copy()
    q0 = np.ones(n)
    y = A.normal_solver(q0)(A.rmatvec(A.c))
    r = A.c - A.matvec(y)
    eps_init = 1e-6
    tiny = np.abs(r) < eps_init
    z = np.maximum(r, 0.0) + np.where(tiny, eps_init, 0.0)
    w = np.maximum(-r, 0.0) + np.where(tiny, eps_init, 0.0)

    gap = x @ z + s @ w
    it = 0
    rel = np.inf
    while it < max_iter:
        obj = float(np.sum(r * (A.tau - (r < 0.0))))
        rel = gap / (1.0 + abs(obj))
        if rel < tol or gap < 1e-14 * n:
            break
        it += 1
        with np.errstate(divide="ignore", over="ignore"):
            q = 1.0 / (z / x + w / s)
        if not np.all(np.isfinite(q)):
            raise SolverError("numerical failure in interior-point scaling")
        nsolve = A.normal_solver(q)

        # predictor (affine) direction; r = c - A'y = w - z is maintained
        dy = nsolve(A.rmatvec(q * r))
        dx = q * (r - A.matvec(dy))
        dz = -z - (z / x) * dx
        dw = -w + (w / s) * dx

        ap = _step_length(x, s, dx, step_factor)
        ad = _step_length_dual(z, w, dz, dw, step_factor)

        if min(ap, ad) < 1.0:
            g_aff = ((x + ap * dx) @ (z + ad * dz) + (s - ap * dx) @ (w + ad * dw))
            mu = (gap / (2.0 * n)) * min(max(g_aff / gap, 0.0), 1.0) ** 3
            dxdz = dx * dz
            dsdw = -dx * dw
            xi = r + mu * (1.0 / x - 1.0 / s) - dxdz / x + dsdw / s
            dy = nsolve(A.rmatvec(q * xi))
            dx = q * (xi - A.matvec(dy))
            dz = (mu - dxdz) / x - z - (z / x) * dx
            dw = (mu - dsdw) / s - w + (w / s) * dx
            ap = _step_length(x, s, dx, step_factor)
            ad = _step_length_dual(z, w, dz, dw, step_factor)

        x += ap * dx
        s -= ap * dx
        y += ad * dy
        z += ad * dz
        w += ad * dw
        r = r - ad * A.matvec(dy)
        gap = x @ z + s @ w
        if not np.isfinite(gap):
            raise SolverError("interior-point iteration diverged")
    else:
        raise SolverError(
            f"no convergence within {max_iter} iterations (relative gap {rel:.3e})")

    theta = np.asarray(y, dtype=float)
    if problem.n_subjects and zero_snap_tol and problem.is_penalty.any():
        alpha = theta[problem.n_blocks * problem.n_dense:]
        alpha[np.abs(alpha) < zero_snap_tol] = 0.0
    resid = problem.residuals(theta)
    objective = float(np.sum(problem.weight * resid * (problem.tau_rows() - (resid < 0))))
    return WqrSolution(coefficients=theta, objective=objective,
                       iterations=it, dual_gap=float(rel), residuals=resid)


def _step_length(x, s, dx, beta):
    # x, s stay strictly positive, so both ratios are finite
    top = np.maximum(-dx / x, dx / s).max(initial=0.0)
    return 1.0 if top <= 0 else min(beta / top, 1.0)


def _step_length_dual(z, w, dz, dw, beta):
    with np.errstate(divide="ignore", invalid="ignore"):
        hz = np.where((dz < 0) & (z > 0), -dz / z, 0.0)
        hw = np.where((dw < 0) & (w > 0), -dw / w, 0.0)
    top = max(hz.max(initial=0.0), hw.max(initial=0.0))
    return 1.0 if top <= 0 else min(beta / top, 1.0)


def solve_enumerate(problem: WqrProblem, max_params: int = 12) -> WqrSolution:
    """Exact reference solver for tiny problems by basic-solution enumeration.

    Tries every parameter-sized subset of rows, fits theta through those
    rows exactly and keeps the subset with the smallest weighted objective.
    Exponential cost; guarded to small parameter counts.
    """
    m = problem.n_params
    if m > max_params:
        raise ValueError(f"enumeration limited to {max_params} parameters")
    X = problem.design_matrix()
    keep = np.nonzero(problem.weight >= 0)[0]
    best = None
    best_obj = np.inf
    scale = max(np.abs(X).max(initial=0.0), 1.0)
    for subset in itertools.combinations(range(len(keep)), m):
        sub = X[list(subset)]
        if abs(np.linalg.det(sub)) <= 1e-12 * scale ** m:
            continue
        theta = np.linalg.solve(sub, problem.response[list(subset)])
        r = problem.response - X @ theta
        obj = float(np.sum(problem.weight * r * (problem.tau_rows() - (r < 0))))
        if obj < best_obj:
            best_obj, best = obj, theta
    if best is None:
        raise SolverError("no full-rank row subset found")
    resid = problem.response - X @ best
    return WqrSolution(coefficients=best, objective=best_obj, iterations=0,
                       dual_gap=0.0, residuals=resid)


def _rmatvec_raw(problem: WqrProblem, v: np.ndarray) -> np.ndarray:
    """Unweighted-design transpose product: one entry per parameter."""
    out = np.empty(problem.n_params)
    p = problem.n_dense
    for j in range(problem.n_blocks):
        rows = problem.block == j
        if p:
            out[j * p:(j + 1) * p] = problem.dense[rows].T @ v[rows]
    if problem.n_subjects:
        has = problem.subject >= 0
        out[problem.n_blocks * p:] = np.bincount(
            problem.subject[has], weights=(problem.zval * v)[has],
            minlength=problem.n_subjects)
    return out


def estimating_equation(problem: WqrProblem, coefficients: np.ndarray) -> np.ndarray:
    """Normalized estimating-function value at ``coefficients``.

    Returns -(1/NT) * [ sum_data w * a * psi_tau(residual)
                        - sum_penalty w * a * psi_tau(z_i' alpha) ],
    one entry per parameter.  Because the objective is piecewise linear the
    value need not vanish at the optimum; each entry is bounded by the
    zero-residual slack (see ``subgradient_slack``).  Note the penalty-block
    sign follows the estimating-equation display, which differs from the
    subgradient of the objective on that block.
    """
    coefficients = np.asarray(coefficients, dtype=float)
    if coefficients.shape != (problem.n_params,):
        raise ValueError("coefficient vector has wrong length")
    fitted = problem.predict(coefficients)
    r = problem.response - fitted
    taur = problem.tau_rows()
    pen = problem.is_penalty
    psi = np.where(pen, taur - (fitted < 0.0), taur - (r < 0.0))
    v = problem.weight * np.where(pen, -psi, psi)
    return -_rmatvec_raw(problem, v) / problem.nt_norm


def subgradient_slack(problem: WqrProblem, coefficients: np.ndarray,
                      ztol: float = 1e-7) -> tuple[np.ndarray, np.ndarray]:
    """Per-column subgradient magnitude and its zero-residual slack bound.

    A coefficient vector is optimal iff lhs_j <= rhs_j for every column j,
    where residuals within ``ztol`` of zero are treated as exactly zero.
    """
    coefficients = np.asarray(coefficients, dtype=float)
    r = problem.residuals(coefficients)
    taur = problem.tau_rows()
    at_zero = np.abs(r) <= ztol
    psi = np.where(at_zero, 0.0, taur - (r < 0.0))
    lhs = np.abs(_rmatvec_raw(problem, problem.weight * psi))
    Xabs = np.abs(problem.dense)
    zabs = np.abs(problem.zval)
    wz = problem.weight * at_zero
    rhs = np.empty(problem.n_params)
    p = problem.n_dense
    for j in range(problem.n_blocks):
        rows = problem.block == j
        rhs[j * p:(j + 1) * p] = (wz[rows, None] * Xabs[rows]).sum(axis=0)
    if problem.n_subjects:
        has = problem.subject >= 0
        rhs[problem.n_blocks * p:] = np.bincount(
            problem.subject[has], weights=(wz * zabs)[has], minlength=problem.n_subjects)
    return lhs, rhs


def assemble_problem(dataset, weights: np.ndarray, tau: float, lam: float = 0.0, *,
                     intercept: bool = True, subjects: bool = True,
                     penalty_tau: float | None = None,
                     penalty_scale: float = 1.0) -> WqrProblem:
    """Build the row set for one panel quantile fit.

    One data row per observed cell with the given weight and design
    (treatment block, covariates with or without the constant, subject
    incidence when ``subjects``).  When ``subjects`` and ``lam > 0``, one
    penalty pseudo-row per subject with response 0 and weight
    lam * penalty_scale at level ``penalty_tau`` (default ``tau``).
    """
    i_idx, t_idx = dataset.observed_cells()
    w_cells = weights[i_idx, t_idx]
    pos = w_cells > 0
    i_idx, t_idx, w_cells = i_idx[pos], t_idx[pos], w_cells[pos]
    covars = dataset.covars if intercept else dataset.covars[:, :, 1:]
    dense = np.column_stack([
        dataset.treat[i_idx, t_idx, :], covars[i_idx, t_idx, :]])
    names = [f"d{j + 1}" for j in range(dataset.n_treat)]
    names += (["const"] if intercept else [])
    names += [f"x{j + 1}" for j in range(dataset.n_covars - 1)]
    resp = dataset.response[i_idx, t_idx]
    n_data = dense.shape[0]
    if subjects:
        subj = i_idx.astype(np.int64)
        n_sub = dataset.n_subjects
        names += [f"alpha_{i}" for i in range(n_sub)]
        if lam > 0:
            dense = np.vstack([dense, np.zeros((n_sub, dense.shape[1]))])
            resp = np.concatenate([resp, np.zeros(n_sub)])
            w_all = np.concatenate([w_cells, np.full(n_sub, lam * penalty_scale)])
            subj = np.concatenate([subj, np.arange(n_sub, dtype=np.int64)])
            pen = np.concatenate([np.zeros(n_data, bool), np.ones(n_sub, bool)])
            tau_rows = np.concatenate([
                np.full(n_data, tau),
                np.full(n_sub, tau if penalty_tau is None else penalty_tau)])
        else:
            w_all, pen, tau_rows = w_cells, np.zeros(n_data, bool), np.full(n_data, tau)
        return WqrProblem(dense=dense, response=resp, weight=w_all, tau=tau_rows,
                          subject=subj, n_subjects=n_sub, is_penalty=pen,
                          nt_norm=float(dataset.n_subjects * dataset.n_periods),
                          names=names)
    return WqrProblem(dense=dense, response=resp, weight=w_cells, tau=tau,
                      nt_norm=float(dataset.n_subjects * dataset.n_periods),
                      names=names)


def assemble_wpqr(dataset, pi_hat, tau: float, lam: float) -> WqrProblem:
    """Rows of the inverse-probability-weighted penalized quantile problem.

    One data row per observed cell with weight s_it / pi_hat_it and design
    (treatment, covariates including the constant, subject incidence), plus
    one penalty pseudo-row per subject realizing the absolute-value penalty
    lam * |alpha_i| (a tau = 1/2 row with weight 2 * lam, since
    |a| = 2 * rho_{1/2}(a)), which keeps the problem a linear program.
    """
    if lam <= 0:
        raise ValueError("the penalized estimator requires lambda > 0")
    from .propensity import inverse_weights

    weights = inverse_weights(pi_hat, dataset)
    return assemble_problem(dataset, weights, tau, lam, intercept=True, subjects=True,
                            penalty_tau=0.5, penalty_scale=2.0)
