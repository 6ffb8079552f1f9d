"""Panel data container, CSV ingestion and attrition-structure validation.

The panel is kept dense on a rectangular (subject, period) grid.  Responses
are only defined where the observation mask is 1; masked cells hold NaN so
that accidental use of an unobserved response surfaces immediately instead
of silently entering an estimate.  Covariates and treatment indicators are
required for every cell, observed or not.

Dropout is absorbing: once a subject leaves the panel it never returns, and
every subject is observed in the first period.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import PanelFormatError


class StreamRecord(NamedTuple):
    """Auxiliary response measurement taken at an irregular time.

    ``time`` is on the 1-based period axis: a record relevant for period t
    has time in (t-1, t].
    """

    subject: int
    time: float
    value: float


@dataclass(eq=False)
class PanelDataset:
    """Balanced-index panel with a monotone observation mask.

    Attributes
    ----------
    n_subjects, n_periods : int
        Grid dimensions N and T.
    response : (N, T) float array
        Outcome; NaN exactly where ``mask`` is 0.
    treat : (N, T, p_d) float array
        Treatment-indicator block (may have p_d = 0).
    covars : (N, T, p_x) float array
        Exogenous covariates; column 0 is identically 1.
    mask : (N, T) int8 array
        1 where the response is observed.
    streaming : tuple of StreamRecord, optional
        Sidecar sample of responses at irregular times, keyed by subject.
    """

    n_subjects: int
    n_periods: int
    response: np.ndarray
    treat: np.ndarray
    covars: np.ndarray
    mask: np.ndarray
    streaming: tuple[StreamRecord, ...] | None = None
    subject_labels: tuple = field(default=None, repr=False)

    def __post_init__(self):
        self.response = np.asarray(self.response, dtype=float)
        self.treat = np.asarray(self.treat, dtype=float)
        self.covars = np.asarray(self.covars, dtype=float)
        self.mask = np.asarray(self.mask, dtype=np.int8)
        for arr in (self.response, self.treat, self.covars, self.mask):
            arr.flags.writeable = False

    @property
    def n_treat(self) -> int:
        return self.treat.shape[2]

    @property
    def n_covars(self) -> int:
        return self.covars.shape[2]

    @property
    def n_observed(self) -> int:
        return int(self.mask.sum())

    def observed_cells(self) -> tuple[np.ndarray, np.ndarray]:
        """(subject, period) index arrays of the observed cells."""
        return np.nonzero(self.mask == 1)

    def design_blocks(self, cells=None) -> np.ndarray:
        """Stack (treat, covars) into one (n, p_d + p_x) matrix."""
        if cells is None:
            cells = self.observed_cells()
        i, t = cells
        return np.column_stack([self.treat[i, t, :], self.covars[i, t, :]])

    def equals(self, other: "PanelDataset") -> bool:
        return (
            self.n_subjects == other.n_subjects
            and self.n_periods == other.n_periods
            and np.array_equal(self.mask, other.mask)
            and np.array_equal(self.response, other.response, equal_nan=True)
            and np.array_equal(self.treat, other.treat)
            and np.array_equal(self.covars, other.covars)
            and (self.streaming or ()) == (other.streaming or ())
        )


@dataclass(frozen=True)
class AttritionSummary:
    """Per-period retention fractions and the overall share of missing cells."""

    retention: np.ndarray
    overall_missing: float


def validate(dataset: PanelDataset) -> list[str]:
    """Check every dataset invariant and describe each violation found.

    Returns an empty list exactly when the dataset is valid.  Violations
    name the subject/period involved (0-based indices).
    """
    out = []
    n, t_len = dataset.n_subjects, dataset.n_periods
    shapes_ok = dataset.response.shape == (n, t_len) and dataset.mask.shape == (n, t_len)
    if not shapes_ok:
        out.append("shape mismatch between mask/response and (n_subjects, n_periods)")
        return out
    bad_vals = ~np.isin(dataset.mask, (0, 1))
    if bad_vals.any():
        i, t = np.argwhere(bad_vals)[0]
        out.append(f"mask value outside {{0,1}} at subject {i}, period {t}")
    first = np.nonzero(dataset.mask[:, 0] == 0)[0]
    for i in first:
        out.append(f"first-period missing for subject {i}")
    if t_len > 1:
        nonmono = (dataset.mask[:, :-1] == 0) & (dataset.mask[:, 1:] == 1)
        for i, t in np.argwhere(nonmono):
            out.append(
                f"non-monotone mask for subject {i}: unobserved at period {t} "
                f"but observed at period {t + 1}"
            )
    resp_nan = np.isnan(dataset.response)
    mism = resp_nan != (dataset.mask == 0)
    for i, t in np.argwhere(mism):
        kind = "NaN response on observed cell" if resp_nan[i, t] else "numeric response on masked cell"
        out.append(f"{kind} at subject {i}, period {t}")
    for name, block in (("treat", dataset.treat), ("covars", dataset.covars)):
        if not np.isfinite(block).all():
            i, t = np.argwhere(~np.isfinite(block).all(axis=2))[0]
            out.append(f"non-finite {name} value at subject {i}, period {t}")
    if dataset.n_covars == 0:
        out.append("covariate block is empty; a constant column is required")
    elif not np.all(dataset.covars[:, :, 0] == 1.0):
        i, t = np.argwhere(dataset.covars[:, :, 0] != 1.0)[0]
        out.append(f"covars column 0 not identically 1 (subject {i}, period {t})")
    return out


def attrition_summary(dataset: PanelDataset) -> AttritionSummary:
    """Retention by period and the overall fraction of missing cells."""
    retention = dataset.mask.mean(axis=0)
    overall = 1.0 - dataset.mask.mean()
    return AttritionSummary(retention=retention, overall_missing=float(overall))


_DEFAULT_SCHEMA = {
    "subject": "subject_id",
    "period": "period",
    "response": "response",
}


def _block_columns(header: Sequence[str], prefix: str) -> list[str]:
    pat = re.compile(rf"^{re.escape(prefix)}(\d+)$")
    cols = [(int(m.group(1)), c) for c in header if (m := pat.match(c))]
    return [c for _, c in sorted(cols)]


def _sort_key(label: str):
    try:
        return (0, float(label), "")
    except ValueError:
        return (1, 0.0, label)


def load_panel(path, schema: dict | None = None, streaming_path=None) -> PanelDataset:
    """Read a long-format CSV into a dense panel.

    The file must carry one row per (subject, period) pair on a complete
    rectangular grid.  An empty response field marks an unobserved cell;
    covariate and treatment fields must always be filled.  Subjects are
    re-indexed 0..N-1 in sorted order of their labels.

    ``schema`` may rename the id columns (keys ``subject``, ``period``,
    ``response``) or list the block columns explicitly (keys ``treat``,
    ``covars``).  By default treatment columns are those named ``d1, d2,
    ...`` and covariates ``x1, x2, ...``.  If the covariate block has no
    leading constant column, one is prepended.
    """
    sch = dict(_DEFAULT_SCHEMA)
    if schema:
        sch.update(schema)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for key in ("subject", "period", "response"):
            if sch[key] not in header:
                raise PanelFormatError(f"missing required column {sch[key]!r}")
        treat_cols = sch.get("treat") or _block_columns(header, "d")
        covar_cols = sch.get("covars") or _block_columns(header, "x")
        if not covar_cols:
            raise PanelFormatError("no covariate columns found (expected x1, x2, ...)")
        rows = list(reader)
    if not rows:
        raise PanelFormatError("empty panel file")

    subjects = sorted({r[sch["subject"]] for r in rows}, key=_sort_key)
    periods = sorted({r[sch["period"]] for r in rows}, key=_sort_key)
    sub_idx = {s: k for k, s in enumerate(subjects)}
    per_idx = {p: k for k, p in enumerate(periods)}
    n, t_len = len(subjects), len(periods)

    response = np.full((n, t_len), np.nan)
    mask = np.zeros((n, t_len), dtype=np.int8)
    treat = np.full((n, t_len, len(treat_cols)), np.nan)
    covars = np.full((n, t_len, len(covar_cols)), np.nan)
    seen = np.zeros((n, t_len), dtype=bool)

    for r in rows:
        i = sub_idx[r[sch["subject"]]]
        t = per_idx[r[sch["period"]]]
        if seen[i, t]:
            raise PanelFormatError(
                f"duplicate row for subject {r[sch['subject']]!r}, period {r[sch['period']]!r}"
            )
        seen[i, t] = True
        resp = (r.get(sch["response"]) or "").strip()
        if resp:
            response[i, t] = float(resp)
            mask[i, t] = 1
        for j, c in enumerate(treat_cols):
            val = (r.get(c) or "").strip()
            if not val:
                raise PanelFormatError(
                    f"missing treatment value {c!r} for subject {r[sch['subject']]!r}, "
                    f"period {r[sch['period']]!r}"
                )
            treat[i, t, j] = float(val)
        for j, c in enumerate(covar_cols):
            val = (r.get(c) or "").strip()
            if not val:
                raise PanelFormatError(
                    f"missing covariate value {c!r} for subject {r[sch['subject']]!r}, "
                    f"period {r[sch['period']]!r}"
                )
            covars[i, t, j] = float(val)

    if not seen.all():
        i, t = np.argwhere(~seen)[0]
        raise PanelFormatError(
            f"non-rectangular index grid: no row for subject {subjects[i]!r}, "
            f"period {periods[t]!r}"
        )
    for i in range(n):
        if mask[i, 0] == 0:
            raise PanelFormatError(
                f"subject {subjects[i]!r} has no response in the first period"
            )
        drop = np.nonzero(mask[i] == 0)[0]
        if drop.size and mask[i, drop[0]:].any():
            t = drop[0]
            raise PanelFormatError(
                f"monotonicity violated for subject {subjects[i]!r}: missing at "
                f"period {periods[t]!r} but observed later"
            )
    if not np.all(covars[:, :, 0] == 1.0):
        covars = np.concatenate([np.ones((n, t_len, 1)), covars], axis=2)

    streaming = load_streaming(streaming_path, sub_idx) if streaming_path else None
    return PanelDataset(
        n_subjects=n,
        n_periods=t_len,
        response=response,
        treat=treat,
        covars=covars,
        mask=mask,
        streaming=streaming,
        subject_labels=tuple(subjects),
    )


def load_streaming(path, sub_idx: dict | None = None) -> tuple[StreamRecord, ...]:
    """Read the streaming-sample sidecar CSV (subject_id, h, w_value)."""
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for key in ("subject_id", "h", "w_value"):
            if key not in (reader.fieldnames or []):
                raise PanelFormatError(f"streaming file missing column {key!r}")
        for r in reader:
            label = r["subject_id"]
            if sub_idx is not None:
                if label not in sub_idx:
                    raise PanelFormatError(f"streaming record for unknown subject {label!r}")
                subject = sub_idx[label]
            else:
                subject = int(label)
            out.append(StreamRecord(subject, float(r["h"]), float(r["w_value"])))
    return tuple(out)


def _fmt(x: float) -> str:
    return repr(float(x))


def write_panel(dataset: PanelDataset, path, streaming_path=None) -> None:
    """Write the panel back to the long CSV format (bit-exact round trip).

    Subjects are written under their 0..N-1 index and periods as 1..T.
    """
    pd_, px = dataset.n_treat, dataset.n_covars
    header = (
        ["subject_id", "period", "response"]
        + [f"d{j + 1}" for j in range(pd_)]
        + [f"x{j + 1}" for j in range(px)]
    )
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(dataset.n_subjects):
            for t in range(dataset.n_periods):
                resp = _fmt(dataset.response[i, t]) if dataset.mask[i, t] else ""
                row = [str(i), str(t + 1), resp]
                row += [_fmt(v) for v in dataset.treat[i, t, :]]
                row += [_fmt(v) for v in dataset.covars[i, t, :]]
                writer.writerow(row)
    if streaming_path and dataset.streaming:
        write_streaming(dataset.streaming, streaming_path)


def write_streaming(records: Iterable[StreamRecord], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["subject_id", "h", "w_value"])
        for rec in records:
            writer.writerow([str(rec.subject), _fmt(rec.time), _fmt(rec.value)])
