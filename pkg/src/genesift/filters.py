"""Row filters of the pipeline.

Every filter takes an ExpressionMatrix and returns a FilterOutcome whose
report lists one (gene_id, reason) entry per removed row, in input order.
Kept rows keep their relative order.
"""

from __future__ import annotations

import logging

import numpy as np

from .core import ExpressionMatrix, FilterOutcome, GenesiftError, StageReport
from .stats import t_pvalue

log = logging.getLogger(__name__)


class FilterError(GenesiftError, ValueError):
    pass


def _fmt(x: float) -> str:
    return f"{x:g}"


def _require_filled(matrix: ExpressionMatrix, stage: str):
    if matrix.missing.any():
        raise FilterError(f"{stage} needs a matrix without missing cells; run the missing-value stage first")


def _keep(matrix: ExpressionMatrix, stage: str, keep: np.ndarray, reasons) -> FilterOutcome:
    keep = np.asarray(keep, dtype=bool)
    dropped = [(matrix.gene_ids[i], reasons(i)) for i in np.flatnonzero(~keep)]
    kept = matrix.take_rows(np.flatnonzero(keep))
    return FilterOutcome(kept, StageReport(stage, matrix.n_genes, kept.n_genes, tuple(dropped)))


def identity_outcome(matrix: ExpressionMatrix, stage: str) -> FilterOutcome:
    return FilterOutcome(matrix, StageReport(stage, matrix.n_genes, matrix.n_genes))


def filter_missing(matrix: ExpressionMatrix, max_frac: float = 0.4) -> FilterOutcome:
    """Drop rows missing more than `max_frac` of their cells; zero-fill the rest.

    A row exactly at the threshold is kept. Filled cells stand for "not
    expressed" and the output mask is all false.
    """
    if not 0 <= max_frac <= 1:
        raise FilterError(f"max_frac={max_frac} outside [0, 1]")
    n_cols = len(matrix.sample_labels)
    frac = matrix.missing.sum(axis=1) / n_cols
    keep = ~(frac > max_frac)
    reason = f"missing > {_fmt(max_frac)}"
    outcome = _keep(matrix, "missing", keep, lambda i: reason)
    kept = outcome.kept
    n_filled = int(kept.missing.sum())
    if n_filled:
        log.info("zero-filled %d missing cell(s)", n_filled)
    filled = ExpressionMatrix(
        kept.gene_ids,
        kept.sample_labels,
        np.where(kept.missing, 0.0, kept.values),
        np.zeros(kept.missing.shape, dtype=bool),
    )
    return FilterOutcome(filled, outcome.report)


def filter_significance(matrix: ExpressionMatrix, alpha: float = 0.05, enabled: bool = True) -> FilterOutcome:
    """Two-sided one-sample t-test of each row against zero; keep p <= alpha.

    Constant rows have no variance to test: a constant zero row is dropped,
    any other constant row is kept as a perfectly consistent signal.
    """
    if not enabled:
        return identity_outcome(matrix, "significance")
    n = len(matrix.sample_labels)
    if n < 2:
        raise FilterError("significance needs >= 2 time points")
    _require_filled(matrix, "significance")
    values = matrix.values
    means = values.sum(axis=1) / n
    dev = values - means[:, None]
    sds = np.sqrt((dev * dev).sum(axis=1) / (n - 1))
    constant = (values == values[:, :1]).all(axis=1) if matrix.n_genes else np.zeros(0, bool)

    keep = np.zeros(matrix.n_genes, dtype=bool)
    pvals = np.ones(matrix.n_genes)
    for i in range(matrix.n_genes):
        if constant[i] or sds[i] == 0:
            keep[i] = means[i] != 0
            continue
        t = means[i] / (sds[i] / np.sqrt(n))
        pvals[i] = t_pvalue(float(t), n - 1)
        keep[i] = pvals[i] <= alpha

    def reason(i):
        if constant[i] or sds[i] == 0:
            return "constant zero"
        return f"p > {_fmt(alpha)}"

    return _keep(matrix, "significance", keep, reason)


def dedupe_replicates(matrix: ExpressionMatrix, policy: str = "mean") -> FilterOutcome:
    """Collapse rows sharing a gene ID into one row at the first occurrence.

    ``mean`` averages the replicate rows column-wise, ``first`` keeps the
    first row, ``drop_all`` removes every row of a replicated ID.
    """
    if policy not in ("mean", "first", "drop_all"):
        raise FilterError(f"unknown replicate policy {policy!r}")
    groups: dict[str, list[int]] = {}
    for i, gid in enumerate(matrix.gene_ids):
        groups.setdefault(gid, []).append(i)
    if all(len(rows) == 1 for rows in groups.values()):
        return identity_outcome(matrix, "replicates")

    keep = np.zeros(matrix.n_genes, dtype=bool)
    values = np.array(matrix.values)
    missing = np.array(matrix.missing)
    for rows in groups.values():
        if len(rows) == 1:
            keep[rows[0]] = True
        elif policy != "drop_all":
            keep[rows[0]] = True
            if policy == "mean":
                block = matrix.values[rows]
                present = ~matrix.missing[rows]
                counts = present.sum(axis=0)
                sums = np.where(present, block, 0.0).sum(axis=0)
                with np.errstate(invalid="ignore", divide="ignore"):
                    values[rows[0]] = np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)
                missing[rows[0]] = counts == 0
    merged = ExpressionMatrix(matrix.gene_ids, matrix.sample_labels, values, missing)
    reason = {"mean": "replicate merged", "first": "replicate discarded", "drop_all": "replicated"}[policy]
    return _keep(merged, "replicates", keep, lambda i: reason)


def filter_fold_change(matrix: ExpressionMatrix, threshold: float = 1.0) -> FilterOutcome:
    """Keep rows whose mean log2 ratio is at least `threshold` in magnitude.

    With threshold 1 this keeps genes at least two-fold up (mean >= 1) or
    two-fold down (mean <= -1).
    """
    _require_filled(matrix, "fold_change")
    n = len(matrix.sample_labels)
    means = matrix.values.sum(axis=1) / n
    keep = np.abs(means) >= threshold
    reason = f"abs mean < {_fmt(threshold)}"
    return _keep(matrix, "fold_change", keep, lambda i: reason)


def row_cvs(matrix: ExpressionMatrix, mode: str = "sample") -> np.ndarray:
    """Coefficient of variation (percent) of every row."""
    n = len(matrix.sample_labels)
    if n < 2:
        raise FilterError("CV filter needs >= 2 time points")
    if mode not in ("sample", "population"):
        raise FilterError(f"unknown sd mode {mode!r}")
    _require_filled(matrix, "cv")
    values = matrix.values
    means = values.sum(axis=1) / n
    if (means == 0).any():
        raise FilterError("CV undefined at zero mean")
    dev = values - means[:, None]
    ddof = 1 if mode == "sample" else 0
    sds = np.sqrt((dev * dev).sum(axis=1) / (n - ddof))
    return sds / means * 100.0


def filter_cv(matrix: ExpressionMatrix, cv_max: float = 36.0, mode: str = "sample"):
    """Keep rows with CV strictly below `cv_max` percent.

    Returns ``(outcome, cv_table)`` where cv_table pairs each kept gene with
    its CV, in matrix order.
    """
    cvs = row_cvs(matrix, mode)
    keep = cvs < cv_max
    reason = f"cv >= {_fmt(cv_max)}"
    outcome = _keep(matrix, "cv", keep, lambda i: reason)
    cv_table = [(matrix.gene_ids[i], float(cvs[i])) for i in np.flatnonzero(keep)]
    return outcome, cv_table
