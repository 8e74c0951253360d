"""Runs the seven filtering stages in their fixed order and collects provenance."""

from __future__ import annotations

import logging

from .core import (
    ChannelPairMatrix,
    ExpressionMatrix,
    FilterOutcome,
    GenesiftError,
    PipelineConfig,
    PipelineResult,
    StageReport,
)
from . import filters, transform

log = logging.getLogger(__name__)

PIPELINE_STAGES = (
    "normalize",
    "missing",
    "significance",
    "replicates",
    "fold_change",
    "logsigmoid",
    "cv",
)


class StageError(GenesiftError):
    """A stage failed; `stage` names it and `__cause__` holds the original error."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"stage {stage!r} failed: {message}")
        self.stage = stage


def _normalize(data, config: PipelineConfig) -> FilterOutcome:
    if isinstance(data, ChannelPairMatrix):
        if config.input_mode != "two_channel":
            raise GenesiftError("two-channel input requires input_mode='two_channel'")
        if config.lowess_enabled:
            matrix = transform.lowess_normalize(data, config.lowess_frac, config.lowess_iterations)
        else:
            matrix = transform.log_ratio_matrix(data)
    elif isinstance(data, ExpressionMatrix):
        if config.input_mode != "log_ratios":
            raise GenesiftError("log-ratio input requires input_mode='log_ratios'")
        matrix = data
    else:
        raise TypeError(f"unsupported input {type(data).__name__}")
    return filters.identity_outcome(matrix, "normalize")


def _apply(stage: str, data, config: PipelineConfig):
    cv_table = None
    if stage == "normalize":
        outcome = _normalize(data, config)
    elif stage == "missing":
        outcome = filters.filter_missing(data, config.missing_max_frac)
    elif stage == "significance":
        outcome = filters.filter_significance(data, config.significance_alpha, config.significance_enabled)
    elif stage == "replicates":
        outcome = filters.dedupe_replicates(data, config.replicate_policy)
    elif stage == "fold_change":
        outcome = filters.filter_fold_change(data, config.fold_mean_threshold)
    elif stage == "logsigmoid":
        outcome = filters.identity_outcome(transform.logsigmoid_matrix(data), "logsigmoid")
    elif stage == "cv":
        outcome, cv_table = filters.filter_cv(data, config.cv_max_percent, config.sd_mode)
    else:
        raise ValueError(f"unknown stage {stage!r}; expected one of {', '.join(PIPELINE_STAGES)}")
    return outcome, cv_table


def run_stage(matrix, stage: str, config: PipelineConfig) -> FilterOutcome:
    """Run one stage in isolation, exactly as it runs inside the pipeline."""
    if stage not in PIPELINE_STAGES:
        raise ValueError(f"unknown stage {stage!r}; expected one of {', '.join(PIPELINE_STAGES)}")
    try:
        outcome, _ = _apply(stage, matrix, config)
    except GenesiftError as exc:
        raise StageError(stage, str(exc)) from exc
    return outcome


def run_pipeline(data, config: PipelineConfig | None = None) -> PipelineResult:
    """Filter `data` down to consistently, strongly differentially expressed genes.

    `data` is an ExpressionMatrix of log2 ratios (input_mode "log_ratios")
    or a ChannelPairMatrix of raw intensities ("two_channel"). An empty
    matrix at any point is not an error; later stages just see no rows.
    """
    config = config or PipelineConfig()
    reports: list[StageReport] = []
    current = data
    cv_table: list = []
    screened: list = []
    for stage in PIPELINE_STAGES:
        if stage == "cv":
            try:
                cvs = filters.row_cvs(current, config.sd_mode)
            except GenesiftError as exc:
                raise StageError(stage, str(exc)) from exc
            screened = [(g, float(c)) for g, c in zip(current.gene_ids, cvs)]
        try:
            outcome, table = _apply(stage, current, config)
        except GenesiftError as exc:
            raise StageError(stage, str(exc)) from exc
        reports.append(outcome.report)
        log.debug("%s: %d -> %d", stage, outcome.report.genes_in, outcome.report.genes_out)
        current = outcome.kept
        if table is not None:
            cv_table = table
    return PipelineResult(current, tuple(reports), tuple(cv_table), tuple(screened))
