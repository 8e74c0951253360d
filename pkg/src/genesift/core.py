"""Shared data types: expression matrices, pipeline configuration and stage reports."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from typing import Any, Sequence

import numpy as np

INPUT_MODES = ("log_ratios", "two_channel")
REPLICATE_POLICIES = ("mean", "first", "drop_all")
SD_MODES = ("sample", "population")
STAGE_NAMES = (
    "ingest",
    "normalize",
    "missing",
    "significance",
    "replicates",
    "fold_change",
    "logsigmoid",
    "cv",
)


class GenesiftError(Exception):
    """Base class for all package errors."""


class ValidationError(GenesiftError, ValueError):
    """A value violates a structural invariant."""


class ConfigError(ValidationError):
    """A pipeline configuration field is out of range."""


def _frozen_array(a, dtype) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


def _as_2d(a, shape) -> np.ndarray:
    arr = np.array(a, dtype=float)
    if arr.size == 0 and shape[0] == 0:
        arr = arr.reshape(shape)
    return arr


def _shape_violations(gene_ids, sample_labels, arrays: dict[str, Any]) -> list[str]:
    out = []
    expected = (len(gene_ids), len(sample_labels))
    for name, arr in arrays.items():
        shape = np.shape(arr)
        if shape != expected:
            out.append(f"{name} dimension mismatch: {shape} != {expected}")
    if len(sample_labels) == 0:
        out.append("no sample labels")
    if len(set(sample_labels)) != len(sample_labels):
        out.append("duplicate sample labels")
    return out


def validate_matrix(matrix) -> list[str]:
    """Return the list of invariant violations of `matrix` (empty when valid).

    Works on anything exposing ``gene_ids``, ``sample_labels``, ``values`` and
    ``missing``, so half-built objects can be diagnosed too.
    """
    problems = _shape_violations(
        matrix.gene_ids,
        matrix.sample_labels,
        {"values": matrix.values, "mask": matrix.missing},
    )
    if problems and any("mismatch" in p for p in problems):
        return problems
    values = np.asarray(matrix.values, dtype=float)
    missing = np.asarray(matrix.missing, dtype=bool)
    bad = ~np.isfinite(values) & ~missing
    if bad.any():
        i, j = np.argwhere(bad)[0]
        problems.append(f"non-finite value at ({int(i)}, {int(j)})")
    return problems


@dataclass(frozen=True, eq=False)
class ExpressionMatrix:
    """Genes x samples matrix of log-ratios (or squashed values) with a missing mask.

    Masked cells are stored as NaN so an accidental read of an absent value
    propagates instead of passing for a real zero.
    """

    gene_ids: tuple[str, ...]
    sample_labels: tuple[str, ...]
    values: np.ndarray
    missing: np.ndarray = None

    def __post_init__(self):
        object.__setattr__(self, "gene_ids", tuple(str(g) for g in self.gene_ids))
        object.__setattr__(self, "sample_labels", tuple(str(s) for s in self.sample_labels))
        shape = (len(self.gene_ids), len(self.sample_labels))
        values = _as_2d(self.values, shape)
        if self.missing is None:
            missing = np.zeros(values.shape, dtype=bool)
        else:
            missing = np.array(self.missing, dtype=bool)
        problems = validate_matrix(
            _Fields(self.gene_ids, self.sample_labels, values, missing)
        )
        if problems:
            raise ValidationError("; ".join(problems))
        values = np.where(missing, np.nan, values)
        object.__setattr__(self, "values", _frozen_array(values, float))
        object.__setattr__(self, "missing", _frozen_array(missing, bool))

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def n_genes(self) -> int:
        return len(self.gene_ids)

    def take_rows(self, rows: Sequence[int]) -> "ExpressionMatrix":
        rows = np.asarray(rows, dtype=int)
        return ExpressionMatrix(
            [self.gene_ids[i] for i in rows],
            self.sample_labels,
            self.values[rows] if len(rows) else np.empty((0, len(self.sample_labels))),
            self.missing[rows] if len(rows) else np.empty((0, len(self.sample_labels)), bool),
        )

    def __eq__(self, other):
        if not isinstance(other, ExpressionMatrix):
            return NotImplemented
        return (
            self.gene_ids == other.gene_ids
            and self.sample_labels == other.sample_labels
            and np.array_equal(self.missing, other.missing)
            and np.array_equal(self.values, other.values, equal_nan=True)
        )

    __hash__ = None

    def __repr__(self):
        return f"ExpressionMatrix({self.n_genes} genes x {len(self.sample_labels)} samples)"


@dataclass(frozen=True)
class _Fields:
    gene_ids: Any
    sample_labels: Any
    values: Any
    missing: Any


@dataclass(frozen=True, eq=False)
class ChannelPairMatrix:
    """Raw two-channel intensities: red (cy5, sample) and green (cy3, control)."""

    gene_ids: tuple[str, ...]
    sample_labels: tuple[str, ...]
    red: np.ndarray
    green: np.ndarray
    missing: np.ndarray = None

    def __post_init__(self):
        object.__setattr__(self, "gene_ids", tuple(str(g) for g in self.gene_ids))
        object.__setattr__(self, "sample_labels", tuple(str(s) for s in self.sample_labels))
        shape = (len(self.gene_ids), len(self.sample_labels))
        red = _as_2d(self.red, shape)
        green = _as_2d(self.green, shape)
        if self.missing is None:
            missing = ~(np.isfinite(red) & np.isfinite(green))
        else:
            missing = np.array(self.missing, dtype=bool)
        problems = _shape_violations(
            self.gene_ids, self.sample_labels, {"red": red, "green": green, "mask": missing}
        )
        if problems:
            raise ValidationError("; ".join(problems))
        present = ~missing
        if not (np.isfinite(red[present]).all() and np.isfinite(green[present]).all()):
            raise ValidationError("non-finite intensity at an unmasked cell")
        if (red[present] < 0).any() or (green[present] < 0).any():
            raise ValidationError("negative channel intensity")
        object.__setattr__(self, "red", _frozen_array(np.where(missing, np.nan, red), float))
        object.__setattr__(self, "green", _frozen_array(np.where(missing, np.nan, green), float))
        object.__setattr__(self, "missing", _frozen_array(missing, bool))

    @property
    def n_genes(self) -> int:
        return len(self.gene_ids)

    def __repr__(self):
        return f"ChannelPairMatrix({self.n_genes} genes x {len(self.sample_labels)} samples)"


def _check_range(name, value, lo=None, hi=None, lo_open=False, hi_open=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigError(f"{name} must be a finite number, got {value!r}")
    lo_bad = lo is not None and (value <= lo if lo_open else value < lo)
    hi_bad = hi is not None and (value >= hi if hi_open else value > hi)
    if lo_bad or hi_bad:
        left = "(" if lo_open else "["
        right = ")" if hi_open else "]"
        lo_s = "-inf" if lo is None else f"{lo:g}"
        hi_s = "inf" if hi is None else f"{hi:g}"
        raise ConfigError(f"{name}={value!r} outside {left}{lo_s}, {hi_s}{right}")


def _check_choice(name, value, choices):
    if value not in choices:
        raise ConfigError(f"{name}={value!r} not one of {', '.join(choices)}")


def _check_bool(name, value):
    if not isinstance(value, bool):
        raise ConfigError(f"{name} must be a boolean, got {value!r}")


def _check_int(name, value, lo):
    if isinstance(value, bool) or not isinstance(value, int) or value < lo:
        raise ConfigError(f"{name} must be an integer >= {lo}, got {value!r}")


@dataclass(frozen=True)
class PipelineConfig:
    """Every threshold and policy the filtering pipeline depends on.

    Defaults follow the published run: drop rows with more than 40% missing,
    keep |mean log2 ratio| >= 1 (two-fold), keep CV below 36%.
    """

    input_mode: str = "log_ratios"
    lowess_enabled: bool = False
    lowess_frac: float = 0.3
    lowess_iterations: int = 3
    missing_max_frac: float = 0.4
    significance_enabled: bool = True
    significance_alpha: float = 0.05
    replicate_policy: str = "mean"
    fold_mean_threshold: float = 1.0
    cv_max_percent: float = 36.0
    sd_mode: str = "sample"
    rng_seed: int = 0

    def __post_init__(self):
        _check_choice("input_mode", self.input_mode, INPUT_MODES)
        _check_bool("lowess_enabled", self.lowess_enabled)
        _check_range("lowess_frac", self.lowess_frac, 0, 1, lo_open=True)
        _check_int("lowess_iterations", self.lowess_iterations, 0)
        _check_range("missing_max_frac", self.missing_max_frac, 0, 1)
        _check_bool("significance_enabled", self.significance_enabled)
        _check_range("significance_alpha", self.significance_alpha, 0, 1, lo_open=True, hi_open=True)
        _check_choice("replicate_policy", self.replicate_policy, REPLICATE_POLICIES)
        _check_range("fold_mean_threshold", self.fold_mean_threshold, 0, lo_open=True)
        _check_range("cv_max_percent", self.cv_max_percent, 0, lo_open=True)
        _check_choice("sd_mode", self.sd_mode, SD_MODES)
        _check_int("rng_seed", self.rng_seed, 0)
        for name in ("lowess_frac", "missing_max_frac", "significance_alpha",
                     "fold_mean_threshold", "cv_max_percent"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @classmethod
    def field_names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in fields(cls))

    def to_dict(self) -> dict[str, Any]:
        return {name: getattr(self, name) for name in self.field_names()}


@dataclass(frozen=True)
class StageReport:
    """Provenance for one stage. `dropped` holds one (gene_id, reason) entry per removed row."""

    stage_name: str
    genes_in: int
    genes_out: int
    dropped: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        if self.stage_name not in STAGE_NAMES:
            raise ValidationError(f"unknown stage {self.stage_name!r}")
        object.__setattr__(self, "dropped", tuple((str(g), str(r)) for g, r in self.dropped))
        if self.genes_out != self.genes_in - len(self.dropped):
            raise ValidationError(
                f"{self.stage_name}: genes_out {self.genes_out} != "
                f"genes_in {self.genes_in} - dropped {len(self.dropped)}"
            )

    @property
    def dropped_ids(self) -> list[str]:
        return [g for g, _ in self.dropped]


@dataclass(frozen=True)
class FilterOutcome:
    kept: ExpressionMatrix
    report: StageReport


@dataclass(frozen=True)
class PipelineResult:
    """Final matrix, ordered stage reports and the CV table of the survivors.

    `screened_cv` carries the CV of every gene that entered the CV stage,
    which is what the dot plot shows.
    """

    final: ExpressionMatrix
    stages: tuple[StageReport, ...]
    cv_table: tuple[tuple[str, float], ...]
    screened_cv: tuple[tuple[str, float], ...] = field(default=())

    def stage(self, name: str) -> StageReport:
        for report in self.stages:
            if report.stage_name == name:
                return report
        raise KeyError(name)
