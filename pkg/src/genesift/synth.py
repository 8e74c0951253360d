"""Synthetic expression matrices with planted marker genes.

The generator uses its own PRNG (xorshift64*, seeded through splitmix64) so
a fixture is reproducible from (spec, config) alone, independent of numpy
or platform random streams.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ExpressionMatrix, GenesiftError, PipelineConfig
from .stats import StatsError, coefficient_of_variation, t_pvalue, t_statistic
from .transform import logsigmoid

_MASK64 = (1 << 64) - 1
MARKER_FOLD_MARGIN = 0.5
MARKER_CV_MARGIN = 2.0
_MAX_ATTEMPTS = 1000


class SynthError(GenesiftError, ValueError):
    pass


def splitmix64(x: int) -> tuple[int, int]:
    """One splitmix64 step: returns (new_state, output)."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x, z ^ (z >> 31)


class XorShift64Star:
    """xorshift64* (shifts 12, 25, 27; multiplier 0x2545F4914F6CDD1D)."""

    MULTIPLIER = 0x2545F4914F6CDD1D

    def __init__(self, seed: int):
        if seed < 0:
            raise ValueError("seed must be unsigned")
        _, state = splitmix64(seed & _MASK64)
        self.state = state or 0x9E3779B97F4A7C15

    def next_u64(self) -> int:
        x = self.state
        x ^= x >> 12
        x ^= (x << 25) & _MASK64
        x ^= x >> 27
        self.state = x
        return (x * self.MULTIPLIER) & _MASK64

    def random(self) -> float:
        """Uniform double in [0, 1) from the top 53 bits."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.random()

    def randbelow(self, n: int) -> int:
        if n <= 0:
            raise ValueError("n must be positive")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            r = self.next_u64()
            if r < limit:
                return r % n

    def normal(self) -> float:
        """Standard normal via Box-Muller (cosine branch only)."""
        u1 = 1.0 - self.random()
        u2 = self.random()
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

    def shuffle(self, items: list) -> None:
        for i in range(len(items) - 1, 0, -1):
            j = self.randbelow(i + 1)
            items[i], items[j] = items[j], items[i]


@dataclass(frozen=True)
class SynthSpec:
    n_genes: int = 100
    n_samples: int = 12
    marker_fraction: float = 0.1
    missing_fraction: float = 0.05
    duplicate_count: int = 0
    noise_sd: float = 0.25
    seed: int = 0

    def __post_init__(self):
        if self.n_genes < 1 or self.n_samples < 1:
            raise SynthError("n_genes and n_samples must be positive")
        if not 0 <= self.marker_fraction <= 1:
            raise SynthError("marker_fraction outside [0, 1]")
        if not 0 <= self.missing_fraction < 1:
            raise SynthError("missing_fraction outside [0, 1)")
        if self.duplicate_count < 0 or self.noise_sd < 0 or self.seed < 0:
            raise SynthError("duplicate_count, noise_sd and seed must be non-negative")


def _survives(values: np.ndarray, missing: np.ndarray, config: PipelineConfig) -> bool:
    """Evaluate every row predicate of the pipeline on a single row."""
    m = values.size
    if missing.sum() / m > config.missing_max_frac:
        return False
    row = np.where(missing, 0.0, values)
    if config.significance_enabled:
        if (row == row[0]).all():
            if row[0] == 0:
                return False
        else:
            try:
                p = t_pvalue(t_statistic(row), m - 1)
            except StatsError:
                return False
            if p > config.significance_alpha:
                return False
    if abs(row.sum() / m) < config.fold_mean_threshold:
        return False
    cv = coefficient_of_variation(logsigmoid(row), config.sd_mode)
    return cv < config.cv_max_percent


def _centred_noise(rng: XorShift64Star, m: int, sd: float) -> np.ndarray:
    z = np.array([rng.normal() for _ in range(m)])
    return sd * (z - z.sum() / m)


def _marker_row(rng, m, config, noise_sd):
    for _ in range(_MAX_ATTEMPTS):
        sign = 1.0 if rng.random() < 0.5 else -1.0
        level = config.fold_mean_threshold + MARKER_FOLD_MARGIN + 0.5 * rng.random()
        row = sign * level + _centred_noise(rng, m, noise_sd)
        if abs(row.sum() / m) < config.fold_mean_threshold + MARKER_FOLD_MARGIN - 1e-9:
            continue
        if coefficient_of_variation(logsigmoid(row), config.sd_mode) >= config.cv_max_percent - MARKER_CV_MARGIN:
            continue
        if config.significance_enabled and not (row == row[0]).all():
            if t_pvalue(t_statistic(row), m - 1) > config.significance_alpha / 10:
                continue
        return row
    raise SynthError(
        f"cannot plant a marker with noise_sd={noise_sd} under cv_max={config.cv_max_percent}"
    )


def _sprinkle(rng, m, rate) -> np.ndarray:
    return np.array([rng.random() < rate for _ in range(m)], dtype=bool)


def _fold_violator(rng, m, config, spec):
    # mean of the zero-filled row is pinned inside (-threshold/2, threshold/2)
    target = config.fold_mean_threshold * (rng.random() - 0.5)
    missing = _sprinkle(rng, m, spec.missing_fraction)
    observed = int((~missing).sum())
    values = np.full(m, np.nan)
    if observed:
        noise = _centred_noise(rng, observed, max(spec.noise_sd, 0.5))
        values[~missing] = target * m / observed + noise
    return values, missing


def _missing_violator(rng, m, config, spec):
    values = _marker_row(rng, m, config, spec.noise_sd)
    n_missing = math.floor(config.missing_max_frac * m) + 1
    n_missing += rng.randbelow(m - n_missing + 1)
    cells = list(range(m))
    rng.shuffle(cells)
    missing = np.zeros(m, dtype=bool)
    missing[cells[:n_missing]] = True
    return np.where(missing, np.nan, values), missing


def _cv_violator(rng, m, config, spec):
    level = config.fold_mean_threshold + MARKER_FOLD_MARGIN + rng.random()
    spread = 2.0 + 2.0 * rng.random()
    signs = [1.0 if k % 2 == 0 else -1.0 for k in range(m)]
    rng.shuffle(signs)
    values = level + spread * np.array(signs) + _centred_noise(rng, m, spec.noise_sd)
    missing = _sprinkle(rng, m, spec.missing_fraction)
    return np.where(missing, np.nan, values), missing


def generate_synthetic(spec: SynthSpec, config: PipelineConfig | None = None):
    """Build a matrix whose pipeline output is known in advance.

    Returns ``(matrix, ground_truth)``. Marker rows have no missing cells,
    |mean| at least 0.5 above the fold threshold, squashed CV at least 2
    points below the cut and (when the t-test is on) p <= alpha / 10.
    Every other row is checked at generation time to fail some predicate.
    Injected replicate rows reuse IDs of fold-change or missing-value
    violators and are themselves fold-change violators, so no merge policy
    can turn them into survivors.
    """
    config = config or PipelineConfig()
    m = spec.n_samples
    if m < 4:
        raise SynthError("n_samples must be >= 4")
    rng = XorShift64Star(spec.seed)
    n_markers = round(spec.marker_fraction * spec.n_genes)

    kinds = ["fold", "cv"]
    if math.floor(config.missing_max_frac * m) + 1 <= m:
        kinds.append("missing")
    builders = {"fold": _fold_violator, "cv": _cv_violator, "missing": _missing_violator}

    rows: list[tuple[str, np.ndarray, np.ndarray]] = []
    for _ in range(n_markers):
        rows.append(("marker", _marker_row(rng, m, config, spec.noise_sd), np.zeros(m, dtype=bool)))
    for _ in range(spec.n_genes - n_markers):
        kind = kinds[rng.randbelow(len(kinds))]
        for _ in range(_MAX_ATTEMPTS):
            values, missing = builders[kind](rng, m, config, spec)
            if not _survives(values, missing, config):
                break
            kind = "fold"
        else:
            raise SynthError("could not build a non-marker row that fails the filters")
        rows.append((kind, values, missing))
    rng.shuffle(rows)

    width = max(4, len(str(spec.n_genes)))
    ids = [f"G{k + 1:0{width}d}" for k in range(len(rows))]
    entries = list(zip(ids, rows))
    ground_truth = frozenset(gid for gid, (kind, _, _) in entries if kind == "marker")

    eligible = [gid for gid, (kind, _, _) in entries if kind in ("fold", "missing")]
    if spec.duplicate_count and not eligible:
        raise SynthError("no non-marker rows available to carry replicate IDs")
    for _ in range(spec.duplicate_count):
        gid = eligible[rng.randbelow(len(eligible))]
        values, missing = _fold_violator(rng, m, config, spec)
        pos = rng.randbelow(len(entries) + 1)
        entries.insert(pos, (gid, ("fold", values, missing)))

    gene_ids = [gid for gid, _ in entries]
    values = np.array([v for _, (_, v, _) in entries], dtype=float).reshape(len(entries), m)
    missing = np.array([mk for _, (_, _, mk) in entries], dtype=bool).reshape(len(entries), m)
    labels = [f"t{k}" for k in range(m)]
    return ExpressionMatrix(gene_ids, labels, values, missing), ground_truth
