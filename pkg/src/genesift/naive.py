"""Straight-line reimplementation of the filtering stages, used as a test oracle.

Deliberately shares no stage code with `genesift.filters`: plain Python
loops over lists, textbook formulas, and its own p-value route (Simpson
quadrature of the t density instead of the incomplete beta function).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .core import ExpressionMatrix, PipelineConfig

_SIMPSON_PANELS = 400


@dataclass
class NaiveResult:
    final_ids: list[str]
    drops: dict[str, list[tuple[str, str]]] = field(default_factory=dict)
    cvs: list[float] = field(default_factory=list)


def _two_sided_p(t: float, df: int) -> float:
    # 1 - 2 * integral of the t density over [0, |t|]; with s = sqrt(df) tan(u)
    # the integrand becomes c * sqrt(df) * cos(u)^(df - 1) on [0, atan(|t| / sqrt(df))]
    if t == 0:
        return 1.0
    log_c = math.lgamma((df + 1) / 2) - math.lgamma(df / 2) - 0.5 * math.log(df * math.pi)
    scale = math.exp(log_c) * math.sqrt(df)
    b = math.atan(abs(t) / math.sqrt(df))
    n = _SIMPSON_PANELS
    h = b / n
    total = 1.0 + math.cos(b) ** (df - 1)
    for k in range(1, n):
        total += (4 if k % 2 else 2) * math.cos(k * h) ** (df - 1)
    return max(0.0, 1.0 - 2.0 * scale * total * h / 3.0)


def _fmt(x: float) -> str:
    return f"{x:g}"


def naive_pipeline(matrix: ExpressionMatrix, config: PipelineConfig | None = None) -> NaiveResult:
    config = config or PipelineConfig()
    if config.input_mode != "log_ratios":
        raise ValueError("naive_pipeline handles log-ratio input only")
    m = len(matrix.sample_labels)
    rows = []
    for i in range(matrix.n_genes):
        cells = []
        for j in range(m):
            cells.append(None if matrix.missing[i][j] else float(matrix.values[i][j]))
        rows.append((matrix.gene_ids[i], cells))
    drops: dict[str, list[tuple[str, str]]] = {}

    # missing values
    kept = []
    dropped = []
    for gid, cells in rows:
        n_missing = 0
        for c in cells:
            if c is None:
                n_missing += 1
        if n_missing / m > config.missing_max_frac:
            dropped.append((gid, f"missing > {_fmt(config.missing_max_frac)}"))
        else:
            filled = []
            for c in cells:
                filled.append(0.0 if c is None else c)
            kept.append((gid, filled))
    drops["missing"] = dropped
    rows = kept

    # significance
    kept = []
    dropped = []
    if config.significance_enabled and rows and m < 2:
        raise ValueError("significance needs >= 2 time points")
    for gid, cells in rows:
        if not config.significance_enabled:
            kept.append((gid, cells))
            continue
        all_same = True
        for c in cells:
            if c != cells[0]:
                all_same = False
        total = 0.0
        for c in cells:
            total += c
        mu = total / m
        ss = 0.0
        for c in cells:
            ss += (c - mu) * (c - mu)
        sd = math.sqrt(ss / (m - 1))
        if all_same or sd == 0:
            if mu != 0:
                kept.append((gid, cells))
            else:
                dropped.append((gid, "constant zero"))
            continue
        t = mu / (sd / math.sqrt(m))
        if _two_sided_p(t, m - 1) <= config.significance_alpha:
            kept.append((gid, cells))
        else:
            dropped.append((gid, f"p > {_fmt(config.significance_alpha)}"))
    drops["significance"] = dropped
    rows = kept

    # replicates
    counts: dict[str, int] = {}
    for gid, _ in rows:
        counts[gid] = counts.get(gid, 0) + 1
    kept = []
    dropped = []
    seen: dict[str, int] = {}
    policy = config.replicate_policy
    reason = {"mean": "replicate merged", "first": "replicate discarded", "drop_all": "replicated"}[policy]
    for gid, cells in rows:
        if counts[gid] == 1:
            kept.append((gid, cells))
        elif policy == "drop_all":
            dropped.append((gid, reason))
        elif gid not in seen:
            seen[gid] = len(kept)
            kept.append((gid, list(cells)))
        else:
            dropped.append((gid, reason))
    if policy == "mean":
        for gid, pos in seen.items():
            sums = [0.0] * m
            for other, cells in rows:
                if other == gid:
                    for j in range(m):
                        sums[j] += cells[j]
            kept[pos] = (gid, [s / counts[gid] for s in sums])
    drops["replicates"] = dropped
    rows = kept

    # fold change
    kept = []
    dropped = []
    for gid, cells in rows:
        total = 0.0
        for c in cells:
            total += c
        if abs(total / m) >= config.fold_mean_threshold:
            kept.append((gid, cells))
        else:
            dropped.append((gid, f"abs mean < {_fmt(config.fold_mean_threshold)}"))
    drops["fold_change"] = dropped
    rows = kept

    # log-sigmoid
    squashed = []
    for gid, cells in rows:
        out = []
        for c in cells:
            if c >= 0:
                out.append(1.0 / (1.0 + math.exp(-c)))
            else:
                e = math.exp(c)
                out.append(e / (1.0 + e))
        squashed.append((gid, out))
    rows = squashed

    # coefficient of variation
    kept = []
    dropped = []
    cvs = []
    divisor = m - 1 if config.sd_mode == "sample" else m
    for gid, cells in rows:
        total = 0.0
        for c in cells:
            total += c
        mu = total / m
        ss = 0.0
        for c in cells:
            ss += (c - mu) ** 2
        cv = math.sqrt(ss / divisor) / mu * 100.0
        if cv < config.cv_max_percent:
            kept.append(gid)
            cvs.append(cv)
        else:
            dropped.append((gid, f"cv >= {_fmt(config.cv_max_percent)}"))
    drops["cv"] = dropped
    return NaiveResult(kept, drops, cvs)
