"""Scalar statistics: mean, SD, coefficient of variation and the one-sample t-test."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import GenesiftError

_CF_MAX_ITER = 200
_CF_EPS = 1e-14
_TINY = 1e-300


class StatsError(GenesiftError, ValueError):
    pass


@dataclass(frozen=True)
class RowStats:
    mean: float
    sd: float
    cv_percent: float
    count: int


def _as_array(xs) -> np.ndarray:
    return np.asarray(xs, dtype=float).ravel()


def mean(xs: Sequence[float]) -> float:
    arr = _as_array(xs)
    if arr.size == 0:
        raise StatsError("empty sample")
    return float(arr.sum() / arr.size)


def std_dev(xs: Sequence[float], mode: str = "sample") -> float:
    """Standard deviation; ``mode`` is "sample" (n - 1 divisor) or "population" (n)."""
    arr = _as_array(xs)
    if mode == "sample":
        if arr.size < 2:
            raise StatsError("sample SD needs >= 2 values")
        ddof = 1
    elif mode == "population":
        if arr.size < 1:
            raise StatsError("empty sample")
        ddof = 0
    else:
        raise StatsError(f"unknown sd mode {mode!r}")
    dev = arr - arr.sum() / arr.size
    return math.sqrt(float((dev * dev).sum()) / (arr.size - ddof))


def coefficient_of_variation(xs: Sequence[float], mode: str = "sample") -> float:
    """SD / mean x 100."""
    m = mean(xs)
    if m == 0:
        raise StatsError("CV undefined at zero mean")
    return std_dev(xs, mode) / m * 100.0


def row_stats(xs: Sequence[float], mode: str = "sample") -> RowStats:
    arr = _as_array(xs)
    return RowStats(mean(arr), std_dev(arr, mode), coefficient_of_variation(arr, mode), arr.size)


def t_statistic(xs: Sequence[float]) -> float:
    """One-sample t against a zero mean: mean / (SD / sqrt(n))."""
    arr = _as_array(xs)
    if arr.size < 2:
        raise StatsError("t statistic needs >= 2 values")
    sd = std_dev(arr, "sample")
    if sd == 0:
        raise StatsError("degenerate: zero variance")
    return mean(arr) / (sd / math.sqrt(arr.size))


def _beta_cf(a: float, b: float, x: float) -> float:
    # modified Lentz evaluation of the incomplete beta continued fraction
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise StatsError(f"incomplete beta did not converge (a={a}, b={b}, x={x})")


def incomplete_beta(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b)."""
    if a <= 0 or b <= 0:
        raise StatsError("incomplete beta needs a > 0 and b > 0")
    if not 0.0 <= x <= 1.0:
        raise StatsError(f"x={x} outside [0, 1]")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cf(a, b, x) / a
    return 1.0 - front * _beta_cf(b, a, 1.0 - x) / b


def t_pvalue(t: float, df: int) -> float:
    """Two-sided P(|T_df| >= |t|) for Student's t with `df` degrees of freedom."""
    if df < 1:
        raise StatsError("df must be >= 1")
    if not math.isfinite(t):
        raise StatsError("t must be finite")
    x = df / (df + t * t)
    p = incomplete_beta(df / 2.0, 0.5, x)
    return min(1.0, max(0.0, p))
