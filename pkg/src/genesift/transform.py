"""Value transforms: log2 ratios, MA coordinates, LOWESS normalization, log-sigmoid."""

from __future__ import annotations

import logging
import math
import sys
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import ChannelPairMatrix, ExpressionMatrix, GenesiftError

log = logging.getLogger(__name__)

# largest double below 1 and smallest normal double: the squash never reaches 0 or 1
_SIGMOID_HI = 1.0 - 2.0 ** -53
_SIGMOID_LO = sys.float_info.min


class TransformError(GenesiftError, ValueError):
    pass


@dataclass(frozen=True)
class MAPoint:
    m: float  # log2(R/G)
    a: float  # 0.5 * log2(R*G)


def log2_ratio(red: float, green: float) -> float | None:
    """log2(red / green), or None when either channel is zero or absent."""
    if red is None or green is None or math.isnan(red) or math.isnan(green):
        return None
    if red < 0 or green < 0:
        raise TransformError("negative channel intensity")
    if red == 0 or green == 0:
        log.debug("zero channel intensity (red=%r, green=%r): ratio missing", red, green)
        return None
    return math.log2(red) - math.log2(green)


def compute_ma(red: float, green: float) -> MAPoint:
    if not (red > 0 and green > 0):
        raise TransformError(f"MA coordinates need positive channels, got ({red}, {green})")
    lr, lg = math.log2(red), math.log2(green)
    return MAPoint(m=lr - lg, a=0.5 * (lr + lg))


def _bisquare(u: np.ndarray) -> np.ndarray:
    w = np.clip(1.0 - u * u, 0.0, None)
    return w * w


def _local_fit(xw, yw, w, x0) -> float:
    if yw.min() == yw.max():
        # a flat window fits to itself; the weighted mean would round
        return float(yw[0])
    sw = w.sum()
    if sw <= 0:
        return float(yw.mean())
    xbar = (w * xw).sum() / sw
    ybar = (w * yw).sum() / sw
    dx = xw - xbar
    sxx = (w * dx * dx).sum()
    spread = xw.max() - xw.min()
    if spread == 0 or sxx <= (1e-10 * spread) ** 2 * sw:
        return float(ybar)
    slope = (w * dx * (yw - ybar)).sum() / sxx
    return float(ybar + slope * (x0 - xbar))


def _smooth_sorted(x: np.ndarray, y: np.ndarray, k: int, robust: np.ndarray) -> np.ndarray:
    n = x.size
    fitted = np.empty(n)
    lo = 0
    for i in range(n):
        xi = x[i]
        # the k nearest neighbours of a sorted point form a contiguous window
        while lo + k < n and xi - x[lo] > x[lo + k] - xi:
            lo += 1
        h = max(xi - x[lo], x[lo + k - 1] - xi)
        left, right = lo, lo + k
        while left > 0 and xi - x[left - 1] <= h:
            left -= 1
        while right < n and x[right] - xi <= h:
            right += 1
        xw = x[left:right]
        yw = y[left:right]
        if h > 0:
            u = np.abs(xw - xi) / h
            w = np.clip(1.0 - u ** 3, 0.0, None) ** 3
        else:
            w = np.ones(xw.size)
        fitted[i] = _local_fit(xw, yw, w * robust[left:right], xi)
    return fitted


def lowess_fit(points: Sequence[tuple[float, float]], frac: float = 0.3, iterations: int = 3) -> list[float]:
    """Robust locally weighted linear smoother.

    Each point is fitted from its ceil(frac * n) nearest neighbours by |dx|
    (ties at the window edge all included) with tricube weights; every
    robustness pass reweights by the bisquare of residuals over 6 x MAD.
    Returns fitted values in input order.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    n = pts.shape[0]
    if n < 2:
        raise TransformError("LOWESS needs at least 2 points")
    if not (0 < frac <= 1):
        raise TransformError(f"frac={frac} outside (0, 1]")
    if iterations < 0:
        raise TransformError("iterations must be >= 0")
    k = math.ceil(frac * n)
    if k < 2:
        raise TransformError(f"frac={frac} leaves a window of {k} point(s) out of {n}")
    if not np.isfinite(pts).all():
        raise TransformError("LOWESS points must be finite")

    order = np.argsort(pts[:, 0], kind="stable")
    x = pts[order, 0]
    y = pts[order, 1]
    robust = np.ones(n)
    fitted = _smooth_sorted(x, y, k, robust)
    scale = max(float(np.abs(y).max()), 1.0)
    for _ in range(iterations):
        resid = y - fitted
        s = float(np.median(np.abs(resid)))
        if s <= 1e-12 * scale:
            break
        robust = _bisquare(resid / (6.0 * s))
        fitted = _smooth_sorted(x, y, k, robust)

    out = np.empty(n)
    out[order] = fitted
    return out.tolist()


def lowess_normalize(channels: ChannelPairMatrix, frac: float = 0.3, iterations: int = 3) -> ExpressionMatrix:
    """Remove intensity-dependent dye bias column by column.

    For every sample the MA points of spots with both channels > 0 are
    smoothed (M against A) and the fitted trend is subtracted from M. Spots
    with a zero or absent channel become missing.
    """
    red, green = channels.red, channels.green
    usable = ~channels.missing & (red > 0) & (green > 0)
    n_zero = int((~channels.missing & ~usable).sum())
    if n_zero:
        log.info("%d spot(s) with a zero channel marked missing", n_zero)
    values = np.full(red.shape, np.nan)
    with np.errstate(divide="ignore", invalid="ignore"):
        lr = np.log2(red)
        lg = np.log2(green)
    for j, label in enumerate(channels.sample_labels):
        rows = np.flatnonzero(usable[:, j])
        if rows.size < 2:
            raise TransformError(f"column {label!r} has {rows.size} usable spot(s); LOWESS needs >= 2")
        m = lr[rows, j] - lg[rows, j]
        a = 0.5 * (lr[rows, j] + lg[rows, j])
        trend = np.asarray(lowess_fit(np.column_stack([a, m]), frac, iterations))
        values[rows, j] = m - trend
    return ExpressionMatrix(channels.gene_ids, channels.sample_labels, values, ~usable)


def log_ratio_matrix(channels: ChannelPairMatrix) -> ExpressionMatrix:
    """Plain log2(R/G) per cell without any bias correction."""
    red, green = channels.red, channels.green
    usable = ~channels.missing & (red > 0) & (green > 0)
    values = np.full(red.shape, np.nan)
    values[usable] = np.log2(red[usable]) - np.log2(green[usable])
    return ExpressionMatrix(channels.gene_ids, channels.sample_labels, values, ~usable)


def _squash(x: np.ndarray) -> np.ndarray:
    e = np.exp(-np.abs(x))
    out = np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    return np.clip(out, _SIGMOID_LO, _SIGMOID_HI)


def logsigmoid(x):
    """1 / (1 + exp(-x)), evaluated without overflow and kept strictly inside (0, 1).

    Accepts a scalar or an array; float64 saturation is clamped to the
    nearest representable values inside the open interval.
    """
    arr = np.asarray(x, dtype=float)
    if not np.isfinite(arr).all():
        raise TransformError("logsigmoid input must be finite")
    out = _squash(arr)
    return float(out) if out.ndim == 0 else out


def logsigmoid_matrix(matrix: ExpressionMatrix) -> ExpressionMatrix:
    present = ~matrix.missing
    values = np.full(matrix.values.shape, np.nan)
    values[present] = _squash(matrix.values[present])
    return ExpressionMatrix(matrix.gene_ids, matrix.sample_labels, values, matrix.missing)
