"""Output renderers: filtered-gene table, CV dot plot (SVG) and JSON run summary."""

from __future__ import annotations

import json
from dataclasses import dataclass
from decimal import ROUND_HALF_EVEN, Decimal
from typing import IO, Sequence
from xml.sax.saxutils import escape

from .core import GenesiftError, PipelineConfig, PipelineResult

MAX_LABELLED_POINTS = 60


class ReportError(GenesiftError, ValueError):
    pass


def format_cv(cv: float) -> str:
    """Two decimals, round-half-to-even on the shortest decimal form of `cv`."""
    return str(Decimal(repr(float(cv))).quantize(Decimal("0.01"), rounding=ROUND_HALF_EVEN))


def render_gene_table(cv_table: Sequence[tuple[str, float]], sink: IO[str], delimiter: str = "\t") -> None:
    sink.write(f"gene_id{delimiter}cv\n")
    for gene_id, cv in cv_table:
        sink.write(f"{gene_id}{delimiter}{format_cv(cv)}\n")


def read_gene_table(source: IO[str], delimiter: str = "\t") -> list[tuple[str, float]]:
    """Inverse of render_gene_table (CVs come back at 2-decimal precision)."""
    lines = [ln.rstrip("\r\n") for ln in source if ln.strip()]
    if not lines:
        raise ReportError("empty gene table")
    out = []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(delimiter)
        if len(parts) != 2:
            raise ReportError(f"line {lineno}: expected 2 fields, found {len(parts)}")
        try:
            out.append((parts[0], float(parts[1])))
        except ValueError:
            raise ReportError(f"line {lineno}: bad CV value {parts[1]!r}") from None
    return out


@dataclass(frozen=True)
class PlotSpec:
    width_px: int = 800
    height_px: int = 500
    threshold_percent: float = 36.0
    point_radius_px: float = 3.0
    margin_top: int = 30
    margin_right: int = 20
    margin_bottom: int = 50
    margin_left: int = 60

    def __post_init__(self):
        if self.width_px <= 0 or self.height_px <= 0 or self.point_radius_px <= 0:
            raise ReportError("plot sizes must be positive")
        if min(self.margin_top, self.margin_right, self.margin_bottom, self.margin_left) < 0:
            raise ReportError("margins must be non-negative")
        if self.plot_width <= 0 or self.plot_height <= 0:
            raise ReportError("margins leave no drawable area")

    @property
    def plot_width(self) -> int:
        return self.width_px - self.margin_left - self.margin_right

    @property
    def plot_height(self) -> int:
        return self.height_px - self.margin_top - self.margin_bottom


def _f(x: float) -> str:
    return f"{x:.2f}"


def y_range(cvs: Sequence[float], threshold: float) -> tuple[float, float]:
    lo = min([*cvs, threshold]) * 0.98
    hi = max([*cvs, threshold]) * 1.02
    if hi <= lo:
        lo, hi = lo - 1.0, hi + 1.0
    return lo, hi


def render_dot_plot_svg(points: Sequence[tuple[object, float]], spec: PlotSpec | None, sink: IO[str]) -> None:
    """Dot plot of CV (%) against input position, with the threshold as a thick rule."""
    spec = spec or PlotSpec()
    cvs = [float(cv) for _, cv in points]
    lo, hi = y_range(cvs, spec.threshold_percent)
    x0, y0 = spec.margin_left, spec.margin_top
    pw, ph = spec.plot_width, spec.plot_height
    n = len(points)

    def sy(v):
        return y0 + ph - (v - lo) / (hi - lo) * ph

    def sx(i):
        return x0 + (i + 0.5) / n * pw

    out = [
        '<?xml version="1.0" encoding="UTF-8" standalone="yes"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{spec.width_px}" '
        f'height="{spec.height_px}" viewBox="0 0 {spec.width_px} {spec.height_px}">',
        '<rect x="0" y="0" width="100%" height="100%" fill="white"/>',
        f'<g class="axes" stroke="black" stroke-width="1">'
        f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y0 + ph}"/>'
        f'<line x1="{x0}" y1="{y0 + ph}" x2="{x0 + pw}" y2="{y0 + ph}"/></g>',
    ]
    ticks = ['<g class="ticks" font-family="sans-serif" font-size="10" text-anchor="end">']
    for k in range(5):
        v = lo + (hi - lo) * k / 4
        ticks.append(
            f'<line x1="{x0 - 4}" y1="{_f(sy(v))}" x2="{x0}" y2="{_f(sy(v))}" stroke="black"/>'
            f'<text x="{x0 - 6}" y="{_f(sy(v) + 3)}">{_f(v)}</text>'
        )
    ticks.append("</g>")
    out.extend(ticks)
    out.append(
        f'<text x="{_f(x0 + pw / 2)}" y="{spec.height_px - 10}" font-family="sans-serif" '
        f'font-size="12" text-anchor="middle">gene index</text>'
    )
    out.append(
        f'<text x="14" y="{_f(y0 + ph / 2)}" font-family="sans-serif" font-size="12" '
        f'text-anchor="middle" transform="rotate(-90 14 {_f(y0 + ph / 2)})">CV (%)</text>'
    )
    yt = _f(sy(spec.threshold_percent))
    out.append(
        f'<line class="threshold" x1="{x0}" y1="{yt}" x2="{x0 + pw}" y2="{yt}" '
        f'stroke="black" stroke-width="3"/>'
    )
    out.append('<g class="points" fill="steelblue">')
    for i, cv in enumerate(cvs):
        out.append(f'<circle cx="{_f(sx(i))}" cy="{_f(sy(cv))}" r="{_f(spec.point_radius_px)}"/>')
    out.append("</g>")
    if 0 < n <= MAX_LABELLED_POINTS:
        out.append('<g class="labels" font-family="sans-serif" font-size="8" text-anchor="middle">')
        for i, (label, _) in enumerate(points):
            out.append(f'<text x="{_f(sx(i))}" y="{y0 + ph + 12}">{escape(str(label))}</text>')
        out.append("</g>")
    out.append("</svg>")
    sink.write("\n".join(out) + "\n")


def summary_dict(result: PipelineResult, config: PipelineConfig | None = None) -> dict:
    genes_in = result.stages[0].genes_in if result.stages else 0
    genes_out = result.final.n_genes
    return {
        "stages": [
            {
                "stage": r.stage_name,
                "in": r.genes_in,
                "out": r.genes_out,
                "dropped": [{"id": g, "reason": why} for g, why in r.dropped],
            }
            for r in result.stages
        ],
        "final": [{"id": g, "cv": cv} for g, cv in result.cv_table],
        "genes_in": genes_in,
        "genes_out": genes_out,
        "selectivity": genes_out / genes_in if genes_in else None,
        "config": config.to_dict() if config is not None else None,
    }


def render_summary(result: PipelineResult, sink: IO[str], config: PipelineConfig | None = None) -> None:
    """Stable-key-order JSON summary of a run."""
    json.dump(summary_dict(result, config), sink, indent=2, allow_nan=False)
    sink.write("\n")
