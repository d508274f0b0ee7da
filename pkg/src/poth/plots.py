"""Dependency-free SVG charts for hierarchy reports.

All charts are 800 x 500 with margins left 170 (treatment labels), right
30, top 40, bottom 60. Rendering is pure string assembly from report
values with fixed numeric formatting, so identical reports produce
byte-identical SVG.
"""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

from .errors import ValidationError
from .metrics import HierarchyReport, best_k_order

WIDTH = 800
HEIGHT = 500
MARGIN_LEFT = 170
MARGIN_RIGHT = 30
MARGIN_TOP = 40
MARGIN_BOTTOM = 60

PLOT_KINDS = ("scores", "residuals", "cumulative")

_AXIS = "#444444"
_GRID = "#dddddd"
_BAR_POS = "#2b6cb0"
_BAR_NEG = "#c05621"
_LINE = "#2b6cb0"


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def _header(title: str) -> list[str]:
    return [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.0f}" y="24" text-anchor="middle" font-size="16">{escape(title)}</text>',
    ]


def _x_axis(parts: list[str], x0: float, x1: float, to_x, ticks, label: str) -> None:
    y = HEIGHT - MARGIN_BOTTOM
    parts.append(
        f'<line x1="{_fmt(MARGIN_LEFT)}" y1="{_fmt(y)}" x2="{_fmt(WIDTH - MARGIN_RIGHT)}" '
        f'y2="{_fmt(y)}" stroke="{_AXIS}"/>'
    )
    for tick in ticks:
        tx = to_x(tick)
        parts.append(f'<line x1="{_fmt(tx)}" y1="{_fmt(y)}" x2="{_fmt(tx)}" y2="{_fmt(y + 5)}" stroke="{_AXIS}"/>')
        parts.append(
            f'<text x="{_fmt(tx)}" y="{_fmt(y + 20)}" text-anchor="middle" font-size="11">{tick:g}</text>'
        )
    parts.append(
        f'<text x="{_fmt((MARGIN_LEFT + WIDTH - MARGIN_RIGHT) / 2)}" y="{_fmt(y + 42)}" '
        f'text-anchor="middle" font-size="13">{escape(label)}</text>'
    )


def _label_rows(n: int) -> tuple[float, float]:
    """Vertical band height and top offset per treatment row."""
    span = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM
    return span / n, MARGIN_TOP


def _hierarchy_order(report: HierarchyReport) -> np.ndarray:
    order, _ = best_k_order(report.scores)
    return order


def render_scores(report: HierarchyReport) -> str:
    labels = report.scores.treatments.labels
    values = report.scores.scores
    order = _hierarchy_order(report)
    parts = _header(f"{report.scores.kind} by treatment (POTH {report.poth:.3f})")
    row_h, top = _label_rows(len(order))
    span = WIDTH - MARGIN_LEFT - MARGIN_RIGHT

    def to_x(v: float) -> float:
        return MARGIN_LEFT + v * span

    for tick in (0.0, 0.25, 0.5, 0.75, 1.0):
        tx = to_x(tick)
        parts.append(
            f'<line x1="{_fmt(tx)}" y1="{_fmt(top)}" x2="{_fmt(tx)}" '
            f'y2="{_fmt(HEIGHT - MARGIN_BOTTOM)}" stroke="{_GRID}"/>'
        )
    for row, idx in enumerate(order):
        y = top + row * row_h + row_h * 0.2
        h = row_h * 0.6
        v = float(values[idx])
        parts.append(
            f'<rect x="{_fmt(to_x(0.0))}" y="{_fmt(y)}" width="{_fmt(v * span)}" '
            f'height="{_fmt(h)}" fill="{_BAR_POS}"/>'
        )
        parts.append(
            f'<text x="{_fmt(MARGIN_LEFT - 8)}" y="{_fmt(y + h * 0.75)}" text-anchor="end" '
            f'font-size="12">{escape(labels[idx])}</text>'
        )
        parts.append(
            f'<text x="{_fmt(to_x(v) + 4)}" y="{_fmt(y + h * 0.75)}" font-size="11">{v:.3f}</text>'
        )
    _x_axis(parts, 0.0, 1.0, to_x, (0.0, 0.25, 0.5, 0.75, 1.0), f"{report.scores.kind} value")
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render_residuals(report: HierarchyReport) -> str:
    if report.residuals is None:
        raise ValidationError("report has no residuals to plot")
    labels = report.scores.treatments.labels
    order = _hierarchy_order(report)
    values = [report.residuals[labels[i]] for i in order]
    limit = max(abs(v) for v in values)
    limit = limit * 1.1 if limit > 0 else 1.0

    parts = _header(f"leave-one-out residuals (POTH {report.poth:.3f})")
    row_h, top = _label_rows(len(order))
    span = WIDTH - MARGIN_LEFT - MARGIN_RIGHT

    def to_x(v: float) -> float:
        return MARGIN_LEFT + (v + limit) / (2 * limit) * span

    zero_x = to_x(0.0)
    parts.append(
        f'<line x1="{_fmt(zero_x)}" y1="{_fmt(top)}" x2="{_fmt(zero_x)}" '
        f'y2="{_fmt(HEIGHT - MARGIN_BOTTOM)}" stroke="{_AXIS}" stroke-dasharray="4 3"/>'
    )
    for row, idx in enumerate(order):
        y = top + row * row_h + row_h * 0.2
        h = row_h * 0.6
        v = report.residuals[labels[idx]]
        x_left = min(zero_x, to_x(v))
        width = abs(to_x(v) - zero_x)
        color = _BAR_POS if v >= 0 else _BAR_NEG
        parts.append(
            f'<rect x="{_fmt(x_left)}" y="{_fmt(y)}" width="{_fmt(width)}" '
            f'height="{_fmt(h)}" fill="{color}"/>'
        )
        parts.append(
            f'<text x="{_fmt(MARGIN_LEFT - 8)}" y="{_fmt(y + h * 0.75)}" text-anchor="end" '
            f'font-size="12">{escape(labels[idx])}</text>'
        )
    ticks = (-limit, -limit / 2, 0.0, limit / 2, limit)
    _x_axis(parts, -limit, limit, to_x, tuple(round(t, 4) for t in ticks), "POTH residual")
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render_cumulative(report: HierarchyReport) -> str:
    if report.cumulative is None:
        raise ValidationError("report has no cumulative series to plot")
    n = report.scores.n
    ks = list(range(2, n + 1))
    values = [report.cumulative[k] for k in ks]

    parts = _header(f"cumulative POTH of the best k treatments (POTH {report.poth:.3f})")
    span_x = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    span_y = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM

    def to_x(k: float) -> float:
        if n == 2:
            return MARGIN_LEFT + span_x / 2
        return MARGIN_LEFT + (k - 2) / (n - 2) * span_x

    def to_y(v: float) -> float:
        return MARGIN_TOP + (1.0 - v) * span_y

    for tick in (0.0, 0.25, 0.5, 0.75, 1.0):
        ty = to_y(tick)
        parts.append(
            f'<line x1="{_fmt(MARGIN_LEFT)}" y1="{_fmt(ty)}" x2="{_fmt(WIDTH - MARGIN_RIGHT)}" '
            f'y2="{_fmt(ty)}" stroke="{_GRID}"/>'
        )
        parts.append(
            f'<text x="{_fmt(MARGIN_LEFT - 8)}" y="{_fmt(ty + 4)}" text-anchor="end" '
            f'font-size="11">{tick:g}</text>'
        )
    if len(ks) > 1:
        points = " ".join(f"{_fmt(to_x(k))},{_fmt(to_y(v))}" for k, v in zip(ks, values))
        parts.append(f'<polyline points="{points}" fill="none" stroke="{_LINE}" stroke-width="2"/>')
    for k, v in zip(ks, values):
        parts.append(
            f'<circle cx="{_fmt(to_x(k))}" cy="{_fmt(to_y(v))}" r="4" fill="{_LINE}"/>'
        )
    _x_axis(parts, 2, n, to_x, tuple(ks), "k (best-k treatments by score)")
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render_plot(report: HierarchyReport, kind: str) -> bytes:
    """Render one of the chart kinds to standalone SVG bytes."""
    renderer = {
        "scores": render_scores,
        "residuals": render_residuals,
        "cumulative": render_cumulative,
    }.get(kind)
    if renderer is None:
        raise ValidationError(f"unknown plot kind {kind!r}; expected one of {', '.join(PLOT_KINDS)}")
    return renderer(report).encode("utf-8")
