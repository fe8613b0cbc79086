# apps/core/charts.py
"""
SVG charts for the result CSVs. Geometry is computed here; the markup lives in
templates/reports/*.svg. Every chart uses a fixed 800x500 viewBox.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

from django.template.loader import render_to_string

WIDTH = 800
HEIGHT = 500
MARGIN_LEFT = 70
MARGIN_RIGHT = 170
MARGIN_TOP = 50
MARGIN_BOTTOM = 60
TICKS = 5
PALETTE = (
    "#1f77b4",
    "#ff7f0e",
    "#2ca02c",
    "#d62728",
    "#9467bd",
    "#8c564b",
    "#e377c2",
    "#7f7f7f",
)


@dataclass(frozen=True)
class Series:
    label: str
    points: tuple[tuple[float, float], ...]


@dataclass(frozen=True)
class Panel:
    title: str
    bars: tuple[tuple[str, float], ...]


def _fmt(value: float) -> str:
    return f"{value:.1f}"


def _ticks(lo: float, hi: float, count: int = TICKS) -> list[float]:
    if hi == lo:
        return [lo]
    step = (hi - lo) / (count - 1)
    return [lo + i * step for i in range(count)]


def _span(values: Sequence[float], pad_zero: bool = False) -> tuple[float, float]:
    lo, hi = min(values), max(values)
    if pad_zero:
        lo = min(lo, 0.0)
    if hi == lo:
        hi = lo + 1.0
    return lo, hi


def line_chart(
    title: str,
    series: Sequence[Series],
    *,
    x_label: str = "",
    y_label: str = "",
    y_range: tuple[float, float] | None = None,
) -> str:
    xs = [x for s in series for x, _ in s.points] or [0.0, 1.0]
    ys = [y for s in series for _, y in s.points] or [0.0, 1.0]
    x_lo, x_hi = _span(xs)
    y_lo, y_hi = y_range or _span(ys)
    plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM

    def sx(x: float) -> float:
        return MARGIN_LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w

    def sy(y: float) -> float:
        return MARGIN_TOP + (y_hi - y) / (y_hi - y_lo) * plot_h

    lines = [
        {
            "label": s.label,
            "color": PALETTE[i % len(PALETTE)],
            "points": " ".join(f"{_fmt(sx(x))},{_fmt(sy(y))}" for x, y in s.points),
            "markers": [{"x": _fmt(sx(x)), "y": _fmt(sy(y))} for x, y in s.points],
            "legend_y": MARGIN_TOP + 20 * i,
        }
        for i, s in enumerate(series)
    ]
    context = {
        "width": WIDTH,
        "height": HEIGHT,
        "title": title,
        "x_label": x_label,
        "y_label": y_label,
        "left": MARGIN_LEFT,
        "right": WIDTH - MARGIN_RIGHT,
        "top": MARGIN_TOP,
        "bottom": HEIGHT - MARGIN_BOTTOM,
        "legend_x": WIDTH - MARGIN_RIGHT + 15,
        "x_ticks": [{"pos": _fmt(sx(v)), "label": f"{v:g}"} for v in _ticks(x_lo, x_hi)],
        "y_ticks": [{"pos": _fmt(sy(v)), "label": f"{v:.2f}"} for v in _ticks(y_lo, y_hi)],
        "lines": lines,
    }
    return render_to_string("reports/line_chart.svg", context)


def bar_panels(title: str, panels: Sequence[Panel]) -> str:
    """Side-by-side bar panels, each with its own value axis starting at zero."""
    count = max(len(panels), 1)
    panel_w = (WIDTH - MARGIN_LEFT) / count
    bottom = HEIGHT - MARGIN_BOTTOM
    plot_h = bottom - MARGIN_TOP
    rendered = []
    for p_index, panel in enumerate(panels):
        values = [v for _, v in panel.bars] or [0.0]
        lo, hi = _span(values, pad_zero=True)
        left = MARGIN_LEFT + p_index * panel_w
        slot = (panel_w - 30) / max(len(panel.bars), 1)

        def sy(y: float, lo=lo, hi=hi) -> float:
            return MARGIN_TOP + (hi - y) / (hi - lo) * plot_h

        bars = []
        for b_index, (label, value) in enumerate(panel.bars):
            top, base = sorted((sy(value), sy(0.0)))
            x = left + b_index * slot + slot * 0.15
            bars.append(
                {
                    "label": label,
                    "value": f"{value:.4g}",
                    "x": _fmt(x),
                    "y": _fmt(top),
                    "width": _fmt(slot * 0.7),
                    "height": _fmt(base - top),
                    "center": _fmt(x + slot * 0.35),
                    "color": PALETTE[b_index % len(PALETTE)],
                }
            )
        rendered.append(
            {
                "title": panel.title,
                "left": _fmt(left),
                "right": _fmt(left + panel_w - 30),
                "center": _fmt(left + (panel_w - 30) / 2),
                "zero": _fmt(sy(0.0)),
                "ticks": [{"pos": _fmt(sy(v)), "label": f"{v:.3g}"} for v in _ticks(lo, hi)],
                "bars": bars,
            }
        )
    context = {
        "width": WIDTH,
        "height": HEIGHT,
        "title": title,
        "top": MARGIN_TOP,
        "bottom": bottom,
        "panels": rendered,
    }
    return render_to_string("reports/bar_chart.svg", context)


__all__ = ["Series", "Panel", "line_chart", "bar_panels", "WIDTH", "HEIGHT"]
