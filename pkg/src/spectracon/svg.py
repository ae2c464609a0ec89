"""Minimal hand-written SVG line charts."""
from __future__ import annotations

import math
from typing import Sequence
from xml.sax.saxutils import escape

__all__ = ["line_chart"]

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b")


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def line_chart(series: Sequence[tuple[str, Sequence[float], Sequence[float]]], *, title: str = "",
               xlabel: str = "", ylabel: str = "", log_x: bool = False,
               width: int = 480, height: int = 320) -> str:
    """Render ``(label, xs, ys)`` series as an SVG document, one polyline each."""
    if not series:
        raise ValueError("nothing to plot")
    left, right, top, bottom = 60, 20, 30, 45
    tx = (lambda v: math.log10(v)) if log_x else float
    xs = [tx(x) for _, sx, _ in series for x in sx]
    ys = [float(y) for _, _, sy in series for y in sy]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(0.0, min(ys)), max(ys)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y1 = y0 + 1.0
    pw, ph = width - left - right, height - top - bottom

    def px(x):
        return left + (tx(x) - x0) / (x1 - x0) * pw

    def py(y):
        return top + (1.0 - (float(y) - y0) / (y1 - y0)) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>',
        f'<text x="{width / 2:.1f}" y="18" text-anchor="middle" font-size="13">{escape(title)}</text>',
        f'<text x="{left + pw / 2:.1f}" y="{height - 8}" text-anchor="middle" font-size="11">{escape(xlabel)}</text>',
        f'<text x="14" y="{top + ph / 2:.1f}" text-anchor="middle" font-size="11" '
        f'transform="rotate(-90 14 {top + ph / 2:.1f})">{escape(ylabel)}</text>',
    ]
    for frac in (0.0, 0.5, 1.0):
        yv = y0 + frac * (y1 - y0)
        out.append(f'<text x="{left - 4}" y="{_fmt(py(yv) + 4)}" text-anchor="end" font-size="10">{yv:.3g}</text>')
        xv = x0 + frac * (x1 - x0)
        label = 10 ** xv if log_x else xv
        out.append(f'<text x="{_fmt(left + frac * pw)}" y="{top + ph + 14}" text-anchor="middle" '
                   f'font-size="10">{label:.3g}</text>')
    for k, (label, sx, sy) in enumerate(series):
        color = _COLORS[k % len(_COLORS)]
        pts = " ".join(f"{_fmt(px(x))},{_fmt(py(y))}" for x, y in zip(sx, sy))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}">'
                   f'<title>{escape(label)}</title></polyline>')
        out.append(f'<text x="{left + pw - 4}" y="{top + 14 + 13 * k}" text-anchor="end" font-size="10" '
                   f'fill="{color}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
