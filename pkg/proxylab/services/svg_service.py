"""
services/svg_service.py
─────────────────────────────────────────────────────────────────────
Hand-emitted SVG line charts on a fixed 640×480 viewBox.

    plot = LinePlot(title="γ̂₂ vs λ", x_label="lambda", y_label="mean")
    plot.add_band(xs, lower, upper)
    plot.add_line(xs, ys, label="gamma2")
    plot.write(path)

Numbers are printed with fixed precision so the same data always gives
the same bytes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple
from xml.sax.saxutils import escape

WIDTH, HEIGHT = 640, 480
MARGIN_LEFT, MARGIN_RIGHT, MARGIN_TOP, MARGIN_BOTTOM = 70, 20, 40, 50
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
N_TICKS = 5


class SvgCanvas:
    def __init__(self, width: int = WIDTH, height: int = HEIGHT):
        self.width  = width
        self.height = height
        self._parts: List[str] = [
            '<?xml version="1.0" encoding="UTF-8" standalone="no"?>\n',
            f'<svg version="1.1" width="{width}" height="{height}" viewBox="0 0 {width} {height}" '
            'xmlns="http://www.w3.org/2000/svg">\n',
            f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>\n',
        ]

    def line(self, x1, y1, x2, y2, stroke="#000000", width=1.0, dash: Optional[str] = None):
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        self._parts.append(
            f'<line x1="{x1:.2f}" y1="{y1:.2f}" x2="{x2:.2f}" y2="{y2:.2f}" '
            f'stroke="{stroke}" stroke-width="{width:.1f}"{extra}/>\n'
        )

    def polyline(self, points: Sequence[Tuple[float, float]], stroke: str, width: float = 1.5):
        if not points:
            return
        d = " ".join(f"{'M' if i == 0 else 'L'}{x:.2f},{y:.2f}" for i, (x, y) in enumerate(points))
        self._parts.append(f'<path d="{d}" fill="none" stroke="{stroke}" stroke-width="{width:.1f}"/>\n')

    def polygon(self, points: Sequence[Tuple[float, float]], fill: str, opacity: float = 0.2):
        if not points:
            return
        d = " ".join(f"{'M' if i == 0 else 'L'}{x:.2f},{y:.2f}" for i, (x, y) in enumerate(points)) + " Z"
        self._parts.append(f'<path d="{d}" fill="{fill}" fill-opacity="{opacity:.2f}" stroke="none"/>\n')

    def text(self, x, y, string: str, anchor: str = "middle", size: int = 12, rotate: Optional[float] = None):
        transform = f' transform="rotate({rotate:.0f} {x:.2f} {y:.2f})"' if rotate is not None else ""
        self._parts.append(
            f'<text x="{x:.2f}" y="{y:.2f}" font-family="sans-serif" font-size="{size}" '
            f'text-anchor="{anchor}"{transform}>{escape(string)}</text>\n'
        )

    def render(self) -> str:
        return "".join(self._parts) + "</svg>\n"


def _ticks(lo: float, hi: float, n: int = N_TICKS) -> List[float]:
    if hi <= lo:
        return [lo]
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def _fmt_tick(v: float) -> str:
    if v == 0:
        return "0"
    return f"{v:.3g}"


@dataclass
class LinePlot:
    title:   str = ""
    x_label: str = ""
    y_label: str = ""
    zero_line: bool = True
    _lines: List[Tuple[List[float], List[float], str]] = field(default_factory=list)
    _bands: List[Tuple[List[float], List[float], List[float]]] = field(default_factory=list)

    def add_line(self, xs: Sequence[float], ys: Sequence[float], label: str = "") -> "LinePlot":
        self._lines.append(([float(x) for x in xs], [float(y) for y in ys], label))
        return self

    def add_band(self, xs: Sequence[float], lower: Sequence[float], upper: Sequence[float]) -> "LinePlot":
        self._bands.append(([float(x) for x in xs], [float(v) for v in lower], [float(v) for v in upper]))
        return self

    def _bounds(self) -> Tuple[float, float, float, float]:
        xs = [x for line in self._lines for x in line[0]] + [x for band in self._bands for x in band[0]]
        ys = [y for line in self._lines for y in line[1]]
        ys += [v for band in self._bands for v in band[1] + band[2]]
        xs = [x for x in xs if math.isfinite(x)] or [0.0, 1.0]
        ys = [y for y in ys if math.isfinite(y)] or [0.0, 1.0]
        if self.zero_line:
            ys.append(0.0)
        x0, x1 = min(xs), max(xs)
        y0, y1 = min(ys), max(ys)
        if x1 == x0:
            x0, x1 = x0 - 0.5, x1 + 0.5
        if y1 == y0:
            pad = abs(y0) * 0.1 or 0.5
            y0, y1 = y0 - pad, y1 + pad
        pad = (y1 - y0) * 0.05
        return x0, x1, y0 - pad, y1 + pad

    def render(self) -> str:
        x0, x1, y0, y1 = self._bounds()
        left, right = MARGIN_LEFT, WIDTH - MARGIN_RIGHT
        top, bottom = MARGIN_TOP, HEIGHT - MARGIN_BOTTOM

        def sx(x):
            return left + (x - x0) / (x1 - x0) * (right - left)

        def sy(y):
            return bottom - (y - y0) / (y1 - y0) * (bottom - top)

        svg = SvgCanvas()
        svg.text(WIDTH / 2, 24, self.title, size=14)

        # axes
        svg.line(left, bottom, right, bottom)
        svg.line(left, top, left, bottom)
        for t in _ticks(x0, x1):
            svg.line(sx(t), bottom, sx(t), bottom + 5)
            svg.text(sx(t), bottom + 18, _fmt_tick(t), size=10)
        for t in _ticks(y0, y1):
            svg.line(left - 5, sy(t), left, sy(t))
            svg.text(left - 8, sy(t) + 4, _fmt_tick(t), anchor="end", size=10)
        svg.text((left + right) / 2, HEIGHT - 12, self.x_label)
        svg.text(18, (top + bottom) / 2, self.y_label, rotate=-90)
        if self.zero_line and y0 < 0 < y1:
            svg.line(left, sy(0.0), right, sy(0.0), stroke="#888888", dash="4,3")

        for i, (xs, lower, upper) in enumerate(self._bands):
            pts = [(sx(x), sy(v)) for x, v in zip(xs, upper)]
            pts += [(sx(x), sy(v)) for x, v in reversed(list(zip(xs, lower)))]
            svg.polygon(pts, PALETTE[i % len(PALETTE)])

        for i, (xs, ys, label) in enumerate(self._lines):
            colour = PALETTE[i % len(PALETTE)]
            svg.polyline([(sx(x), sy(y)) for x, y in zip(xs, ys) if math.isfinite(y)], colour)
            if label:
                ly = top + 14 + 16 * i
                svg.line(right - 110, ly - 4, right - 90, ly - 4, stroke=colour, width=2.0)
                svg.text(right - 85, ly, label, anchor="start", size=11)

        return svg.render()

    def write(self, path) -> Path:
        path = Path(path)
        path.write_text(self.render(), encoding="utf-8")
        return path
