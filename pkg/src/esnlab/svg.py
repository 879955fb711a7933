"""Minimal static SVG line charts.

Just enough for the result figures: numeric series as ``<polyline>`` elements
(class "series"), linear axes with ticks, labels, and a legend. Output is a
pure function of the inputs, so figures are byte-stable across runs.
"""

from __future__ import annotations

import math

from .errors import ConfigurationError

PALETTE = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
    "#aec7e8", "#ffbb78", "#98df8a", "#ff9896", "#c5b0d5",
    "#c49c94", "#f7b6d2", "#c7c7c7", "#dbdb8d", "#9edae5",
]


def _escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _nice_ticks(lo: float, hi: float, target: int = 6) -> list[float]:
    """Round tick positions covering [lo, hi]."""
    if hi <= lo:
        hi = lo + 1.0
    span = hi - lo
    raw_step = span / max(target - 1, 1)
    power = 10.0 ** math.floor(math.log10(raw_step))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        step = mult * power
        if span / step <= target + 0.5:
            break
    first = math.ceil(lo / step) * step
    ticks = []
    v = first
    while v <= hi + step * 1e-9:
        ticks.append(0.0 if abs(v) < step * 1e-9 else v)
        v += step
    return ticks


def _fmt(value: float) -> str:
    return f"{value:g}"


class LineChart:
    """A single-panel chart with any number of labelled line series."""

    def __init__(self, title: str = "", x_label: str = "", y_label: str = "",
                 width: int = 860, height: int = 520):
        self.title = title
        self.x_label = x_label
        self.y_label = y_label
        self.width = width
        self.height = height
        self._series: list[tuple[str, list[float], list[float], str]] = []

    def add_series(self, label: str, xs, ys, color: str | None = None) -> None:
        xs = [float(x) for x in xs]
        ys = [float(y) for y in ys]
        if len(xs) != len(ys):
            raise ConfigurationError(f"series {label!r}: {len(xs)} x values vs {len(ys)} y values")
        if not xs:
            raise ConfigurationError(f"series {label!r} is empty")
        if color is None:
            color = PALETTE[len(self._series) % len(PALETTE)]
        self._series.append((label, xs, ys, color))

    def render(self) -> str:
        if not self._series:
            raise ConfigurationError("cannot render a chart with no series")
        margin_left, margin_right = 64, 150
        margin_top, margin_bottom = 40, 52
        plot_w = self.width - margin_left - margin_right
        plot_h = self.height - margin_top - margin_bottom

        all_x = [x for _, xs, _, _ in self._series for x in xs]
        all_y = [y for _, _, ys, _ in self._series for y in ys]
        x_lo, x_hi = min(all_x), max(all_x)
        y_lo, y_hi = min(all_y), max(all_y)
        if x_hi == x_lo:
            x_lo, x_hi = x_lo - 0.5, x_hi + 0.5
        if y_hi == y_lo:
            y_lo, y_hi = y_lo - 0.5, y_hi + 0.5

        def sx(x: float) -> float:
            return margin_left + (x - x_lo) / (x_hi - x_lo) * plot_w

        def sy(y: float) -> float:
            return margin_top + plot_h - (y - y_lo) / (y_hi - y_lo) * plot_h

        parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" height="{self.height}" '
            f'viewBox="0 0 {self.width} {self.height}">',
            f'<rect x="0" y="0" width="{self.width}" height="{self.height}" fill="#ffffff"/>',
        ]
        if self.title:
            parts.append(
                f'<text x="{margin_left + plot_w / 2:.1f}" y="22" text-anchor="middle" '
                f'font-family="sans-serif" font-size="15" font-weight="bold">{_escape(self.title)}</text>')

        for tick in _nice_ticks(x_lo, x_hi):
            px = sx(tick)
            parts.append(f'<line x1="{px:.2f}" y1="{margin_top}" x2="{px:.2f}" '
                         f'y2="{margin_top + plot_h}" stroke="#e6e6e6" stroke-width="1"/>')
            parts.append(f'<text x="{px:.2f}" y="{margin_top + plot_h + 18}" text-anchor="middle" '
                         f'font-family="sans-serif" font-size="11">{_fmt(tick)}</text>')
        for tick in _nice_ticks(y_lo, y_hi):
            py = sy(tick)
            parts.append(f'<line x1="{margin_left}" y1="{py:.2f}" x2="{margin_left + plot_w}" '
                         f'y2="{py:.2f}" stroke="#e6e6e6" stroke-width="1"/>')
            parts.append(f'<text x="{margin_left - 6}" y="{py + 4:.2f}" text-anchor="end" '
                         f'font-family="sans-serif" font-size="11">{_fmt(tick)}</text>')

        parts.append(f'<rect x="{margin_left}" y="{margin_top}" width="{plot_w}" height="{plot_h}" '
                     f'fill="none" stroke="#333333" stroke-width="1"/>')
        parts.append(f'<text x="{margin_left + plot_w / 2:.1f}" y="{self.height - 14}" text-anchor="middle" '
                     f'font-family="sans-serif" font-size="13">{_escape(self.x_label)}</text>')
        parts.append(f'<text x="18" y="{margin_top + plot_h / 2:.1f}" text-anchor="middle" '
                     f'font-family="sans-serif" font-size="13" '
                     f'transform="rotate(-90 18 {margin_top + plot_h / 2:.1f})">{_escape(self.y_label)}</text>')

        for label, xs, ys, color in self._series:
            points = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(xs, ys))
            parts.append(f'<polyline class="series" points="{points}" fill="none" '
                         f'stroke="{color}" stroke-width="1.6"/>')
            if len(xs) == 1:
                parts.append(f'<circle cx="{sx(xs[0]):.2f}" cy="{sy(ys[0]):.2f}" r="3" fill="{color}"/>')

        legend_x = margin_left + plot_w + 14
        legend_y = margin_top + 6
        for i, (label, _, _, color) in enumerate(self._series):
            y = legend_y + i * 17
            parts.append(f'<line x1="{legend_x}" y1="{y - 4}" x2="{legend_x + 20}" y2="{y - 4}" '
                         f'stroke="{color}" stroke-width="2.5"/>')
            parts.append(f'<text x="{legend_x + 26}" y="{y}" font-family="sans-serif" '
                         f'font-size="11">{_escape(label)}</text>')

        parts.append("</svg>")
        return "\n".join(parts) + "\n"

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.render())
