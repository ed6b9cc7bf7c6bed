"""SVG charts for n-gram tables.

Plain SVG 1.1 text, no plotting dependency. Every plotted coordinate is
kept inside the plot area, which sits inside the viewBox.
"""
from __future__ import annotations

import statistics
from typing import List, Optional, Sequence, Tuple

from src.core.errors import TooFewNgrams
from src.core.ngrams import Fingerprint, NgramTable, freq_deltas

WIDTH = 1024
HEIGHT = 640
MARGIN_LEFT = 90
MARGIN_RIGHT = 220
MARGIN_TOP = 70
MARGIN_BOTTOM = 100
PLOT_LEFT = MARGIN_LEFT
PLOT_RIGHT = WIDTH - MARGIN_RIGHT
PLOT_TOP = MARGIN_TOP
PLOT_BOTTOM = HEIGHT - MARGIN_BOTTOM

FINGERPRINT_COLOR = "#1f77b4"
INPUT_COLOR = "#d62728"
DELTA_COLOR = "#2ca02c"
SPIKE_COLOR = "#ff7f0e"

MAX_X_TICKS = 20
Y_TICKS = 5


def _escape(text: str) -> str:
    return (
        text.replace("&", "&amp;")
        .replace("<", "&lt;")
        .replace(">", "&gt;")
        .replace('"', "&quot;")
        .replace("'", "&#39;")
    )


def _printable(text: str) -> str:
    return "".join(ch if 0x20 <= ord(ch) <= 0x7E else "?" for ch in text)


class _Axes:
    """Maps (rank, value) onto the plot area."""

    def __init__(self, x_count: int, y_max: float):
        self.x_count = x_count
        self.y_max = y_max * 1.15 if y_max > 0 else 1.0

    def x(self, index: int) -> float:
        if self.x_count <= 1:
            return (PLOT_LEFT + PLOT_RIGHT) / 2
        return PLOT_LEFT + (index - 1) * (PLOT_RIGHT - PLOT_LEFT) / (self.x_count - 1)

    def y(self, value: float) -> float:
        value = min(max(value, 0.0), self.y_max)
        return PLOT_BOTTOM - (value / self.y_max) * (PLOT_BOTTOM - PLOT_TOP)

    def points(self, values: Sequence[float]) -> List[Tuple[float, float]]:
        return [(self.x(i), self.y(v)) for i, v in enumerate(values, start=1)]


def _open(title: str) -> List[str]:
    return [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>',
        f'<text x="{WIDTH / 2:.1f}" y="36" text-anchor="middle" font-size="22" font-family="Arial">'
        f"{_escape(title)}</text>",
    ]


def _frame(axes: _Axes, x_label: str, y_label: str) -> List[str]:
    lines: List[str] = []
    for i in range(Y_TICKS + 1):
        value = axes.y_max * i / Y_TICKS
        y = axes.y(value)
        lines.append(
            f'<line x1="{PLOT_LEFT}" y1="{y:.2f}" x2="{PLOT_RIGHT}" y2="{y:.2f}" stroke="#d9d9d9" stroke-width="1"/>'
        )
        lines.append(
            f'<text x="{PLOT_LEFT - 10}" y="{y + 5:.2f}" text-anchor="end" font-size="13" '
            f'font-family="Arial">{value:.3f}</text>'
        )

    lines.append(
        f'<line x1="{PLOT_LEFT}" y1="{PLOT_BOTTOM}" x2="{PLOT_RIGHT}" y2="{PLOT_BOTTOM}" stroke="#000000" stroke-width="2"/>'
    )
    lines.append(
        f'<line x1="{PLOT_LEFT}" y1="{PLOT_TOP}" x2="{PLOT_LEFT}" y2="{PLOT_BOTTOM}" stroke="#000000" stroke-width="2"/>'
    )

    step = max(1, -(-axes.x_count // MAX_X_TICKS))
    ticks = sorted(set(range(1, axes.x_count + 1, step)) | {axes.x_count})
    for index in ticks:
        x = axes.x(index)
        lines.append(f'<line x1="{x:.2f}" y1="{PLOT_BOTTOM}" x2="{x:.2f}" y2="{PLOT_BOTTOM + 6}" stroke="#000000"/>')
        lines.append(
            f'<text x="{x:.2f}" y="{PLOT_BOTTOM + 26}" text-anchor="middle" font-size="13" '
            f'font-family="Arial">{index}</text>'
        )

    mid_y = (PLOT_TOP + PLOT_BOTTOM) / 2
    lines.append(
        f'<text x="{(PLOT_LEFT + PLOT_RIGHT) / 2:.1f}" y="{HEIGHT - 30}" text-anchor="middle" font-size="16" '
        f'font-family="Arial">{_escape(x_label)}</text>'
    )
    lines.append(
        f'<text x="28" y="{mid_y:.1f}" text-anchor="middle" font-size="16" font-family="Arial" '
        f'transform="rotate(-90 28 {mid_y:.1f})">{_escape(y_label)}</text>'
    )
    return lines


def _polyline(points: Sequence[Tuple[float, float]], color: str, css_class: str) -> str:
    coords = " ".join(f"{x:.2f},{y:.2f}" for x, y in points)
    return f'<polyline class="{css_class}" fill="none" stroke="{color}" stroke-width="2" points="{coords}"/>'


def _legend(entries: Sequence[Tuple[str, str]]) -> List[str]:
    lines: List[str] = []
    x = PLOT_RIGHT + 22
    for i, (label, color) in enumerate(entries):
        y = PLOT_TOP + 22 + i * 28
        lines.append(f'<line x1="{x}" y1="{y}" x2="{x + 26}" y2="{y}" stroke="{color}" stroke-width="3"/>')
        lines.append(
            f'<text x="{x + 34}" y="{y + 5}" text-anchor="start" font-size="14" font-family="Arial">'
            f"{_escape(label)}</text>"
        )
    return lines


def render_rank_chart(table: NgramTable, fp: Fingerprint, top_k: int = 40, title: Optional[str] = None) -> str:
    """Relative frequency by rank, input table over the fingerprint."""
    if top_k < 1:
        raise ValueError(f"top_k must be >= 1, got {top_k}")
    if table.k == 0 or fp.table.k == 0:
        raise TooFewNgrams("rank chart needs at least one n-gram in each table")

    fp_series = fp.table.frequencies[:top_k]
    in_series = table.frequencies[:top_k]
    axes = _Axes(max(len(fp_series), len(in_series)), max(fp_series[0], in_series[0]))

    lines = _open(title or f"{table.n}-gram frequency by rank")
    lines += _frame(axes, "rank", "relative frequency")
    lines.append(_polyline(axes.points(fp_series), FINGERPRINT_COLOR, "series-fingerprint"))
    lines.append(_polyline(axes.points(in_series), INPUT_COLOR, "series-input"))
    lines += _legend([(f"fingerprint ({_printable(fp.source_label)[:24]})", FINGERPRINT_COLOR), ("input", INPUT_COLOR)])
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def spike_indices(deltas: Sequence[float], k: Optional[int] = None) -> List[int]:
    """Indices whose drop exceeds 3x the median drop and twice the uniform share 1/K.

    K defaults to len(deltas) + 1, the size of the table the deltas came from.
    """
    if not deltas:
        return []
    k = k or len(deltas) + 1
    median = statistics.median(deltas)
    floor = 2.0 / k
    return [i for i, d in enumerate(deltas) if d > 3 * median and d > floor]


def render_delta_chart(table: NgramTable, title: Optional[str] = None) -> str:
    """Change in frequency from each rank to the next; spikes get a marker."""
    deltas = freq_deltas(table)
    spikes = spike_indices(deltas, table.k)
    axes = _Axes(len(deltas), max(deltas))

    lines = _open(title or f"{table.n}-gram change in frequency")
    lines += _frame(axes, "rank", "frequency drop to next rank")
    points = axes.points(deltas)
    lines.append(_polyline(points, DELTA_COLOR, "series-delta"))
    for i in spikes:
        x, y = points[i]
        lines.append(f'<circle class="spike" cx="{x:.2f}" cy="{y:.2f}" r="6" fill="{SPIKE_COLOR}"/>')
    lines += _legend([("delta", DELTA_COLOR), (f"spike ({len(spikes)})", SPIKE_COLOR)])
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
