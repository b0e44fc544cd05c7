"""Per-source, per-year counts of R-labeled records and the plot-data
files (CSV plus a standalone SVG line chart) that visualize them.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .corpus import LabeledRecord
from .errors import ValidationError


@dataclass(frozen=True)
class TimelinePoint:
    source_name: str
    year: int
    radical_count: int

    def __post_init__(self):
        if self.radical_count < 0:
            raise ValidationError("radical_count must be non-negative")


def radical_timeline(labeled: list[LabeledRecord]) -> list[TimelinePoint]:
    """Count R-labeled records per (source_name, year).

    Pairs that never occur are omitted, so every emitted count is at
    least 1. Output is sorted by source name, then year.
    """
    counts: dict[tuple[str, int], int] = {}
    for item in labeled:
        date = item.record.date
        if date is None or getattr(date, "year", None) is None:
            raise ValidationError(f"record {item.record.id!r} has no year")
        if item.label != "R":
            continue
        key = (item.record.source_name, date.year)
        counts[key] = counts.get(key, 0) + 1
    return [
        TimelinePoint(source_name=source, year=year, radical_count=count)
        for (source, year), count in sorted(counts.items())
    ]


_PALETTE = ("#1b6ca8", "#c0392b", "#27ae60", "#8e44ad", "#d35400", "#16a085")

_WIDTH, _HEIGHT = 800, 420
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 60, 170, 20, 40


def _svg_chart(points: list[TimelinePoint]) -> str:
    sources = sorted({p.source_name for p in points})
    y_min, y_max = 0, max(p.radical_count for p in points)
    x_min = min(p.year for p in points)
    x_max = max(p.year for p in points)
    x_span = max(1, x_max - x_min)
    y_span = max(1, y_max - y_min)
    plot_w = _WIDTH - _MARGIN_L - _MARGIN_R
    plot_h = _HEIGHT - _MARGIN_T - _MARGIN_B

    def sx(year: int) -> float:
        return _MARGIN_L + plot_w * (year - x_min) / x_span

    def sy(count: int) -> float:
        return _MARGIN_T + plot_h * (1.0 - (count - y_min) / y_span)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" '
        f'height="{_HEIGHT}" viewBox="0 0 {_WIDTH} {_HEIGHT}">',
        f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
        # axes
        f'<line x1="{_MARGIN_L}" y1="{_MARGIN_T}" x2="{_MARGIN_L}" '
        f'y2="{_HEIGHT - _MARGIN_B}" stroke="black"/>',
        f'<line x1="{_MARGIN_L}" y1="{_HEIGHT - _MARGIN_B}" '
        f'x2="{_WIDTH - _MARGIN_R}" y2="{_HEIGHT - _MARGIN_B}" stroke="black"/>',
    ]
    # x ticks on whole years; thin out when the span is wide
    step = max(1, (x_max - x_min) // 12)
    year = x_min
    while year <= x_max:
        x = sx(year)
        parts.append(
            f'<line x1="{x:.1f}" y1="{_HEIGHT - _MARGIN_B}" x2="{x:.1f}" '
            f'y2="{_HEIGHT - _MARGIN_B + 5}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{x:.1f}" y="{_HEIGHT - _MARGIN_B + 18}" font-size="11" '
            f'text-anchor="middle">{year}</text>'
        )
        if year == x_max:
            break
        year = min(year + step, x_max)
    for k in range(5):
        val = round(y_min + (y_max - y_min) * k / 4)
        y = sy(val)
        parts.append(
            f'<line x1="{_MARGIN_L - 5}" y1="{y:.1f}" x2="{_MARGIN_L}" '
            f'y2="{y:.1f}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{_MARGIN_L - 8}" y="{y + 4:.1f}" font-size="11" '
            f'text-anchor="end">{val}</text>'
        )
    by_source: dict[str, list[TimelinePoint]] = {s: [] for s in sources}
    for p in points:
        by_source[p.source_name].append(p)
    for k, source in enumerate(sources):
        color = _PALETTE[k % len(_PALETTE)]
        series = sorted(by_source[source], key=lambda p: p.year)
        coords = " ".join(f"{sx(p.year):.1f},{sy(p.radical_count):.1f}" for p in series)
        parts.append(
            f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="2"/>'
        )
        for p in series:
            parts.append(
                f'<circle cx="{sx(p.year):.1f}" cy="{sy(p.radical_count):.1f}" '
                f'r="3" fill="{color}"/>'
            )
        ly = _MARGIN_T + 14 + 18 * k
        lx = _WIDTH - _MARGIN_R + 12
        parts.append(
            f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 18}" y2="{ly - 4}" '
            f'stroke="{color}" stroke-width="2"/>'
        )
        parts.append(
            f'<text x="{lx + 24}" y="{ly}" font-size="12">{source}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render_timeline(
    points: list[TimelinePoint], csv_path: str | Path, chart_path: str | Path
) -> Optional[str]:
    """Write the CSV and the SVG chart; on empty input write nothing and
    return a warning instead."""
    if not points:
        return "timeline is empty; nothing rendered"
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["source", "year", "count"])
        for p in points:
            writer.writerow([p.source_name, p.year, p.radical_count])
    Path(chart_path).write_text(_svg_chart(points), encoding="utf-8")
    return None
