"""Serialization of campaign results: CSV rows, manifests, plot data and SVG."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import sys
from pathlib import Path
from typing import Iterable, Sequence

RESULT_COLUMNS = (
    "family",
    "param",
    "dim_f",
    "dim_bh",
    "eps_lower",
    "eps_upper",
    "dmax_lower",
    "bound",
    "ratio",
    "fid_floor",
    "pivot_radius",
    "verdict",
    "stream_id",
)

ENTANGLE_COLUMNS = (
    "model_index",
    "dim_f",
    "dim_bh",
    "lambdas_a",
    "lambdas_b",
    "eps_upper",
    "der",
    "rhs",
    "reference_part",
    "residual_a",
    "residual_b",
    "residual_bound",
    "verdict",
    "stream_id",
)


def fmt(x) -> str:
    """Shortest round-trip text for floats; other values via ``str``."""
    if isinstance(x, float):
        if math.isnan(x) or math.isinf(x):
            return str(x)
        return repr(x)
    if x is None:
        return ""
    return str(x)


def write_csv(path: Path, columns: Sequence[str], rows: Iterable[dict]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(row[c]) for c in columns])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def write_json(path: Path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def write_frontier_dat(path: Path, points: Iterable[tuple[float, float]]) -> None:
    lines = [f"{fmt(float(e))} {fmt(float(d))}" for e, d in points]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def frontier_svg(points: Sequence[tuple[float, float]], *, title: str = "exterior distinguishability") -> str:
    """Scatter of ``(eps, D_max)`` on the unit square with the curve ``2 sqrt(2 eps)``."""
    w, h, m = 480, 400, 56
    pw, ph = w - 2 * m, h - 2 * m

    def sx(e):
        return m + pw * min(max(e, 0.0), 1.0)

    def sy(d):
        return h - m - ph * min(max(d, 0.0), 1.0)

    # bound reaches D = 1 at eps = 1/8
    curve = " ".join(f"{sx(e):.2f},{sy(2 * math.sqrt(2 * e)):.2f}" for e in [i / 800 for i in range(101)])
    curve += f" {sx(1.0):.2f},{sy(1.0):.2f}"
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<text x="{w / 2:.0f}" y="24" text-anchor="middle" font-family="sans-serif" font-size="14">{title}</text>',
        f'<rect x="{m}" y="{m}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for t in (0.0, 0.25, 0.5, 0.75, 1.0):
        out.append(f'<text x="{sx(t):.1f}" y="{h - m + 16}" text-anchor="middle" font-family="sans-serif" font-size="11">{t:g}</text>')
        out.append(f'<text x="{m - 6}" y="{sy(t) + 4:.1f}" text-anchor="end" font-family="sans-serif" font-size="11">{t:g}</text>')
    out.append(f'<text x="{w / 2:.0f}" y="{h - 14}" text-anchor="middle" font-family="sans-serif" font-size="12">epsilon (upper)</text>')
    out.append(
        f'<text x="16" y="{h / 2:.0f}" text-anchor="middle" font-family="sans-serif" font-size="12" '
        f'transform="rotate(-90 16 {h / 2:.0f})">D_max (lower)</text>'
    )
    out.append(f'<polyline points="{curve}" fill="none" stroke="#c0392b" stroke-width="1.5"/>')
    for e, d in points:
        if math.isfinite(e) and math.isfinite(d):
            out.append(f'<circle cx="{sx(e):.2f}" cy="{sy(d):.2f}" r="2.2" fill="#2c3e50" fill-opacity="0.6"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_frontier(out_dir: Path, points: Sequence[tuple[float, float]], title: str) -> None:
    write_frontier_dat(out_dir / "frontier.dat", points)
    (out_dir / "frontier.svg").write_text(frontier_svg(points, title=title), encoding="utf-8")


def verdict_counts(verdicts: Iterable[str]) -> dict:
    counts = {"pass": 0, "fail": 0, "indeterminate": 0}
    for v in verdicts:
        counts[v] += 1
    return counts


class Console:
    """Terminal output honoring ``--quiet`` and ``NO_COLOR``."""

    COLORS = {"pass": "32", "fail": "31", "indeterminate": "33"}

    def __init__(self, quiet: bool = False, stream=None):
        self.quiet = quiet
        self.stream = stream or sys.stderr
        self.color = "NO_COLOR" not in os.environ and hasattr(self.stream, "isatty") and self.stream.isatty()

    def paint(self, text: str, verdict: str) -> str:
        if not self.color or verdict not in self.COLORS:
            return text
        return f"\033[{self.COLORS[verdict]}m{text}\033[0m"

    def info(self, msg: str) -> None:
        if not self.quiet:
            print(msg, file=self.stream)

    def summary(self, counts: dict) -> None:
        parts = [self.paint(f"{k}={v}", k) for k, v in counts.items()]
        self.info("verdicts: " + " ".join(parts))

    def error(self, msg: str) -> None:
        print(f"error: {msg}", file=self.stream)
