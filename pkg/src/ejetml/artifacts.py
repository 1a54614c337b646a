"""Atomic file output and minimal SVG line charts."""

from __future__ import annotations

import os
import tempfile
from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape


def atomic_write(path, text: str) -> Path:
    """Write via a temp file in the target directory, then rename over it."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _scale(v, lo, hi, a, b):
    if hi == lo:
        return (a + b) / 2
    return a + (v - lo) * (b - a) / (hi - lo)


def line_chart(
    xs: Sequence[float],
    ys: Sequence[float],
    *,
    title: str,
    xlabel: str,
    ylabel: str,
    x_range=None,
    y_range=None,
    diagonal: bool = False,
    width: int = 480,
    height: int = 360,
) -> str:
    """Single-series polyline chart with labeled axes."""
    left, right, top, bottom = 60, 20, 40, 50
    x0, x1 = x_range or (min(xs), max(xs))
    y0, y1 = y_range or (min(ys), max(ys))

    def px(x):
        return _scale(x, x0, x1, left, width - right)

    def py(y):
        return _scale(y, y0, y1, height - bottom, top)

    pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(xs, ys))
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.0f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<line x1="{left}" y1="{height - bottom}" x2="{width - right}" y2="{height - bottom}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{height - bottom}" stroke="black"/>',
        f'<text x="{(left + width - right) / 2:.0f}" y="{height - 12}" text-anchor="middle" '
        f'font-size="12">{escape(xlabel)}</text>',
        f'<text x="16" y="{(top + height - bottom) / 2:.0f}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 16 {(top + height - bottom) / 2:.0f})">{escape(ylabel)}</text>',
    ]
    for v, anchor in ((x0, "start"), (x1, "end")):
        parts.append(
            f'<text x="{px(v):.2f}" y="{height - bottom + 16}" text-anchor="{anchor}" font-size="10">{v:.4g}</text>'
        )
    for v in (y0, y1):
        parts.append(
            f'<text x="{left - 6}" y="{py(v) + 4:.2f}" text-anchor="end" font-size="10">{v:.4g}</text>'
        )
    if diagonal:
        parts.append(
            f'<line x1="{px(x0):.2f}" y1="{py(y0):.2f}" x2="{px(x1):.2f}" y2="{py(y1):.2f}" '
            f'stroke="gray" stroke-dasharray="4 4"/>'
        )
    parts.append(f'<polyline points="{pts}" fill="none" stroke="steelblue" stroke-width="2"/>')
    for x, y in zip(xs, ys):
        parts.append(f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="2.5" fill="steelblue"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
