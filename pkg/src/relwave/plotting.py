"""Columnar text export and minimal deterministic SVG line plots.

The columnar files are the data contract (UTF-8, space-separated, '#'
header naming each column and its unit); the SVG plots are convenience
output, written without timestamps or random ids so identical inputs
produce identical bytes.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import ConfigurationError

_FMT = "%.17e"


def export_columnar(path, columns: dict[str, np.ndarray], units: dict[str, str] | None = None):
    """Write named columns with a '#' header line carrying units."""
    units = units or {}
    names = list(columns)
    arrays = [np.asarray(columns[n], dtype=float).ravel() for n in names]
    n = arrays[0].size
    if any(a.size != n for a in arrays):
        raise ConfigurationError("columns must have equal length")
    header = "# " + "  ".join(f"{n}[{units.get(n, '1')}]" for n in names)
    lines = [header]
    for i in range(n):
        lines.append(" ".join(_FMT % a[i] for a in arrays))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n")
    return path


def _ticks(lo: float, hi: float, count: int = 5) -> np.ndarray:
    if not np.isfinite(lo) or not np.isfinite(hi) or lo == hi:
        return np.array([lo])
    return np.linspace(lo, hi, count)


def svg_line_plot(path, series: list[tuple[np.ndarray, np.ndarray, str]],
                  title: str = "", xlabel: str = "", ylabel: str = "",
                  logx: bool = False, logy: bool = False,
                  annotation: str = "", markers: bool = False):
    """Polyline plot of (x, y, label) series; deterministic output."""
    width, height = 640, 420
    ml, mr, mt, mb = 70, 20, 40, 50
    palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]

    def tx(v):
        return np.log10(v) if logx else v

    def ty(v):
        return np.log10(v) if logy else v

    xs_all = np.concatenate([tx(np.asarray(x, dtype=float)) for x, _, _ in series])
    ys_all = np.concatenate([ty(np.asarray(y, dtype=float)) for _, y, _ in series])
    x_lo, x_hi = float(np.min(xs_all)), float(np.max(xs_all))
    y_lo, y_hi = float(np.min(ys_all)), float(np.max(ys_all))
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    pad = 0.05 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - pad, y_hi + pad

    def px(v):
        return ml + (tx(v) - x_lo) / (x_hi - x_lo) * (width - ml - mr)

    def py(v):
        return height - mb - (ty(v) - y_lo) / (y_hi - y_lo) * (height - mt - mb)

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
             f'<rect width="{width}" height="{height}" fill="white"/>',
             f'<rect x="{ml}" y="{mt}" width="{width - ml - mr}" height="{height - mt - mb}" '
             'fill="none" stroke="#333"/>']
    if title:
        parts.append(f'<text x="{width / 2:.1f}" y="24" text-anchor="middle" '
                     f'font-family="monospace" font-size="14">{title}</text>')
    for tick in _ticks(x_lo, x_hi):
        vx = ml + (tick - x_lo) / (x_hi - x_lo) * (width - ml - mr)
        label = f"1e{tick:.1f}" if logx else f"{tick:.3g}"
        parts.append(f'<line x1="{vx:.1f}" y1="{height - mb}" x2="{vx:.1f}" '
                     f'y2="{height - mb + 5}" stroke="#333"/>')
        parts.append(f'<text x="{vx:.1f}" y="{height - mb + 18}" text-anchor="middle" '
                     f'font-family="monospace" font-size="10">{label}</text>')
    for tick in _ticks(y_lo, y_hi):
        vy = height - mb - (tick - y_lo) / (y_hi - y_lo) * (height - mt - mb)
        label = f"1e{tick:.1f}" if logy else f"{tick:.3g}"
        parts.append(f'<line x1="{ml - 5}" y1="{vy:.1f}" x2="{ml}" y2="{vy:.1f}" stroke="#333"/>')
        parts.append(f'<text x="{ml - 8}" y="{vy + 3:.1f}" text-anchor="end" '
                     f'font-family="monospace" font-size="10">{label}</text>')
    if xlabel:
        parts.append(f'<text x="{width / 2:.1f}" y="{height - 12}" text-anchor="middle" '
                     f'font-family="monospace" font-size="12">{xlabel}</text>')
    if ylabel:
        parts.append(f'<text x="16" y="{height / 2:.1f}" text-anchor="middle" '
                     f'font-family="monospace" font-size="12" '
                     f'transform="rotate(-90 16 {height / 2:.1f})">{ylabel}</text>')

    for idx, (x, y, label) in enumerate(series):
        color = palette[idx % len(palette)]
        pts = " ".join(f"{px(float(a)):.2f},{py(float(b)):.2f}"
                       for a, b in zip(np.ravel(x), np.ravel(y)))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        if markers:
            for a, b in zip(np.ravel(x), np.ravel(y)):
                parts.append(f'<circle cx="{px(float(a)):.2f}" cy="{py(float(b)):.2f}" '
                             f'r="2.5" fill="{color}"/>')
        if label:
            parts.append(f'<text x="{width - mr - 8}" y="{mt + 16 + 14 * idx}" text-anchor="end" '
                         f'font-family="monospace" font-size="11" fill="{color}">{label}</text>')
    if annotation:
        parts.append(f'<text x="{ml + 10}" y="{mt + 16}" font-family="monospace" '
                     f'font-size="11">{annotation}</text>')
    parts.append("</svg>")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(parts) + "\n")
    return path
