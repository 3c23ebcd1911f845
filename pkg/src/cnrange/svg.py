"""Minimal SVG plots of point sets in the complex plane (no plotting dependency)."""
from __future__ import annotations

from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np

__all__ = ["Series", "render"]

PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"]


@dataclass
class Series:
    points: np.ndarray
    kind: str = "line"  # line, closed, dots
    label: str = ""
    color: str | None = None
    radius: float = 2.5


def _nice(lo, hi):
    if hi - lo < 1e-12:
        lo, hi = lo - 0.5, hi + 0.5
    pad = 0.06 * (hi - lo)
    return lo - pad, hi + pad


def render(series, title: str = "", width: int = 520, height: int = 520,
           xlabel: str = "Re", ylabel: str = "Im", equal: bool = True) -> str:
    pts = np.concatenate([np.asarray(s.points, dtype=complex).ravel() for s in series]
                         or [np.zeros(1, complex)])
    pts = pts[np.isfinite(pts)]
    if pts.size == 0:
        pts = np.zeros(1, complex)
    x0, x1 = _nice(pts.real.min(), pts.real.max())
    y0, y1 = _nice(pts.imag.min(), pts.imag.max())
    if equal:
        span = max(x1 - x0, y1 - y0)
        cx, cy = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
        x0, x1, y0, y1 = cx - span / 2, cx + span / 2, cy - span / 2, cy + span / 2
    m = 50

    def X(z):
        return m + (np.real(z) - x0) / (x1 - x0) * (width - 2 * m)

    def Y(z):
        return height - m - (np.imag(z) - y0) / (y1 - y0) * (height - 2 * m)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<rect x="{m}" y="{m}" width="{width - 2 * m}" height="{height - 2 * m}" '
           'fill="none" stroke="#999"/>']
    if x0 < 0 < x1:
        out.append(f'<line x1="{X(0):.2f}" y1="{m}" x2="{X(0):.2f}" y2="{height - m}" stroke="#ccc"/>')
    if y0 < 0 < y1:
        out.append(f'<line x1="{m}" y1="{Y(0j):.2f}" x2="{width - m}" y2="{Y(0j):.2f}" stroke="#ccc"/>')
    for v in np.linspace(x0, x1, 5):
        out.append(f'<text x="{X(v):.2f}" y="{height - m + 15}" text-anchor="middle">{v:.3g}</text>')
    for v in np.linspace(y0, y1, 5):
        out.append(f'<text x="{m - 5}" y="{Y(1j * v) + 4:.2f}" text-anchor="end">{v:.3g}</text>')
    out.append(f'<text x="{width / 2}" y="{height - 12}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="14" y="{height / 2}" text-anchor="middle" '
               f'transform="rotate(-90 14 {height / 2})">{escape(ylabel)}</text>')
    if title:
        out.append(f'<text x="{width / 2}" y="20" text-anchor="middle" font-size="13">{escape(title)}</text>')
    for i, s in enumerate(series):
        color = s.color or PALETTE[i % len(PALETTE)]
        P = np.asarray(s.points, dtype=complex).ravel()
        if s.kind in ("line", "closed") and P.size:
            coords = " ".join(f"{X(z):.2f},{Y(z):.2f}" for z in P)
            tag = "polygon" if s.kind == "closed" else "polyline"
            out.append(f'<{tag} points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        else:
            for z in P:
                out.append(f'<circle cx="{X(z):.2f}" cy="{Y(z):.2f}" r="{s.radius}" fill="{color}"/>')
        if s.label:
            ly = m + 14 * (i + 1)
            out.append(f'<rect x="{width - m - 120}" y="{ly - 8}" width="10" height="10" fill="{color}"/>')
            out.append(f'<text x="{width - m - 106}" y="{ly + 1}">{escape(s.label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
