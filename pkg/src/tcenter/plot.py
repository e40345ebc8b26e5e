"""Deterministic hand-written SVG phase portraits."""

from __future__ import annotations

import numpy as np

from .field import FieldSpec, IntegralSpec, level_point
from .flow import orbit_clock, trajectory

SIZE = 480
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def orbit_polyline(fs: FieldSpec, intspec: IntegralSpec, level: float, n: int = 240, tol: float = 1e-10) -> np.ndarray:
    """One period of the orbit through the angle-0 point of ``level``, ``n + 1`` samples."""
    z = level_point(intspec, level, 0.0)
    th = orbit_clock(fs, z, tol).theta
    return trajectory(fs, z, th, n, tol).points


def _path(P: np.ndarray, scale: float) -> str:
    c = SIZE / 2
    pts = " ".join("%.17g,%.17g" % (c + scale * x, c - scale * y) for x, y in P)
    return pts


def render_svg(curves: list[tuple[np.ndarray, str, bool]], title: str = "") -> str:
    """``curves`` holds ``(points, colour, dashed)``; the view fits all of them."""
    extent = max(float(np.max(np.abs(P))) for P, _, _ in curves) if curves else 1.0
    scale = 0.45 * SIZE / extent
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">',
        f'<rect width="{SIZE}" height="{SIZE}" fill="white"/>',
    ]
    if title:
        lines.append(f'<title>{title}</title>')
    c = SIZE / 2
    lines.append(f'<line x1="0" y1="{c:g}" x2="{SIZE}" y2="{c:g}" stroke="#ccc"/>')
    lines.append(f'<line x1="{c:g}" y1="0" x2="{c:g}" y2="{SIZE}" stroke="#ccc"/>')
    for P, color, dashed in curves:
        dash = ' stroke-dasharray="4 3"' if dashed else ""
        lines.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.2"{dash} points="{_path(P, scale)}"/>')
    lines.append(f'<circle cx="{c:g}" cy="{c:g}" r="2.5" fill="black"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
