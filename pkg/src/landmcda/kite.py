"""Deterministic SVG kite (radar) diagram of per-dimension sustainability indices."""

from __future__ import annotations

import math
from typing import Mapping
from xml.sax.saxutils import escape

SIZE = 600
CENTRE = SIZE / 2
RADIUS = 200.0
RINGS = (25.0, 50.0, 75.0, 100.0)


def _angle(k, n):
    # first axis points up, the rest follow clockwise
    return -math.pi / 2 + 2 * math.pi * k / n


def _point(value, k, n):
    r = RADIUS * value / 100.0
    a = _angle(k, n)
    return CENTRE + r * math.cos(a), CENTRE + r * math.sin(a)


def kite_vertices(indices: Mapping[str, float]) -> list[tuple[float, float]]:
    """Polygon vertices; negative indices are drawn at the centre."""
    n = len(indices)
    return [_point(max(0.0, v), k, n) for k, v in enumerate(indices.values())]


def _fmt(x):
    return f"{x:.3f}"


def render_kite(indices: Mapping[str, float], title: str = "Sustainability kite") -> str:
    if not indices:
        raise ValueError("kite diagram needs at least one dimension")
    n = len(indices)
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" '
        f'viewBox="0 0 {SIZE} {SIZE}">',
        f'<rect x="0" y="0" width="{SIZE}" height="{SIZE}" fill="white"/>',
        f'<text x="{_fmt(CENTRE)}" y="30.000" text-anchor="middle" font-size="18">{escape(title)}</text>',
    ]
    for ring in RINGS:
        pts = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in (_point(ring, k, n) for k in range(n)))
        shape = (f'<polygon class="ring" points="{pts}"' if n >= 3 else
                 f'<circle class="ring" cx="{_fmt(CENTRE)}" cy="{_fmt(CENTRE)}" r="{_fmt(RADIUS * ring / 100)}"')
        out.append(f'{shape} fill="none" stroke="#bbbbbb" stroke-width="1"/>')
        lx, ly = _point(ring, 0, n)
        out.append(f'<text x="{_fmt(lx + 4)}" y="{_fmt(ly)}" font-size="10" fill="#777777">{ring:.0f}</text>')
    for k, name in enumerate(indices):
        x, y = _point(100.0, k, n)
        out.append(f'<line class="axis" x1="{_fmt(CENTRE)}" y1="{_fmt(CENTRE)}" '
                   f'x2="{_fmt(x)}" y2="{_fmt(y)}" stroke="#555555" stroke-width="1"/>')
        lx, ly = _point(112.0, k, n)
        out.append(f'<text x="{_fmt(lx)}" y="{_fmt(ly)}" text-anchor="middle" font-size="13">'
                   f'{escape(name)} ({indices[name]:.2f})</text>')
    pts = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in kite_vertices(indices))
    out.append(f'<polygon class="index" points="{pts}" fill="#2e7d32" fill-opacity="0.35" '
               f'stroke="#2e7d32" stroke-width="2"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
