"""SVG output for star-glyph grids and RadViz plots.

Coordinates are written with three decimals so that output is byte-stable.
"""
from __future__ import annotations

from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np

from .dataset import DataSet
from .geometry import _polygon, check_ordering
from .metrics import radviz_anchors, radviz_project

# Okabe-Ito categorical palette
PALETTE = ("#0072B2", "#D55E00", "#009E73", "#CC79A7", "#E69F00", "#56B4E9", "#F0E442",
           "#000000")


@dataclass
class RenderStyle:
    glyph_radius: float = 40.0
    columns: int = 4
    palette: tuple = PALETTE
    stroke_width: float = 1.0
    annotate: bool = True
    radviz_size: float = 400.0
    dot_radius: float = 3.0


def _f(x):
    s = f"{x:.3f}"
    return "0.000" if s == "-0.000" else s


def _color(style, label):
    if label - 1 >= len(style.palette):
        raise ValueError(f"palette has {len(style.palette)} colours, class {label} needs more")
    return style.palette[label - 1]


def _header(width, height):
    return [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{_f(width)}" '
        f'height="{_f(height)}" viewBox="0 0 {_f(width)} {_f(height)}">',
        f'<rect x="0" y="0" width="{_f(width)}" height="{_f(height)}" fill="#ffffff"/>',
    ]


def render_glyph_grid(d: DataSet, order, style: RenderStyle | None = None,
                      score: float | None = None, title: str | None = None) -> str:
    """One filled star polygon per row, laid out row-major.

    Row j always occupies cell j, so grids drawn under different orderings
    line up glyph for glyph. Expects values in [0, 1].
    """
    style = style or RenderStyle()
    order = check_ordering(order, d.n)
    cell = 2.5 * style.glyph_radius
    cols = max(1, min(style.columns, d.m))
    rows = -(-d.m // cols)
    top = 24.0 if (style.annotate and (score is not None or title)) else 0.0
    width, height = cols * cell, rows * cell + top
    out = _header(width, height)
    if top:
        label = " ".join(p for p in (title, None if score is None else f"SC = {score:.3f}") if p)
        out.append(f'<text x="{_f(width / 2)}" y="16" text-anchor="middle" '
                   f'font-family="sans-serif" font-size="14">{escape(label)}</text>')
    axis = _polygon(np.ones(d.n))
    for j in range(d.m):
        cx = (j % cols + 0.5) * cell
        cy = top + (j // cols + 0.5) * cell
        r = style.glyph_radius
        spokes = " ".join(f"M{_f(cx)},{_f(cy)} L{_f(cx + r * x)},{_f(cy - r * y)}"
                          for x, y in axis)
        out.append(f'<path d="{spokes}" stroke="#bbbbbb" stroke-width="0.5" fill="none"/>')
        verts = _polygon(d.points[j, order])
        pts = " ".join(f"{_f(cx + r * x)},{_f(cy - r * y)}" for x, y in verts)
        color = _color(style, int(d.labels[j]))
        out.append(f'<polygon class="glyph" data-row="{j}" data-class="{int(d.labels[j])}" '
                   f'points="{pts}" fill="{color}" fill-opacity="0.6" stroke="{color}" '
                   f'stroke-width="{_f(style.stroke_width)}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_radviz(d: DataSet, order, style: RenderStyle | None = None,
                  score: float | None = None, names=None) -> str:
    """Unit circle, one labelled anchor per axis, one dot per row."""
    style = style or RenderStyle()
    order = check_ordering(order, d.n)
    layout = radviz_project(d, order)
    size = style.radviz_size
    top = 24.0 if (style.annotate and score is not None) else 0.0
    c = size / 2
    R = size * 0.4
    out = _header(size, size + top)
    if top:
        out.append(f'<text x="{_f(c)}" y="16" text-anchor="middle" font-family="sans-serif" '
                   f'font-size="14">DB ratio = {score:.3f}</text>')
    cy = top + c
    out.append(f'<circle cx="{_f(c)}" cy="{_f(cy)}" r="{_f(R)}" fill="none" '
               f'stroke="#888888" stroke-width="1"/>')
    names = names or [str(i) for i in range(d.n)]
    for pos, (x, y) in enumerate(radviz_anchors(d.n)):
        ax, ay = c + R * x, cy - R * y
        out.append(f'<circle class="anchor" cx="{_f(ax)}" cy="{_f(ay)}" r="3" fill="#444444"/>')
        out.append(f'<text class="anchor-label" x="{_f(c + 1.1 * R * x)}" y="{_f(cy - 1.1 * R * y)}" '
                   f'text-anchor="middle" dominant-baseline="middle" font-family="sans-serif" '
                   f'font-size="11">{escape(str(names[order[pos]]))}</text>')
    for j, (x, y) in enumerate(layout.projected):
        color = _color(style, int(d.labels[j]))
        out.append(f'<circle class="point" data-row="{j}" cx="{_f(c + R * x)}" cy="{_f(cy - R * y)}" '
                   f'r="{_f(style.dot_radius)}" fill="{color}" fill-opacity="0.8"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
