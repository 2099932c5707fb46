"""Static SVG renderings of the seen/unseen diagram and power heatmaps.

Output is plain text with fixed number formatting, so identical inputs give
byte-identical files.
"""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

from ._io import atomic_write_text
from .evaluation import DISPLAY_RANGE_DB

_VIRIDIS = [(0.0, (68, 1, 84)), (0.25, (59, 82, 139)), (0.5, (33, 145, 140)),
            (0.75, (94, 201, 98)), (1.0, (253, 231, 37))]
_PALETTE = ["#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf", "#bcbd22"]


def viridis(t):
    t = min(max(float(t), 0.0), 1.0)
    for (t0, c0), (t1, c1) in zip(_VIRIDIS, _VIRIDIS[1:]):
        if t <= t1:
            f = (t - t0) / (t1 - t0)
            return "#%02x%02x%02x" % tuple(round(a + f * (b - a)) for a, b in zip(c0, c1))
    return "#fde725"


def _f(v):
    return f"{v:.2f}"


class _Canvas:
    def __init__(self, width, height, xlim, ylim, margin=(60, 20, 20, 50)):
        self.w, self.h = width, height
        self.left, self.right, self.top, self.bottom = margin
        self.xlim, self.ylim = xlim, ylim
        self.parts = []

    def x(self, v):
        x0, x1 = self.xlim
        return self.left + (v - x0) / (x1 - x0) * (self.w - self.left - self.right)

    def y(self, v):
        y0, y1 = self.ylim
        return self.h - self.bottom - (v - y0) / (y1 - y0) * (self.h - self.top - self.bottom)

    def add(self, s):
        self.parts.append(s)

    def axes(self, xlabel, ylabel, step=1.0):
        x0, x1 = self.xlim
        y0, y1 = self.ylim
        self.add(f'<rect x="{_f(self.x(x0))}" y="{_f(self.y(y1))}" width="{_f(self.x(x1) - self.x(x0))}" '
                 f'height="{_f(self.y(y0) - self.y(y1))}" fill="none" stroke="black"/>')
        for v in np.arange(math.ceil(x0 / step) * step, x1 + 1e-9, step):
            self.add(f'<text x="{_f(self.x(v))}" y="{_f(self.y(y0) + 15)}" font-size="10" text-anchor="middle">{v:g}</text>')
        for v in np.arange(math.ceil(y0 / step) * step, y1 + 1e-9, step):
            self.add(f'<text x="{_f(self.x(x0) - 5)}" y="{_f(self.y(v) + 3)}" font-size="10" text-anchor="end">{v:g}</text>')
        self.add(f'<text x="{_f((self.x(x0) + self.x(x1)) / 2)}" y="{_f(self.h - 10)}" font-size="12" '
                 f'text-anchor="middle">{escape(xlabel)}</text>')
        cy = (self.y(y0) + self.y(y1)) / 2
        self.add(f'<text x="15" y="{_f(cy)}" font-size="12" text-anchor="middle" '
                 f'transform="rotate(-90 15 {_f(cy)})">{escape(ylabel)}</text>')

    def svg(self):
        body = "\n".join(self.parts)
        return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.w}" height="{self.h}" '
                f'viewBox="0 0 {self.w} {self.h}">\n<rect width="100%" height="100%" fill="white"/>\n{body}\n</svg>\n')


def seen_unseen_svg(points, random_bound_db, principal=(), width=640, height=420):
    """``points``: iterable of (estimator_id, a, p_seen_db, gap_db).

    ``principal`` holds (a, p_seen_db, gap_db) of the principal-component
    baseline. The random-precoding bound is the line
    ``gap = random_bound_db - p_seen`` (unseen power equal to the bound),
    with the unreachable region below it shaded; "TDD" marks (0, 0).
    """
    points = list(points)
    principal = list(principal)
    xs = [p[2] for p in points] + [p[1] for p in principal] + [0.0]
    ys = [p[3] for p in points] + [p[2] for p in principal] + [0.0]
    xlim = (math.floor(min(xs)) - 1.0, 0.5)
    ylim = (math.floor(min(ys)) - 1.0, max(1.0, math.ceil(max(ys)) + 0.5))
    c = _Canvas(width, height, xlim, ylim, margin=(60, 160, 20, 50))
    x0, x1 = xlim
    poly = [(x0, random_bound_db - x0), (x1, random_bound_db - x1), (x1, ylim[0]), (x0, ylim[0])]
    clip = [(x, min(max(y, ylim[0]), ylim[1])) for x, y in poly]
    c.add('<polygon points="%s" fill="#1f77b4" fill-opacity="0.15"/>' % " ".join(f"{_f(c.x(x))},{_f(c.y(y))}" for x, y in clip))
    c.add(f'<line x1="{_f(c.x(x0))}" y1="{_f(c.y(min(max(random_bound_db - x0, ylim[0]), ylim[1])))}" '
          f'x2="{_f(c.x(x1))}" y2="{_f(c.y(min(max(random_bound_db - x1, ylim[0]), ylim[1])))}" stroke="#1f77b4"/>')
    c.axes("mean seen power [dB]", "unseen - seen [dB]")
    c.add(f'<path d="M {_f(c.x(0) - 5)} {_f(c.y(0) - 5)} l 10 10 m -10 0 l 10 -10" stroke="black"/>')
    c.add(f'<text x="{_f(c.x(0) - 8)}" y="{_f(c.y(0) - 8)}" font-size="10" text-anchor="end">TDD</text>')
    ids = sorted({p[0] for p in points})
    legend = [("Princ. Comp.", "#7f7f7f")] if principal else []
    for a, sx, gy in principal:
        r = 2 + 3 * a
        c.add(f'<rect x="{_f(c.x(sx) - r)}" y="{_f(c.y(gy) - r)}" width="{_f(2 * r)}" height="{_f(2 * r)}" '
              f'fill="#7f7f7f" fill-opacity="0.6"/>')
    for k, est in enumerate(ids):
        colour = _PALETTE[k % len(_PALETTE)]
        legend.append((est, colour))
        for eid, a, sx, gy in points:
            if eid == est:
                c.add(f'<circle cx="{_f(c.x(sx))}" cy="{_f(c.y(gy))}" r="{_f(2 + 3 * (a or 0.5))}" '
                      f'fill="{colour}" fill-opacity="0.6"/>')
    legend.append(("random bound", "#1f77b4"))
    for k, (label, colour) in enumerate(legend):
        y = 30 + 16 * k
        c.add(f'<rect x="{width - 150}" y="{y - 8}" width="10" height="10" fill="{colour}"/>')
        c.add(f'<text x="{width - 135}" y="{y + 1}" font-size="11">{escape(str(label))}</text>')
    return c.svg()


def heatmap_svg(grid, width=520, height=480, display_range=DISPLAY_RANGE_DB):
    """Top view of per-cell mean power, colours clamped to ``display_range`` dB."""
    x0, y0, x1, y1 = grid.bounds
    c = _Canvas(width, height, (x0, x1), (y0, y1), margin=(60, 90, 20, 50))
    lo, hi = display_range
    mean_db = grid.mean_db
    xs, ys = grid.cell_centres()
    s = grid.cell_size
    for i, x in enumerate(xs):
        for j, y in enumerate(ys):
            if grid.counts[i, j] == 0:
                continue
            colour = viridis((mean_db[i, j] - lo) / (hi - lo))
            c.add(f'<rect x="{_f(c.x(x - s / 2))}" y="{_f(c.y(y + s / 2))}" width="{_f(c.x(x + s / 2) - c.x(x - s / 2))}" '
                  f'height="{_f(c.y(y - s / 2) - c.y(y + s / 2))}" fill="{colour}"/>')
    c.axes("x coordinate [m]", "y coordinate [m]", step=max(1.0, round((x1 - x0) / 6)))
    bx, top, bottom = width - 70, 30, height - 60
    for k in range(50):
        t = k / 49
        yy = bottom - t * (bottom - top)
        c.add(f'<rect x="{bx}" y="{_f(yy - (bottom - top) / 49)}" width="15" height="{_f((bottom - top) / 49 + 0.5)}" fill="{viridis(t)}"/>')
    for v in np.arange(lo, hi + 1e-9, 5.0):
        yy = bottom - (v - lo) / (hi - lo) * (bottom - top)
        c.add(f'<text x="{bx + 20}" y="{_f(yy + 3)}" font-size="10">{v:g} dB</text>')
    return c.svg()


def write_svg(text, path):
    return atomic_write_text(path, text)
