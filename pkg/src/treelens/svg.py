"""Minimal deterministic SVG scatter plots with ellipses.

Output depends only on the inputs: numbers are written with a fixed number
of decimals and no timestamps or random ids are emitted.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from html import escape
from typing import Sequence

import numpy as np

PALETTE = (
    "#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e",
    "#e6ab02", "#a6761d", "#666666", "#1f78b4", "#b2df8a",
)


def _f(x: float) -> str:
    s = f"{x:.2f}"
    return "0.00" if s == "-0.00" else s


@dataclass
class Figure:
    width: int = 640
    height: int = 520
    margin: int = 60
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""
    parts: list = field(default_factory=list)
    _bounds: tuple | None = None

    def set_bounds(self, xy: np.ndarray, square: bool = False) -> None:
        xy = np.asarray(xy, dtype=float).reshape(-1, 2)
        xy = xy[np.all(np.isfinite(xy), axis=1)]
        if len(xy) == 0:
            xy = np.zeros((1, 2))
        lo, hi = xy.min(axis=0), xy.max(axis=0)
        span = np.where(hi - lo > 0, hi - lo, 1.0)
        if square:
            span[:] = span.max()
            mid = (lo + hi) / 2
            lo, hi = mid - span / 2, mid + span / 2
        lo, hi = lo - 0.06 * span, hi + 0.06 * span
        self._bounds = (lo, hi)

    def px(self, xy) -> np.ndarray:
        lo, hi = self._bounds
        xy = np.atleast_2d(np.asarray(xy, dtype=float))
        w = self.width - 2 * self.margin
        h = self.height - 2 * self.margin
        x = self.margin + (xy[:, 0] - lo[0]) / (hi[0] - lo[0]) * w
        y = self.height - self.margin - (xy[:, 1] - lo[1]) / (hi[1] - lo[1]) * h
        return np.stack([x, y], axis=1)

    def shade_negative(self, color: str = "#f2dede") -> None:
        """Shade the parts of the plot where either coordinate is negative."""
        lo, hi = self._bounds
        for rect in (
            ((lo[0], lo[1]), (min(0.0, hi[0]), hi[1])),
            ((max(lo[0], 0.0), lo[1]), (hi[0], min(0.0, hi[1]))),
        ):
            (x0, y0), (x1, y1) = rect
            if x1 <= x0 or y1 <= y0:
                continue
            (a, b), (c, d) = self.px([[x0, y1], [x1, y0]])
            self.parts.append(
                f'<rect x="{_f(a)}" y="{_f(b)}" width="{_f(c - a)}" height="{_f(d - b)}" '
                f'fill="{color}" stroke="none"/>'
            )

    def polygon(self, xy, color: str, opacity: float = 0.15) -> None:
        pts = self.px(xy)
        d = "M " + " L ".join(f"{_f(x)} {_f(y)}" for x, y in pts) + " Z"
        self.parts.append(
            f'<path d="{d}" fill="{color}" fill-opacity="{opacity:.2f}" '
            f'stroke="{color}" stroke-width="1"/>'
        )

    def points(self, xy, color: str, radius: float = 3.0, labels: Sequence[str] | None = None) -> None:
        for i, (x, y) in enumerate(self.px(xy)):
            title = f"<title>{escape(labels[i])}</title>" if labels is not None else ""
            self.parts.append(
                f'<circle cx="{_f(x)}" cy="{_f(y)}" r="{radius:.1f}" fill="{color}">{title}</circle>'
            )

    def line(self, xy, color: str = "#999999", dash: bool = False) -> None:
        pts = self.px(xy)
        style = ' stroke-dasharray="4 3"' if dash else ""
        self.parts.append(
            '<polyline points="' + " ".join(f"{_f(x)},{_f(y)}" for x, y in pts)
            + f'" fill="none" stroke="{color}" stroke-width="1"{style}/>'
        )

    def legend(self, entries: Sequence[tuple[str, str]]) -> None:
        x = self.width - self.margin - 150
        for i, (label, color) in enumerate(entries):
            y = self.margin + 14 * (i + 1)
            self.parts.append(f'<rect x="{x}" y="{y - 8}" width="8" height="8" fill="{color}"/>')
            self.parts.append(
                f'<text x="{x + 12}" y="{y}" font-size="10" font-family="sans-serif">{escape(label)}</text>'
            )

    def _axes(self) -> list[str]:
        lo, hi = self._bounds
        out = []
        m, w, h = self.margin, self.width, self.height
        out.append(
            f'<rect x="{m}" y="{m}" width="{w - 2 * m}" height="{h - 2 * m}" '
            'fill="none" stroke="#333333" stroke-width="1"/>'
        )
        for axis in (0, 1):
            for t in np.linspace(lo[axis], hi[axis], 5):
                if axis == 0:
                    (x, _), = self.px([[t, lo[1]]])
                    out.append(f'<line x1="{_f(x)}" y1="{h - m}" x2="{_f(x)}" y2="{h - m + 4}" stroke="#333333"/>')
                    out.append(
                        f'<text x="{_f(x)}" y="{h - m + 16}" font-size="10" text-anchor="middle" '
                        f'font-family="sans-serif">{t:.3g}</text>'
                    )
                else:
                    (_, y), = self.px([[lo[0], t]])
                    out.append(f'<line x1="{m - 4}" y1="{_f(y)}" x2="{m}" y2="{_f(y)}" stroke="#333333"/>')
                    out.append(
                        f'<text x="{m - 6}" y="{_f(y + 3)}" font-size="10" text-anchor="end" '
                        f'font-family="sans-serif">{t:.3g}</text>'
                    )
        out.append(
            f'<text x="{w / 2:.1f}" y="{h - 16}" font-size="12" text-anchor="middle" '
            f'font-family="sans-serif">{escape(self.xlabel)}</text>'
        )
        out.append(
            f'<text x="16" y="{h / 2:.1f}" font-size="12" text-anchor="middle" font-family="sans-serif" '
            f'transform="rotate(-90 16 {h / 2:.1f})">{escape(self.ylabel)}</text>'
        )
        out.append(
            f'<text x="{w / 2:.1f}" y="{m / 2:.1f}" font-size="14" text-anchor="middle" '
            f'font-family="sans-serif">{escape(self.title)}</text>'
        )
        return out

    def render(self) -> str:
        if self._bounds is None:
            self.set_bounds(np.zeros((1, 2)))
        head = (
            '<?xml version="1.0" encoding="UTF-8"?>\n'
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" height="{self.height}" '
            f'viewBox="0 0 {self.width} {self.height}">\n'
            f'<rect x="0" y="0" width="{self.width}" height="{self.height}" fill="#ffffff"/>\n'
        )
        body = "\n".join(self.parts + self._axes())
        return head + body + "\n</svg>\n"


def scatter_with_ellipses(
    points,
    ellipses=(),
    groups: Sequence[str] | None = None,
    labels: Sequence[str] | None = None,
    title: str = "",
    xlabel: str = "PC1",
    ylabel: str = "PC2",
    highlight: int | None = None,
) -> str:
    """Scatter of 2-D points with optional projected ellipses (one per point
    or one per group, matched by position)."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    fig = Figure(title=title, xlabel=xlabel, ylabel=ylabel)
    outlines = [e.boundary() for e in ellipses]
    fig.set_bounds(np.vstack([pts] + outlines) if outlines else pts)
    if groups is None:
        colors = [PALETTE[0]] * len(pts)
        keys: list[str] = []
    else:
        keys = sorted(set(groups))
        cmap = {g: PALETTE[i % len(PALETTE)] for i, g in enumerate(keys)}
        colors = [cmap[g] for g in groups]
    for i, outline in enumerate(outlines):
        if groups is not None and len(outlines) == len(keys):
            color = PALETTE[i % len(PALETTE)]
        else:
            color = colors[i] if i < len(colors) else PALETTE[0]
        fig.polygon(outline, color, 0.08)
    for i in range(len(pts)):
        fig.points(pts[i : i + 1], colors[i], 3.0, None if labels is None else [labels[i]])
    if highlight is not None:
        fig.points(pts[highlight : highlight + 1], "#d62728", 5.0,
                   None if labels is None else [labels[highlight]])
    if keys:
        fig.legend([(g, PALETTE[i % len(PALETTE)]) for i, g in enumerate(keys)])
    return fig.render()


def coordinate_plot(x, y, xlabel: str, ylabel: str, labels=None, title: str = "") -> str:
    """Two signed log-map coordinates; negative regions are shaded."""
    pts = np.column_stack([np.asarray(x, dtype=float), np.asarray(y, dtype=float)])
    fig = Figure(title=title, xlabel=xlabel, ylabel=ylabel)
    fig.set_bounds(np.vstack([pts, [[0.0, 0.0]]]))
    fig.shade_negative()
    lo, hi = fig._bounds
    fig.line([[0.0, lo[1]], [0.0, hi[1]]], dash=True)
    fig.line([[lo[0], 0.0], [hi[0], 0.0]], dash=True)
    ok = np.all(np.isfinite(pts), axis=1)
    fig.points(pts[ok], PALETTE[2], 3.0, None if labels is None else [l for l, k in zip(labels, ok) if k])
    return fig.render()
