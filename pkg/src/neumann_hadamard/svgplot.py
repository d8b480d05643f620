"""Minimal self-contained SVG emitter for log-log convergence plots."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

WIDTH, HEIGHT = 560, 420
MARGIN = dict(left=70, right=20, top=40, bottom=55)


def _decades(lo: float, hi: float) -> list[int]:
    return list(range(math.floor(math.log10(lo)), math.ceil(math.log10(hi)) + 1))


def loglog_svg(
    x,
    y,
    masked=None,
    slope: float | None = None,
    intercept: float | None = None,
    title: str = "",
    xlabel: str = "epsilon",
    ylabel: str = "|remainder|",
) -> str:
    """Scatter of positive ``(x, y)`` on log axes with an optional fitted line.

    Masked points are drawn hollow. ``slope``/``intercept`` describe
    ``log y = intercept + slope log x`` and are annotated in the corner.
    """
    pts = [(float(a), float(b), bool(m)) for a, b, m in zip(x, y, masked or [False] * len(x))
           if a > 0 and b > 0 and math.isfinite(a) and math.isfinite(b)]
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
           f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>']
    if title:
        out.append(f'<text x="{WIDTH / 2:.1f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>')
    x0, x1 = MARGIN["left"], WIDTH - MARGIN["right"]
    y0, y1 = HEIGHT - MARGIN["bottom"], MARGIN["top"]
    out.append(f'<rect x="{x0}" y="{y1}" width="{x1 - x0}" height="{y0 - y1}" fill="none" stroke="black"/>')
    if not pts:
        out.append(f'<text x="{WIDTH / 2:.1f}" y="{HEIGHT / 2:.1f}" text-anchor="middle">no data</text>')
        out.append("</svg>")
        return "\n".join(out) + "\n"

    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    dx = _decades(min(xs), max(xs))
    dy = _decades(min(ys), max(ys))
    lx0, lx1 = dx[0], max(dx[-1], dx[0] + 1)
    ly0, ly1 = dy[0], max(dy[-1], dy[0] + 1)

    def px(v):
        return x0 + (math.log10(v) - lx0) / (lx1 - lx0) * (x1 - x0)

    def py(v):
        return y0 - (math.log10(v) - ly0) / (ly1 - ly0) * (y0 - y1)

    for e in range(lx0, lx1 + 1):
        X = px(10.0**e)
        out.append(f'<line x1="{X:.2f}" y1="{y0}" x2="{X:.2f}" y2="{y1}" stroke="#ddd"/>')
        out.append(f'<text x="{X:.2f}" y="{y0 + 18}" text-anchor="middle">1e{e}</text>')
    for e in range(ly0, ly1 + 1):
        Y = py(10.0**e)
        out.append(f'<line x1="{x0}" y1="{Y:.2f}" x2="{x1}" y2="{Y:.2f}" stroke="#ddd"/>')
        out.append(f'<text x="{x0 - 6}" y="{Y + 4:.2f}" text-anchor="end">1e{e}</text>')
    out.append(f'<text x="{(x0 + x1) / 2:.1f}" y="{HEIGHT - 12}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{(y0 + y1) / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {(y0 + y1) / 2:.1f})">{escape(ylabel)}</text>')

    if slope is not None and intercept is not None and math.isfinite(slope):
        a, b = min(xs), max(xs)
        ya, yb = math.exp(intercept) * a**slope, math.exp(intercept) * b**slope
        out.append(f'<line x1="{px(a):.2f}" y1="{py(ya):.2f}" x2="{px(b):.2f}" y2="{py(yb):.2f}" '
                   f'stroke="#c33" stroke-dasharray="6 4"/>')
        out.append(f'<text x="{x0 + 10}" y="{y1 + 18}" fill="#c33">fitted slope {slope:.3f}</text>')
    for a, b, m in pts:
        fill = "none" if m else "#236"
        out.append(f'<circle cx="{px(a):.2f}" cy="{py(b):.2f}" r="4" fill="{fill}" stroke="#236"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
