"""Deterministic SVG emission for traces, overlays, Q-circles, and heatmaps.

Plain text output with fixed-precision coordinates and no timestamps, so
identical inputs always produce byte-identical files.
"""

from __future__ import annotations

import numpy as np

WIDTH = 720
HEIGHT = 480
MARGIN = 60

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _header(width=WIDTH, height=HEIGHT):
    return (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">\n'
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>\n'
    )


def _fmt(v):
    return f"{v:.3f}"


def _scale(values, lo, hi, out_lo, out_hi):
    if hi == lo:
        return np.full_like(np.asarray(values, float), (out_lo + out_hi) / 2.0)
    return out_lo + (np.asarray(values, float) - lo) / (hi - lo) * (out_hi - out_lo)


def _axes(x_label, y_label, title):
    parts = [
        f'<rect x="{MARGIN}" y="{MARGIN}" width="{WIDTH - 2 * MARGIN}" '
        f'height="{HEIGHT - 2 * MARGIN}" fill="none" stroke="#000000"/>\n',
        f'<text x="{WIDTH // 2}" y="{HEIGHT - 16}" text-anchor="middle" '
        f'font-family="monospace" font-size="13">{x_label}</text>\n',
        f'<text x="18" y="{HEIGHT // 2}" text-anchor="middle" '
        f'font-family="monospace" font-size="13" '
        f'transform="rotate(-90 18 {HEIGHT // 2})">{y_label}</text>\n',
        f'<text x="{WIDTH // 2}" y="28" text-anchor="middle" '
        f'font-family="monospace" font-size="15">{title}</text>\n',
    ]
    return "".join(parts)


def line_chart(series, x_label="f (Hz)", y_label="|Z| (ohm)", title="",
               log_y=False, marks=()):
    """Polyline chart. series: list of (x array, y array, label); marks:
    list of (x, y, label) annotation points."""
    xs = np.concatenate([np.asarray(s[0], float) for s in series])
    ys = np.concatenate([np.asarray(s[1], float) for s in series])
    if log_y:
        ys = np.log10(np.maximum(ys, 1e-30))
    x_lo, x_hi = float(xs.min()), float(xs.max())
    y_lo, y_hi = float(ys.min()), float(ys.max())
    out = [_header(), _axes(x_label, ("log10 " if log_y else "") + y_label, title)]
    for i, (x, y, label) in enumerate(series):
        y = np.asarray(y, float)
        if log_y:
            y = np.log10(np.maximum(y, 1e-30))
        px = _scale(x, x_lo, x_hi, MARGIN, WIDTH - MARGIN)
        py = _scale(y, y_lo, y_hi, HEIGHT - MARGIN, MARGIN)
        pts = " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in zip(px, py))
        color = _PALETTE[i % len(_PALETTE)]
        out.append(
            f'<polyline fill="none" stroke="{color}" stroke-width="1.2" '
            f'points="{pts}"/>\n'
        )
        if label:
            out.append(
                f'<text x="{WIDTH - MARGIN - 6}" y="{MARGIN + 16 + 16 * i}" '
                f'text-anchor="end" font-family="monospace" font-size="12" '
                f'fill="{color}">{label}</text>\n'
            )
    for x, y, label in marks:
        yv = np.log10(max(y, 1e-30)) if log_y else y
        px = float(_scale([x], x_lo, x_hi, MARGIN, WIDTH - MARGIN)[0])
        py = float(_scale([yv], y_lo, y_hi, HEIGHT - MARGIN, MARGIN)[0])
        out.append(
            f'<circle cx="{_fmt(px)}" cy="{_fmt(py)}" r="3.5" fill="none" '
            f'stroke="#000000"/>\n'
            f'<text x="{_fmt(px + 5)}" y="{_fmt(py - 5)}" '
            f'font-family="monospace" font-size="11">{label}</text>\n'
        )
    out.append("</svg>\n")
    return "".join(out)


def q_circle_chart(points, loops, title="Q-circle"):
    """Unit-disc trajectory of S11 with the unit circle outline."""
    size = 480
    c = size / 2.0
    r = size / 2.0 - 30.0
    out = [_header(size, size)]
    out.append(
        f'<circle cx="{_fmt(c)}" cy="{_fmt(c)}" r="{_fmt(r)}" fill="none" '
        f'stroke="#888888"/>\n'
        f'<line x1="{_fmt(c - r)}" y1="{_fmt(c)}" x2="{_fmt(c + r)}" '
        f'y2="{_fmt(c)}" stroke="#cccccc"/>\n'
    )
    pts = " ".join(
        f"{_fmt(c + p[0] * r)},{_fmt(c - p[1] * r)}" for p in np.asarray(points)
    )
    out.append(
        f'<polyline fill="none" stroke="#1f77b4" stroke-width="1.2" '
        f'points="{pts}"/>\n'
        f'<text x="{size // 2}" y="20" text-anchor="middle" '
        f'font-family="monospace" font-size="14">{title} (loops: {loops})</text>\n'
    )
    out.append("</svg>\n")
    return "".join(out)


def heatmap_chart(matrix, b_grid, f_grid, title="|Z| heatmap", log_scale=True):
    """Bias x frequency lattice rendered as grayscale cells (dark = low |Z|)."""
    m = np.asarray(matrix, dtype=float)
    if log_scale:
        m = np.log10(np.maximum(m, 1e-30))
    lo, hi = float(m.min()), float(m.max())
    norm = (m - lo) / (hi - lo) if hi > lo else np.zeros_like(m)
    n_b, n_f = m.shape
    cw = (WIDTH - 2 * MARGIN) / n_f
    ch = (HEIGHT - 2 * MARGIN) / n_b
    out = [_header(), _axes("f (Hz)", "bias (T)", title)]
    for i in range(n_b):
        # low bias at the bottom of the plot
        y = HEIGHT - MARGIN - (i + 1) * ch
        for j in range(n_f):
            level = int(round(255 * norm[i, j]))
            out.append(
                f'<rect x="{_fmt(MARGIN + j * cw)}" y="{_fmt(y)}" '
                f'width="{_fmt(cw + 0.5)}" height="{_fmt(ch + 0.5)}" '
                f'fill="rgb({level},{level},{level})"/>\n'
            )
    out.append("</svg>\n")
    return "".join(out)
