"""Minimal self-contained SVG figures: line plots and categorical heatmaps."""

from __future__ import annotations

from html import escape
from pathlib import Path

import numpy as np

W, H = 640, 400
PAD_L, PAD_R, PAD_T, PAD_B = 60, 150, 36, 48

REGIME_COLORS = {
    "Case1": "#f2c94c",  # yellow
    "Case2": "#d64545",  # red
    "Case3": "#3b6fd6",  # blue
    "Case4": "#3fa34d",  # green
    "Boundary": "#222222",
    None: "#ffffff",
}


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def _frame(title, xlabel, ylabel, xlim, ylim):
    x0, x1 = xlim
    y0, y1 = ylim
    pw, ph = W - PAD_L - PAD_R, H - PAD_T - PAD_B
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
        f'viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">',
        f'<rect width="{W}" height="{H}" fill="white"/>',
        f'<text x="{W / 2}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<rect x="{PAD_L}" y="{PAD_T}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>',
        f'<text x="{PAD_L + pw / 2}" y="{H - 10}" text-anchor="middle">{escape(xlabel)}</text>',
        f'<text x="14" y="{PAD_T + ph / 2}" text-anchor="middle" '
        f'transform="rotate(-90 14 {PAD_T + ph / 2})">{escape(ylabel)}</text>',
    ]
    for frac in (0.0, 0.5, 1.0):
        xv = x0 + frac * (x1 - x0)
        yv = y0 + frac * (y1 - y0)
        parts.append(f'<text x="{_fmt(PAD_L + frac * pw)}" y="{PAD_T + ph + 16}" '
                     f'text-anchor="middle">{xv:.3g}</text>')
        parts.append(f'<text x="{PAD_L - 6}" y="{_fmt(PAD_T + ph - frac * ph + 4)}" '
                     f'text-anchor="end">{yv:.3g}</text>')

    def sx(x):
        return PAD_L + (x - x0) / ((x1 - x0) or 1.0) * pw

    def sy(y):
        return PAD_T + ph - (y - y0) / ((y1 - y0) or 1.0) * ph

    return parts, sx, sy


def line_plot(series: list, path, title="", xlabel="t", ylabel="theta",
              ylim=(0.0, 1.0)) -> None:
    """``series`` is a list of (label, x, y, color, dashed)."""
    xs = np.concatenate([np.asarray(s[1], float) for s in series])
    parts, sx, sy = _frame(title, xlabel, ylabel, (xs.min(), xs.max()), ylim)
    for i, (label, x, y, color, dashed) in enumerate(series):
        x, y = np.asarray(x, float), np.asarray(y, float)
        if len(x) > 2000:  # thin for file size
            keep = np.unique(np.linspace(0, len(x) - 1, 2000).astype(int))
            x, y = x[keep], y[keep]
        pts = " ".join(f"{_fmt(sx(a))},{_fmt(sy(b))}" for a, b in zip(x, y))
        dash = ' stroke-dasharray="6 4"' if dashed else ""
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.6"{dash} '
                     f'points="{pts}"/>')
        ly = PAD_T + 14 + 18 * i
        parts.append(f'<line x1="{W - PAD_R + 10}" y1="{ly - 4}" x2="{W - PAD_R + 34}" '
                     f'y2="{ly - 4}" stroke="{color}" stroke-width="2"{dash}/>')
        parts.append(f'<text x="{W - PAD_R + 40}" y="{ly}">{escape(label)}</text>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n", encoding="utf-8")


def trajectory_plot(trajs: dict, path, title="") -> None:
    """``trajs`` maps a label to a Trajectory; blue/red components per label."""
    series = []
    for i, (label, tr) in enumerate(trajs.items()):
        dashed = i % 2 == 1
        series.append((f"{label} blue", tr.t, tr.theta[:, 0], "#3b6fd6", dashed))
        series.append((f"{label} red", tr.t, tr.theta[:, 1], "#d64545", dashed))
    line_plot(series, path, title=title)


def heatmap(labels: np.ndarray, xvals, yvals, path, title="", xlabel="", ylabel="",
            colors=REGIME_COLORS) -> None:
    """Categorical heatmap; ``labels[i, j]`` is drawn at (xvals[i], yvals[j])."""
    xvals, yvals = np.asarray(xvals, float), np.asarray(yvals, float)
    parts, sx, sy = _frame(title, xlabel, ylabel, (xvals[0], xvals[-1]), (yvals[0], yvals[-1]))
    nx, ny = labels.shape
    cw = (sx(xvals[-1]) - sx(xvals[0])) / max(nx - 1, 1)
    ch = (sy(yvals[0]) - sy(yvals[-1])) / max(ny - 1, 1)
    for i in range(nx):
        for j in range(ny):
            color = colors.get(labels[i, j], "#999999")
            parts.append(f'<rect x="{_fmt(sx(xvals[i]) - cw / 2)}" '
                         f'y="{_fmt(sy(yvals[j]) - ch / 2)}" width="{_fmt(cw)}" '
                         f'height="{_fmt(ch)}" fill="{color}"/>')
    for k, (name, color) in enumerate(c for c in colors.items() if c[0] is not None):
        ly = PAD_T + 14 + 18 * k
        parts.append(f'<rect x="{W - PAD_R + 10}" y="{ly - 10}" width="12" height="12" '
                     f'fill="{color}"/>')
        parts.append(f'<text x="{W - PAD_R + 28}" y="{ly}">{escape(name)}</text>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n", encoding="utf-8")
