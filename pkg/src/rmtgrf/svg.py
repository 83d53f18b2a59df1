"""Minimal SVG heat maps, written without a plotting dependency.

Colour map: a fixed five-stop ramp (dark blue, blue, green, yellow, dark red)
interpolated linearly between ``vmin`` and ``vmax``.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

COLOR_STOPS = np.array([
    [0.0, 0.0, 0.5],
    [0.0, 0.4, 1.0],
    [0.2, 0.8, 0.3],
    [1.0, 0.9, 0.0],
    [0.6, 0.0, 0.0],
])


def colormap(values, vmin: float, vmax: float) -> np.ndarray:
    """RGB in [0, 1] for each value; NaN maps to grey."""
    v = np.asarray(values, dtype=float)
    t = np.clip((v - vmin) / (vmax - vmin if vmax > vmin else 1.0), 0.0, 1.0)
    pos = np.nan_to_num(t) * (len(COLOR_STOPS) - 1)
    i = np.minimum(pos.astype(int), len(COLOR_STOPS) - 2)
    f = (pos - i)[..., None]
    rgb = COLOR_STOPS[i] * (1 - f) + COLOR_STOPS[i + 1] * f
    rgb[np.isnan(v)] = 0.7
    return rgb


def heatmap_svg(array, title: str = "", vmin=None, vmax=None, cell_px: int = 5,
                label: str = "") -> str:
    a = np.asarray(array, dtype=float)
    if a.ndim != 2:
        raise ValueError(f"heat map needs a 2D array, got {a.shape}")
    finite = a[np.isfinite(a)]
    vmin = float(finite.min()) if vmin is None and finite.size else (0.0 if vmin is None else vmin)
    vmax = float(finite.max()) if vmax is None and finite.size else (1.0 if vmax is None else vmax)
    rgb = (colormap(a, vmin, vmax) * 255).round().astype(int)
    h, w = a.shape
    top, bar = 20, 30
    W, H = w * cell_px, h * cell_px + top + bar
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
           f'shape-rendering="crispEdges">',
           f'<text x="2" y="14" font-size="12" font-family="sans-serif">{title}</text>']
    for r in range(h):
        for c in range(w):
            R, G, B = rgb[r, c]
            out.append(f'<rect x="{c * cell_px}" y="{top + r * cell_px}" width="{cell_px}" '
                       f'height="{cell_px}" fill="#{R:02x}{G:02x}{B:02x}"/>')
    # colour bar
    y0 = top + h * cell_px + 6
    n = 64
    for k in range(n):
        R, G, B = (colormap(vmin + (vmax - vmin) * k / (n - 1), vmin, vmax) * 255).round().astype(int)
        out.append(f'<rect x="{k * W / n:.2f}" y="{y0}" width="{W / n + 0.5:.2f}" height="8" '
                   f'fill="#{R:02x}{G:02x}{B:02x}"/>')
    out.append(f'<text x="0" y="{y0 + 20}" font-size="10" font-family="sans-serif">{vmin:.3g}</text>')
    out.append(f'<text x="{W}" y="{y0 + 20}" font-size="10" font-family="sans-serif" '
               f'text-anchor="end">{vmax:.3g} {label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_heatmap(path, array, **kwargs) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(heatmap_svg(array, **kwargs))
    return path


def histogram_svg(counts, edges, title: str = "", width: int = 400, height: int = 200) -> str:
    counts = np.asarray(counts, dtype=float)
    edges = np.asarray(edges, dtype=float)
    top = 20
    peak = counts.max() if counts.size and counts.max() > 0 else 1.0
    bw = width / max(len(counts), 1)
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height + top + 20}">',
           f'<text x="2" y="14" font-size="12" font-family="sans-serif">{title}</text>']
    for k, c in enumerate(counts):
        bh = height * c / peak
        out.append(f'<rect x="{k * bw:.2f}" y="{top + height - bh:.2f}" width="{bw:.2f}" '
                   f'height="{bh:.2f}" fill="#3366cc" stroke="#ffffff" stroke-width="0.5"/>')
    if edges.size:
        y = top + height + 14
        out.append(f'<text x="0" y="{y}" font-size="10" font-family="sans-serif">{edges[0]:.3g}</text>')
        out.append(f'<text x="{width}" y="{y}" font-size="10" font-family="sans-serif" '
                   f'text-anchor="end">{edges[-1]:.3g}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
