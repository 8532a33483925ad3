"""Hand-rolled SVG scatter plots (deterministic bytes, one circle per point)."""

from __future__ import annotations

import numpy as np

CLOUD_COLORS = {
    "source": "#8B4513",     # brown
    "target": "#4B0082",     # indigo
    "generated": "#FFC0CB",  # pink
}

_SIZE = 640
_MARGIN_FRACTION = 0.05


def emit_scatter_svg(clouds, path) -> None:
    """Write the clouds as an SVG scatter, auto-scaled with a 5% margin."""
    if not clouds:
        raise ValueError("no clouds to plot")
    all_pts = np.concatenate([np.asarray(c.points, dtype=np.float64) for c in clouds])
    lo = all_pts.min(axis=0)
    hi = all_pts.max(axis=0)
    span = np.maximum(hi - lo, 1e-9)
    margin = _MARGIN_FRACTION * span.max()
    lo -= margin
    scale = (_SIZE - 0.0) / (span + 2 * margin).max()

    def to_px(pts):
        x = (pts[:, 0] - lo[0]) * scale
        y = _SIZE - (pts[:, 1] - lo[1]) * scale  # SVG y grows downward
        return x, y

    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_SIZE}" height="{_SIZE}" '
        f'viewBox="0 0 {_SIZE} {_SIZE}">',
        f'<rect width="{_SIZE}" height="{_SIZE}" fill="white"/>',
    ]
    for cloud in clouds:
        color = CLOUD_COLORS.get(cloud.label, "#808080")
        xs, ys = to_px(cloud.points)
        lines.append(f'<g fill="{color}" fill-opacity="0.75">')
        for x, y in zip(xs, ys):
            lines.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="3"/>')
        lines.append("</g>")
    lines.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
