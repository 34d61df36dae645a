"""Minimal SVG line and scatter plots (no plotting dependency)."""

from __future__ import annotations

import numpy as np

W, H, PAD = 480, 320, 40
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _scale(v, lo, hi, a, b):
    if hi == lo:
        return np.full_like(v, 0.5 * (a + b), dtype=float)
    return a + (v - lo) * (b - a) / (hi - lo)


def plot(series, title: str = "", scatter: bool = False) -> str:
    """SVG text for ``series``: a list of ``(x, y, label)`` triples."""
    xs = np.concatenate([np.asarray(s[0], float) for s in series])
    ys = np.concatenate([np.asarray(s[1], float) for s in series])
    ok = np.isfinite(xs) & np.isfinite(ys)
    x0, x1 = (xs[ok].min(), xs[ok].max()) if ok.any() else (0.0, 1.0)
    y0, y1 = (ys[ok].min(), ys[ok].max()) if ok.any() else (0.0, 1.0)
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
           f'<rect width="{W}" height="{H}" fill="white"/>',
           f'<text x="{W // 2}" y="18" text-anchor="middle" font-size="13">{title}</text>',
           f'<rect x="{PAD}" y="{PAD}" width="{W - 2 * PAD}" height="{H - 2 * PAD}" '
           'fill="none" stroke="#999"/>',
           f'<text x="{PAD}" y="{H - 12}" font-size="10">{x0:.4g}</text>',
           f'<text x="{W - PAD}" y="{H - 12}" font-size="10" text-anchor="end">{x1:.4g}</text>',
           f'<text x="4" y="{H - PAD}" font-size="10">{y0:.4g}</text>',
           f'<text x="4" y="{PAD + 4}" font-size="10">{y1:.4g}</text>']
    for i, (x, y, label) in enumerate(series):
        x, y = np.asarray(x, float), np.asarray(y, float)
        px = _scale(x, x0, x1, PAD, W - PAD)
        py = _scale(y, y0, y1, H - PAD, PAD)
        c = COLORS[i % len(COLORS)]
        if scatter:
            out += [f'<circle cx="{a:.2f}" cy="{b:.2f}" r="2" fill="{c}"/>' for a, b in zip(px, py)]
        else:
            pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px, py))
            out.append(f'<polyline points="{pts}" fill="none" stroke="{c}" stroke-width="1.5"/>')
        out.append(f'<text x="{W - PAD - 4}" y="{PAD + 14 + 12 * i}" font-size="10" '
                   f'text-anchor="end" fill="{c}">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
