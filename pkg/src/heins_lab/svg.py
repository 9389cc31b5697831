"""Bare-bones SVG output for diagnostics (presentation only)."""

from __future__ import annotations

import math

import numpy as np

COLORS = {"f": "#d62728", "g": "#1f77b4", "both": "#999999", "neither": "#2ca02c"}


def _doc(body, w, h):
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">\n'
            + "\n".join(body) + "\n</svg>\n")


def ring_diagram(arcsets, labels=None, size=480):
    """Concentric rings, one per circle scan, coloured by which function is small."""
    c = size / 2
    body = [f'<rect width="{size}" height="{size}" fill="white"/>']
    k = len(arcsets)
    for i, a in enumerate(arcsets):
        r = c * (0.25 + 0.7 * (i + 1) / max(k, 1))
        for s, e, tag in zip(a.starts, a.ends, a.tags):
            x0, y0 = c + r * math.cos(s), c - r * math.sin(s)
            x1, y1 = c + r * math.cos(e), c - r * math.sin(e)
            large = 1 if e - s > math.pi else 0
            if e - s >= 2 * math.pi - 1e-12:
                body.append(f'<circle cx="{c:.2f}" cy="{c:.2f}" r="{r:.2f}" fill="none" '
                            f'stroke="{COLORS[tag]}" stroke-width="4"/>')
                continue
            body.append(f'<path d="M {x0:.2f} {y0:.2f} A {r:.2f} {r:.2f} 0 {large} 0 {x1:.2f} {y1:.2f}" '
                        f'fill="none" stroke="{COLORS[tag]}" stroke-width="4"/>')
        if labels:
            body.append(f'<text x="{c + 4:.1f}" y="{c - r - 3:.1f}" font-size="9">{labels[i]}</text>')
    return _doc(body, size, size)


def polylines(curves, size=520, pad=20):
    """``curves`` is a list of (points (k,2) or complex array, colour, width)."""
    pts = []
    norm = []
    for p, col, wd in curves:
        p = np.asarray(p)
        if np.iscomplexobj(p):
            p = np.c_[p.real, p.imag]
        norm.append((p, col, wd))
        pts.append(p)
    allp = np.vstack(pts)
    lo, hi = allp.min(0), allp.max(0)
    scale = (size - 2 * pad) / max(float(np.max(hi - lo)), 1e-12)
    body = [f'<rect width="{size}" height="{size}" fill="white"/>']
    for p, col, wd in norm:
        q = (p - lo) * scale + pad
        q[:, 1] = size - q[:, 1]
        d = " ".join(f"{x:.2f},{y:.2f}" for x, y in q)
        body.append(f'<polyline points="{d}" fill="none" stroke="{col}" stroke-width="{wd}"/>')
    return _doc(body, size, size)
