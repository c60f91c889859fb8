"""Minimal SVG figures: search plans with covariance ellipses, particle clouds."""
from __future__ import annotations

import math

import numpy as np

_HEADER = ('<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="{vx:.6g} {vy:.6g} {vw:.6g} {vh:.6g}">\n'
           '<g transform="scale(1,-1)">\n')
_FOOTER = "</g>\n</svg>\n"


def ellipse_points(cov_xy, k: float, n: int = 72) -> np.ndarray:
    """Points on the k-sigma contour of a 2x2 covariance."""
    lam, vec = np.linalg.eigh(np.asarray(cov_xy, dtype=float))
    root = vec * np.sqrt(np.clip(lam, 0.0, None))
    a = np.linspace(0.0, 2 * math.pi, n, endpoint=False)
    return k * np.column_stack([np.cos(a), np.sin(a)]) @ root.T


def _poly(pts, cls, closed=True):
    tag = "polygon" if closed else "polyline"
    coords = " ".join(f"{x:.6g},{y:.6g}" for x, y in pts)
    return f'<{tag} class="{cls}" points="{coords}" fill="none" stroke-width="{{sw}}"/>\n'


def _document(body, pts, size):
    pts = np.asarray(pts, dtype=float).reshape(-1, 2)
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    span = max(float((hi - lo).max()), 1e-9)
    pad = 0.05 * span
    lo, hi = lo - pad, hi + pad
    w, h = hi - lo
    head = _HEADER.format(w=size, h=size, vx=lo[0], vy=-hi[1], vw=w, vh=h)
    return head + body.replace("{sw}", f"{span / 400:.4g}") + _FOOTER


def plan_svg(waypoints, cov_xy=None, size: int = 600) -> str:
    """Search path with optional 1, 2 and 3 sigma ellipses."""
    wp = np.asarray(waypoints, dtype=float).reshape(-1, 2)
    body = _poly(wp, "plan", closed=False).replace('fill="none"', 'fill="none" stroke="black"')
    extent = [wp]
    if cov_xy is not None:
        for k, col in ((1, "#1f77b4"), (2, "#2ca02c"), (3, "#d62728")):
            e = ellipse_points(cov_xy, k)
            extent.append(e)
            body += _poly(e, f"sigma{k}").replace('fill="none"', f'fill="none" stroke="{col}"')
    return _document(body, np.vstack(extent), size)


def particles_svg(xy, weights=None, size: int = 600) -> str:
    """Particle positions as dots, radius growing with weight."""
    xy = np.asarray(xy, dtype=float).reshape(-1, 2)
    w = np.full(len(xy), 1.0 / len(xy)) if weights is None else np.asarray(weights, dtype=float)
    span = max(float(np.ptp(xy, axis=0).max()), 1e-9)
    r = span / 300 * (0.5 + np.sqrt(w / w.max()))
    body = "".join(f'<circle cx="{x:.6g}" cy="{y:.6g}" r="{ri:.4g}" fill="#444"/>\n'
                   for (x, y), ri in zip(xy, r))
    return _document(body, xy, size)


def write_svg(path, text: str) -> None:
    with open(path, "w") as fh:
        fh.write(text)
