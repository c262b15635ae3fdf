"""Planar helpers shared by layout, placement and validation."""

from __future__ import annotations

import math
from collections.abc import Sequence

import numpy as np
import shapely
from shapely.geometry import Polygon, box
from shapely.geometry.polygon import orient

Point = tuple[float, float]

TWO_PI = 2.0 * math.pi
QUANTUM = 1e-6


def q(x: float, quantum: float = QUANTUM) -> float:
    """Snap to a fixed decimal quantum so serialized values are platform-stable."""
    v = round(x / quantum) * quantum
    v = float(f"{v:.9f}")
    return 0.0 if v == 0 else v


def normalize_yaw(yaw: float) -> float:
    y = math.fmod(yaw, TWO_PI)
    if y < 0:
        y += TWO_PI
    y = q(y, 1e-9)
    if y >= TWO_PI - 5e-10:
        y = 0.0
    return y


def yaw_cos_sin(yaw: float) -> tuple[float, float]:
    # exact values on the four axis-aligned yaws keep footprints on the grid
    for k in range(4):
        if abs(yaw - k * math.pi / 2) < 1e-12:
            return ((1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0))[k]
    return math.cos(yaw), math.sin(yaw)


def box_row(cx: float, cy: float, sx: float, sy: float, yaw: float, z0: float, z1: float) -> np.ndarray:
    c, s = yaw_cos_sin(yaw)
    return np.array([cx, cy, sx / 2.0, sy / 2.0, c, s, z0, z1], dtype=np.float64)


def box_corners(cx: float, cy: float, sx: float, sy: float, yaw: float) -> list[Point]:
    c, s = yaw_cos_sin(yaw)
    hx, hy = sx / 2.0, sy / 2.0
    out = []
    for ux, uy in ((-hx, -hy), (hx, -hy), (hx, hy), (-hx, hy)):
        out.append((cx + ux * c - uy * s, cy + ux * s + uy * c))
    return out


def footprint_polygon(cx: float, cy: float, sx: float, sy: float, yaw: float) -> Polygon:
    return Polygon(box_corners(cx, cy, sx, sy, yaw))


def local_to_world(cx: float, cy: float, yaw: float, lx: float, ly: float) -> Point:
    c, s = yaw_cos_sin(yaw)
    return (cx + lx * c - ly * s, cy + lx * s + ly * c)


def rect(x0: float, y0: float, x1: float, y1: float) -> Polygon:
    return box(x0, y0, x1, y1)


def polygon_vertices(poly: Polygon) -> tuple[Point, ...]:
    """Counter-clockwise exterior ring without the closing vertex, collinear points
    dropped, starting at the lowest (y, x) vertex."""
    poly = orient(poly.simplify(0.0), 1.0)
    pts = [(float(x), float(y)) for x, y in list(poly.exterior.coords)[:-1]]
    pts = _drop_collinear(pts)
    start = min(range(len(pts)), key=lambda i: (pts[i][1], pts[i][0]))
    pts = pts[start:] + pts[:start]
    return tuple((q(x, 1e-9), q(y, 1e-9)) for x, y in pts)


def _drop_collinear(pts: list[Point]) -> list[Point]:
    changed = True
    while changed and len(pts) > 3:
        changed = False
        for i in range(len(pts)):
            a, b, c = pts[i - 1], pts[i], pts[(i + 1) % len(pts)]
            cross = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0])
            if abs(cross) < 1e-12:
                pts.pop(i)
                changed = True
                break
    return pts


def to_polygon(vertices: Sequence[Point]) -> Polygon:
    return Polygon(vertices)


def is_rectilinear(vertices: Sequence[Point], eps: float = 1e-9) -> bool:
    n = len(vertices)
    for i in range(n):
        (x0, y0), (x1, y1) = vertices[i], vertices[(i + 1) % n]
        if abs(x0 - x1) > eps and abs(y0 - y1) > eps:
            return False
    return True


def bbox(vertices: Sequence[Point]) -> tuple[float, float, float, float]:
    xs = [p[0] for p in vertices]
    ys = [p[1] for p in vertices]
    return min(xs), min(ys), max(xs), max(ys)


def shoelace(vertices: Sequence[Point]) -> float:
    s = math.fsum(
        vertices[i][0] * vertices[(i + 1) % len(vertices)][1] - vertices[(i + 1) % len(vertices)][0] * vertices[i][1]
        for i in range(len(vertices))
    )
    return abs(s) / 2.0


def contains_with_tolerance(region: Polygon, shape: Polygon, tol: float = 1e-3) -> bool:
    """True when ``shape`` protrudes from ``region`` by no more than ``tol``."""
    return bool(shapely.contains(region.buffer(tol, join_style="mitre"), shape))
