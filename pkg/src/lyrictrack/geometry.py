"""Convex polygon math for rotated text boxes: area, intersection, IoU.

All polygons are sequences of (x, y) vertices in counter-clockwise order
(positive shoelace sum). Only convex inputs are supported; the clipping
routine silently produces garbage on non-convex polygons, so callers
validate convexity at construction time (see `corpus.Quad`).
"""

from __future__ import annotations

import math
from typing import Optional, Sequence

Point = tuple[float, float]

# Intersections with area below this are treated as empty (edge/corner contact).
DEGENERACY_EPS = 1e-9


def signed_area(vertices: Sequence[Point]) -> float:
    """Shoelace sum; positive for counter-clockwise vertex order."""
    total = 0.0
    n = len(vertices)
    for i in range(n):
        x0, y0 = vertices[i]
        x1, y1 = vertices[(i + 1) % n]
        total += x0 * y1 - x1 * y0
    return 0.5 * total


def area(vertices: Sequence[Point]) -> float:
    """Polygon area via the shoelace formula."""
    return abs(signed_area(vertices))


def is_convex(vertices: Sequence[Point], eps: float = DEGENERACY_EPS) -> bool:
    """True for a convex, counter-clockwise polygon with non-trivial area.

    Collinear consecutive edges are tolerated (cross product within -eps).
    """
    n = len(vertices)
    if n < 3 or signed_area(vertices) <= eps:
        return False
    for i in range(n):
        ax, ay = vertices[i]
        bx, by = vertices[(i + 1) % n]
        cx, cy = vertices[(i + 2) % n]
        cross = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
        if cross < -eps:
            return False
    return True


def _edge_intersection(p: Point, q: Point, a: Point, b: Point) -> Point:
    """Intersection of segment p-q with the infinite line through a-b."""
    dx, dy = b[0] - a[0], b[1] - a[1]
    sp = dx * (p[1] - a[1]) - dy * (p[0] - a[0])
    sq = dx * (q[1] - a[1]) - dy * (q[0] - a[0])
    t = sp / (sp - sq)
    return (p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1]))


def _clip_halfplane(poly: list[Point], a: Point, b: Point) -> list[Point]:
    """Keep the part of poly on the left of the directed line a -> b."""
    out: list[Point] = []
    dx, dy = b[0] - a[0], b[1] - a[1]
    n = len(poly)
    for i in range(n):
        p = poly[i]
        q = poly[(i + 1) % n]
        sp = dx * (p[1] - a[1]) - dy * (p[0] - a[0])
        sq = dx * (q[1] - a[1]) - dy * (q[0] - a[0])
        if sp >= 0.0:
            out.append(p)
            if sq < 0.0:
                out.append(_edge_intersection(p, q, a, b))
        elif sq >= 0.0:
            out.append(_edge_intersection(p, q, a, b))
    return out


def intersect(a: Sequence[Point], b: Sequence[Point]) -> Optional[list[Point]]:
    """Intersection polygon of two convex CCW polygons, or None.

    Sutherland-Hodgman clipping of `a` against each half-plane of `b`.
    Returns None when the intersection is empty or degenerate
    (area < DEGENERACY_EPS square pixels).
    """
    poly = [(float(x), float(y)) for x, y in a]
    nb = len(b)
    for i in range(nb):
        poly = _clip_halfplane(poly, b[i], b[(i + 1) % nb])
        if len(poly) < 3:
            return None
    if area(poly) < DEGENERACY_EPS:
        return None
    return poly


def iou(a: Sequence[Point], b: Sequence[Point]) -> float:
    """Intersection-over-union of two convex CCW polygons, in [0, 1]."""
    inter = intersect(a, b)
    inter_area = area(inter) if inter is not None else 0.0
    union = area(a) + area(b) - inter_area
    if union <= 0.0:
        return 0.0
    return min(1.0, inter_area / union)


def rect_vertices(cx: float, cy: float, w: float, h: float, angle: float) -> tuple[Point, Point, Point, Point]:
    """CCW corners of a rotated rectangle centered at (cx, cy).

    `angle` is in radians and gives the direction of the width edge
    (vertex 0 -> vertex 1).
    """
    ux, uy = math.cos(angle), math.sin(angle)
    nx, ny = -uy, ux
    hw, hh = 0.5 * w, 0.5 * h
    return (
        (cx - ux * hw - nx * hh, cy - uy * hw - ny * hh),
        (cx + ux * hw - nx * hh, cy + uy * hw - ny * hh),
        (cx + ux * hw + nx * hh, cy + uy * hw + ny * hh),
        (cx - ux * hw + nx * hh, cy - uy * hw + ny * hh),
    )
