"""Exact predicates on rational polygons (d=2) and intervals (d=1).

A shape is a tuple of vertices, each a tuple of Fractions. Intervals are the
two-vertex shapes ``((lo,), (hi,))``.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterator, Sequence, Tuple

from ..core.errors import GeometryError

Point = Tuple[Fraction, ...]
Shape = Tuple[Point, ...]

INSIDE = 1
BOUNDARY = 0
OUTSIDE = -1


def place(shape: Shape, scale: Fraction, offset: Sequence[Fraction]) -> Shape:
    return tuple(tuple(scale * c + o for c, o in zip(v, offset)) for v in shape)


def orient(a: Point, b: Point, c: Point) -> int:
    cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    return (cross > 0) - (cross < 0)


def signed_area(polygon: Shape) -> Fraction:
    total = Fraction(0)
    for (x0, y0), (x1, y1) in edges(polygon):
        total += x0 * y1 - x1 * y0
    return total / 2


def edges(polygon: Shape) -> Iterator[Tuple[Point, Point]]:
    n = len(polygon)
    for k in range(n):
        yield polygon[k], polygon[(k + 1) % n]


def on_segment(p: Point, a: Point, b: Point) -> bool:
    if orient(a, b, p) != 0:
        return False
    return min(a[0], b[0]) <= p[0] <= max(a[0], b[0]) and min(a[1], b[1]) <= p[1] <= max(a[1], b[1])


def proper_crossing(a: Point, b: Point, c: Point, d: Point) -> bool:
    """Segments cross at a single point interior to both."""
    o1, o2 = orient(a, b, c), orient(a, b, d)
    o3, o4 = orient(c, d, a), orient(c, d, b)
    return o1 * o2 < 0 and o3 * o4 < 0


def segments_touch(a: Point, b: Point, c: Point, d: Point) -> bool:
    if proper_crossing(a, b, c, d):
        return True
    return on_segment(c, a, b) or on_segment(d, a, b) or on_segment(a, c, d) or on_segment(b, c, d)


def is_simple(polygon: Shape) -> bool:
    n = len(polygon)
    if n < 3 or signed_area(polygon) == 0:
        return False
    if len(set(polygon)) != n:
        return False
    sides = list(edges(polygon))
    for i in range(n):
        for j in range(i + 1, n):
            a, b = sides[i]
            c, d = sides[j]
            if j == i + 1 or (i == 0 and j == n - 1):
                # adjacent sides may only share their common vertex
                shared = b if j == i + 1 else a
                far = d if j == i + 1 else c
                near = a if j == i + 1 else b
                if orient(near, shared, far) == 0 and (on_segment(far, near, shared) or on_segment(near, shared, far)):
                    return False
                continue
            if segments_touch(a, b, c, d):
                return False
    return True


def locate(point: Point, polygon: Shape) -> int:
    """INSIDE, BOUNDARY or OUTSIDE by exact crossing parity."""
    for a, b in edges(polygon):
        if on_segment(point, a, b):
            return BOUNDARY
    x, y = point
    inside = False
    for (x0, y0), (x1, y1) in edges(polygon):
        if (y0 > y) != (y1 > y):
            x_cross = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
            if x_cross > x:
                inside = not inside
    return INSIDE if inside else OUTSIDE


def interior_point(polygon: Shape) -> Point:
    """A point strictly inside a simple polygon: the centroid of an ear."""
    n = len(polygon)
    ccw = 1 if signed_area(polygon) > 0 else -1
    for k in range(n):
        a, b, c = polygon[k - 1], polygon[k], polygon[(k + 1) % n]
        if orient(a, b, c) != ccw:
            continue
        ear = (a, b, c)
        if any(locate(v, ear) != OUTSIDE for v in polygon if v not in ear):
            continue
        return ((a[0] + b[0] + c[0]) / 3, (a[1] + b[1] + c[1]) / 3)
    raise GeometryError("polygon has no ear; it is not simple")


def _any_crossing(p: Shape, q: Shape) -> bool:
    return any(proper_crossing(a, b, c, d) for a, b in edges(p) for c, d in edges(q))


def _edge_pieces(polygon: Shape, other: Shape) -> Iterator[Point]:
    """Midpoints of the edges of ``polygon`` cut at every vertex of ``other`` lying on them.

    Without proper crossings the boundary of ``other`` meets each piece either
    nowhere in its relative interior or along all of it.
    """
    for a, b in edges(polygon):
        axis = 0 if a[0] != b[0] else 1
        span = b[axis] - a[axis]
        cuts = sorted({(v[axis] - a[axis]) / span for v in other if on_segment(v, a, b)} | {Fraction(0), Fraction(1)})
        for s, e in zip(cuts, cuts[1:]):
            m = (s + e) / 2
            yield (a[0] + m * (b[0] - a[0]), a[1] + m * (b[1] - a[1]))


def polygons_disjoint(p: Shape, q: Shape) -> bool:
    """Interiors of two simple polygons do not meet."""
    if _any_crossing(p, q):
        return False
    if any(locate(v, q) == INSIDE for v in p) or any(locate(v, p) == INSIDE for v in q):
        return False
    if any(locate(m, q) == INSIDE for m in _edge_pieces(p, q)):
        return False
    if any(locate(m, p) == INSIDE for m in _edge_pieces(q, p)):
        return False
    # boundaries avoid both interiors, so overlap would mean one interior holds the other
    return locate(interior_point(p), q) != INSIDE and locate(interior_point(q), p) != INSIDE


def polygon_contains(outer: Shape, inner: Shape) -> bool:
    """Closed ``inner`` lies in closed ``outer``: its whole boundary does, piece by piece."""
    if _any_crossing(outer, inner):
        return False
    if any(locate(v, outer) == OUTSIDE for v in inner):
        return False
    return not any(locate(m, outer) == OUTSIDE for m in _edge_pieces(inner, outer))


def _interval(shape: Shape) -> Tuple[Fraction, Fraction]:
    return shape[0][0], shape[1][0]


def volume(shape: Shape, dimension: int) -> Fraction:
    if dimension == 1:
        lo, hi = _interval(shape)
        return hi - lo
    return abs(signed_area(shape))


def is_valid_shape(shape: Shape, dimension: int) -> bool:
    if dimension == 1:
        lo, hi = _interval(shape)
        return len(shape) == 2 and lo < hi
    return is_simple(shape)


def contains(outer: Shape, inner: Shape, dimension: int) -> bool:
    if dimension == 1:
        (a, b), (c, d) = _interval(outer), _interval(inner)
        return a <= c and d <= b
    return polygon_contains(outer, inner)


def disjoint(p: Shape, q: Shape, dimension: int) -> bool:
    if dimension == 1:
        (a, b), (c, d) = _interval(p), _interval(q)
        return b <= c or d <= a
    return polygons_disjoint(p, q)


def strictly_inside(outer: Shape, inner: Shape, dimension: int) -> bool:
    """``inner`` lies in the interior of ``outer``, touching no part of its boundary."""
    if dimension == 1:
        (a, b), (c, d) = _interval(outer), _interval(inner)
        return a < c and d < b
    if any(locate(v, outer) != INSIDE for v in inner):
        return False
    return not any(segments_touch(a, b, c, d) for a, b in edges(outer) for c, d in edges(inner))


def point_location(point: Point, shape: Shape, dimension: int) -> int:
    if dimension == 1:
        lo, hi = _interval(shape)
        x = point[0]
        if lo < x < hi:
            return INSIDE
        return BOUNDARY if x in (lo, hi) else OUTSIDE
    return locate(point, shape)


def bounding_box(shape: Shape) -> Tuple[Point, Point]:
    dims = range(len(shape[0]))
    return (
        tuple(min(v[k] for v in shape) for k in dims),
        tuple(max(v[k] for v in shape) for k in dims),
    )


def box_contains(low: Point, high: Point, shape: Shape) -> bool:
    return all(low[k] <= v[k] <= high[k] for v in shape for k in range(len(low)))


def box_intersects(low: Point, high: Point, shape: Shape) -> bool:
    """Support of ``shape`` meets the open box (positive-volume overlap)."""
    dimension = len(low)
    box_lo, box_hi = bounding_box(shape)
    if any(box_hi[k] <= low[k] or box_lo[k] >= high[k] for k in range(dimension)):
        return False
    if dimension == 1:
        return True
    rect = ((low[0], low[1]), (high[0], low[1]), (high[0], high[1]), (low[0], high[1]))
    return not polygons_disjoint(rect, shape)
