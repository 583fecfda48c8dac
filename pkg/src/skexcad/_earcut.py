"""Ear-clipping triangulation of polygons with holes.

Port of the mapbox earcut algorithm (ISC licensed) operating on 2D vertex
arrays, with the z-order-curve acceleration removed: profile loops here are a
few hundred vertices at most.  Holes are merged into the outer ring through
bridge edges before clipping; output triangles reference the *original*
vertex indices, so bridge duplicates weld back automatically.  That property
is what keeps extruded caps and side walls index-consistent (watertight).

Input convention: ``vertices`` is the concatenation of all rings,
``hole_starts[i]`` the index where hole ``i`` begins.  Ring orientation is
normalized internally; output triangles are counter-clockwise.
"""

from __future__ import annotations

import math


class _Node:
    __slots__ = ("i", "x", "y", "prev", "next", "steiner")

    def __init__(self, i, x, y):
        self.i = i
        self.x = x
        self.y = y
        self.prev = None
        self.next = None
        self.steiner = False


def earcut(vertices, hole_starts=()):
    """Triangulate a polygon with holes.

    ``vertices``: sequence of (x, y) pairs, outer ring first, then hole rings.
    ``hole_starts``: start index of each hole ring within ``vertices``.
    Returns a flat list of vertex-index triples, one per triangle, CCW.
    """
    has_holes = bool(hole_starts)
    outer_len = hole_starts[0] if has_holes else len(vertices)
    outer_node = _linked_list(vertices, 0, outer_len, ccw=True)
    triangles: list[int] = []

    if not outer_node or outer_node.next is outer_node.prev:
        return triangles

    if has_holes:
        outer_node = _eliminate_holes(vertices, hole_starts, outer_node)

    _earcut_linked(outer_node, triangles)
    return triangles


def _linked_list(vertices, start, end, ccw):
    last = None
    if ccw == (_ring_area(vertices, start, end) > 0):
        for i in range(start, end):
            last = _insert_node(i, vertices[i][0], vertices[i][1], last)
    else:
        for i in reversed(range(start, end)):
            last = _insert_node(i, vertices[i][0], vertices[i][1], last)

    if last and _equals(last, last.next):
        _remove_node(last)
        last = last.next
    return last


def _ring_area(vertices, start, end):
    # shoelace; positive for counter-clockwise rings
    total = 0.0
    j = end - 1
    for i in range(start, end):
        total += (vertices[j][0] - vertices[i][0]) * (vertices[i][1] + vertices[j][1])
        j = i
    return total


def _filter_points(start, end=None):
    # drop duplicate and exactly-collinear points
    if not start:
        return start
    if not end:
        end = start
    p = start
    while True:
        again = False
        if not p.steiner and (_equals(p, p.next) or _area(p.prev, p, p.next) == 0):
            _remove_node(p)
            p = end = p.prev
            if p is p.next:
                break
            again = True
        else:
            p = p.next
        if not again and p is end:
            break
    return end


def _earcut_linked(ear, triangles, mode=0):
    if not ear:
        return
    stop = ear
    while ear.prev is not ear.next:
        prev = ear.prev
        nxt = ear.next
        if _is_ear(ear):
            triangles.append(prev.i)
            triangles.append(ear.i)
            triangles.append(nxt.i)
            _remove_node(ear)
            # skipping one vertex produces fewer sliver triangles
            ear = nxt.next
            stop = nxt.next
            continue
        ear = nxt
        if ear is stop:
            if mode == 0:
                _earcut_linked(_filter_points(ear), triangles, 1)
            elif mode == 1:
                ear = _cure_local_intersections(_filter_points(ear), triangles)
                _earcut_linked(ear, triangles, 2)
            elif mode == 2:
                _split_earcut(ear, triangles)
            break


def _is_ear(ear):
    a, b, c = ear.prev, ear, ear.next
    if _area(a, b, c) >= 0:
        return False  # reflex corner
    x0 = min(a.x, b.x, c.x)
    y0 = min(a.y, b.y, c.y)
    x1 = max(a.x, b.x, c.x)
    y1 = max(a.y, b.y, c.y)
    p = c.next
    while p is not a:
        if (
            x0 <= p.x <= x1
            and y0 <= p.y <= y1
            and _point_in_triangle(a.x, a.y, b.x, b.y, c.x, c.y, p.x, p.y)
            and _area(p.prev, p, p.next) >= 0
        ):
            return False
        p = p.next
    return True


def _cure_local_intersections(start, triangles):
    p = start
    while True:
        a = p.prev
        b = p.next.next
        if (
            not _equals(a, b)
            and _intersects(a, p, p.next, b)
            and _locally_inside(a, b)
            and _locally_inside(b, a)
        ):
            triangles.append(a.i)
            triangles.append(p.i)
            triangles.append(b.i)
            _remove_node(p)
            _remove_node(p.next)
            p = start = b
        p = p.next
        if p is start:
            break
    return _filter_points(p)


def _split_earcut(start, triangles):
    a = start
    while True:
        b = a.next.next
        while b is not a.prev:
            if a.i != b.i and _is_valid_diagonal(a, b):
                c = _split_polygon(a, b)
                a = _filter_points(a, a.next)
                c = _filter_points(c, c.next)
                _earcut_linked(a, triangles)
                _earcut_linked(c, triangles)
                return
            b = b.next
        a = a.next
        if a is start:
            break


def _eliminate_holes(vertices, hole_starts, outer_node):
    queue = []
    for k, start in enumerate(hole_starts):
        end = hole_starts[k + 1] if k + 1 < len(hole_starts) else len(vertices)
        lst = _linked_list(vertices, start, end, ccw=False)
        if lst:
            if lst is lst.next:
                lst.steiner = True
            queue.append(_get_leftmost(lst))
    queue.sort(key=lambda node: (node.x, node.y))
    for hole in queue:
        outer_node = _eliminate_hole(hole, outer_node)
    return outer_node


def _eliminate_hole(hole, outer_node):
    bridge = _find_hole_bridge(hole, outer_node)
    if not bridge:
        return outer_node
    bridge_reverse = _split_polygon(bridge, hole)
    _filter_points(bridge_reverse, bridge_reverse.next)
    return _filter_points(bridge, bridge.next)


def _find_hole_bridge(hole, outer_node):
    # David Eberly's visibility walk: cast a ray left from the hole's
    # leftmost point, then refine against reflex vertices in the way.
    p = outer_node
    hx, hy = hole.x, hole.y
    qx = -math.inf
    m = None

    while True:
        if hy <= p.y and hy >= p.next.y and p.next.y != p.y:
            x = p.x + (hy - p.y) * (p.next.x - p.x) / (p.next.y - p.y)
            if x <= hx and x > qx:
                qx = x
                m = p if p.x < p.next.x else p.next
                if x == hx:
                    return m  # hole touches the outer segment at a vertex
        p = p.next
        if p is outer_node:
            break

    if not m:
        return None

    stop = m
    mx, my = m.x, m.y
    tan_min = math.inf
    p = m
    while True:
        if (hx >= p.x >= mx and hx != p.x) and _point_in_triangle(
            hx if hy < my else qx, hy, mx, my, qx if hy < my else hx, hy, p.x, p.y
        ):
            tan = abs(hy - p.y) / (hx - p.x)
            if _locally_inside(p, hole) and (
                tan < tan_min
                or (
                    tan == tan_min
                    and (p.x > m.x or (p.x == m.x and _sector_contains_sector(m, p)))
                )
            ):
                m = p
                tan_min = tan
        p = p.next
        if p is stop:
            break
    return m


def _sector_contains_sector(m, p):
    return _area(m.prev, m, p.prev) < 0 and _area(p.next, m, m.next) < 0


def _get_leftmost(start):
    p = start
    leftmost = start
    while True:
        if p.x < leftmost.x or (p.x == leftmost.x and p.y < leftmost.y):
            leftmost = p
        p = p.next
        if p is start:
            break
    return leftmost


def _point_in_triangle(ax, ay, bx, by, cx, cy, px, py):
    return (
        (cx - px) * (ay - py) - (ax - px) * (cy - py) >= 0
        and (ax - px) * (by - py) - (bx - px) * (ay - py) >= 0
        and (bx - px) * (cy - py) - (cx - px) * (by - py) >= 0
    )


def _is_valid_diagonal(a, b):
    return (
        a.next.i != b.i
        and a.prev.i != b.i
        and not _intersects_polygon(a, b)
        and (
            _locally_inside(a, b)
            and _locally_inside(b, a)
            and _middle_inside(a, b)
            and (_area(a.prev, a, b.prev) or _area(a, b.prev, b))
            or _equals(a, b)
            and _area(a.prev, a, a.next) > 0
            and _area(b.prev, b, b.next) > 0
        )
    )


def _area(p, q, r):
    # negated cross product: negative means a CCW corner
    return (q.y - p.y) * (r.x - q.x) - (q.x - p.x) * (r.y - q.y)


def _equals(p1, p2):
    return p1.x == p2.x and p1.y == p2.y


def _intersects(p1, q1, p2, q2):
    o1 = _sign(_area(p1, q1, p2))
    o2 = _sign(_area(p1, q1, q2))
    o3 = _sign(_area(p2, q2, p1))
    o4 = _sign(_area(p2, q2, q1))
    return (
        (o1 != o2 and o3 != o4)
        or (o1 == 0 and _on_segment(p1, p2, q1))
        or (o2 == 0 and _on_segment(p1, q2, q1))
        or (o3 == 0 and _on_segment(p2, p1, q2))
        or (o4 == 0 and _on_segment(p2, q1, q2))
    )


def _on_segment(p, q, r):
    return min(p.x, r.x) <= q.x <= max(p.x, r.x) and min(p.y, r.y) <= q.y <= max(p.y, r.y)


def _sign(num):
    return (num > 0) - (num < 0)


def _intersects_polygon(a, b):
    p = a
    while True:
        if (
            p.i != a.i
            and p.next.i != a.i
            and p.i != b.i
            and p.next.i != b.i
            and _intersects(p, p.next, a, b)
        ):
            return True
        p = p.next
        if p is a:
            break
    return False


def _locally_inside(a, b):
    if _area(a.prev, a, a.next) < 0:
        return _area(a, b, a.next) >= 0 and _area(a, a.prev, b) >= 0
    return _area(a, b, a.prev) < 0 or _area(a, a.next, b) < 0


def _middle_inside(a, b):
    p = a
    inside = False
    px = (a.x + b.x) / 2
    py = (a.y + b.y) / 2
    while True:
        if (
            (p.y > py) != (p.next.y > py)
            and p.next.y != p.y
            and px < (p.next.x - p.x) * (py - p.y) / (p.next.y - p.y) + p.x
        ):
            inside = not inside
        p = p.next
        if p is a:
            break
    return inside


def _split_polygon(a, b):
    a2 = _Node(a.i, a.x, a.y)
    b2 = _Node(b.i, b.x, b.y)
    an = a.next
    bp = b.prev

    a.next = b
    b.prev = a
    a2.next = an
    an.prev = a2
    b2.next = a2
    a2.prev = b2
    bp.next = b2
    b2.prev = bp
    return b2


def _insert_node(i, x, y, last):
    p = _Node(i, x, y)
    if not last:
        p.prev = p
        p.next = p
    else:
        p.next = last.next
        p.prev = last
        last.next.prev = p
        last.next = p
    return p


def _remove_node(p):
    p.next.prev = p.prev
    p.prev.next = p.next
